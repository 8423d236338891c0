use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, ReferenceSolution};

pub const DEFAULT_REFERENCE_TOL: f64 = 1e-10;
pub const REFERENCE_MAX_ITERS: u64 = 10_000_000;

/// Deterministic proximal gradient with `γ = 1/L` from `x = 0`, stopped when
/// the fixed-point residual `‖x - prox_{γR}(x - γ∇f(x))‖` drops to `tol`.
///
/// Hitting the iteration cap is not an error: the result comes back with
/// `converged = false` and the residual actually reached.
pub fn solve_reference(problem: &CompositeProblem, tol: f64) -> Result<ReferenceSolution> {
    solve_reference_capped(problem, tol, REFERENCE_MAX_ITERS)
}

pub fn solve_reference_capped(problem: &CompositeProblem, tol: f64, max_iters: u64) -> Result<ReferenceSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("reference tolerance must be positive, got {tol}")));
    }
    let obj = &problem.objective;
    let l = obj.l();
    if !(l > 0.0) {
        return Err(Error::InvalidParameter("smoothness constant L is zero; the problem is degenerate".into()));
    }
    let gamma = 1.0 / l;
    let mut x = vec![0.0; problem.d()];
    let mut residual = f64::INFINITY;
    let mut iterations = 0u64;
    while iterations < max_iters {
        let g = obj.grad_full_unchecked(&x);
        let mut y = x.clone();
        linalg::axpy(-gamma, &g, &mut y);
        problem.regularizer.prox_in_place(gamma, &mut y);
        residual = linalg::dist_sq(&x, &y).sqrt();
        if residual <= tol {
            // x already meets the tolerance; keep it rather than the extra step
            break;
        }
        x = y;
        iterations += 1;
    }
    let mut sol = ReferenceSolution::at(problem, x)?;
    sol.tol_achieved = residual;
    sol.iterations = iterations;
    sol.converged = residual <= tol;
    Ok(sol)
}
