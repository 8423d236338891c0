use rand::Rng;

use super::{check_x, require, AssumptionConstants, GradientEstimator, Outcome};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::problem::{CompositeProblem, ReferenceSolution};
use crate::rng::RngStreams;
use crate::sampling::{expected_smoothness_b_nice, SampledBatch, SamplingScheme};

/// Loopless SVRG over b-nice batches: the anchor `w` moves to the current
/// iterate with probability `p` after each gradient.
#[derive(Debug, Clone)]
pub struct LSvrg {
    b: usize,
    p: Option<f64>,
    state: Option<LSvrgState>,
    evals: f64,
}

#[derive(Debug, Clone)]
pub struct LSvrgState {
    pub anchor: Vec<f64>,
    /// `∇f(anchor)`.
    pub anchor_grad: Vec<f64>,
    pub p: f64,
}

impl LSvrg {
    /// Refresh probability defaults to `1/n`.
    pub fn new(b: usize) -> Self {
        Self { b, p: None, state: None, evals: 0.0 }
    }

    pub fn with_probability(b: usize, p: f64) -> Self {
        Self { b, p: Some(p), state: None, evals: 0.0 }
    }

    pub fn state(&self) -> Option<&LSvrgState> {
        self.state.as_ref()
    }

    pub fn probability(&self, n: usize) -> f64 {
        self.p.unwrap_or(1.0 / n as f64)
    }

    fn scheme(&self, n: usize) -> Result<SamplingScheme> {
        SamplingScheme::b_nice(n, self.b)
    }

    fn gradient(&self, state: &LSvrgState, problem: &CompositeProblem, x: &[f64], batch: &SampledBatch) -> Vec<f64> {
        let obj = &problem.objective;
        let mut g = state.anchor_grad.clone();
        let inv_b = 1.0 / batch.indices.len() as f64;
        for &i in &batch.indices {
            obj.oracle().add_gradient(i, x, inv_b, &mut g);
            obj.oracle().add_gradient(i, &state.anchor, -inv_b, &mut g);
        }
        g
    }
}

impl GradientEstimator for LSvrg {
    fn name(&self) -> &'static str {
        "lsvrg"
    }

    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
        check_x(problem, x0)?;
        self.scheme(problem.n())?;
        let p = self.probability(problem.n());
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("refresh probability {p} outside (0, 1]")));
        }
        self.state = Some(LSvrgState { anchor: x0.to_vec(), anchor_grad: problem.objective.grad_full_unchecked(x0), p });
        self.evals = problem.n() as f64;
        Ok(())
    }

    fn is_initialized(&self) -> bool {
        self.state.is_some()
    }

    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>> {
        let state = require(&self.state)?;
        check_x(problem, x)?;
        let batch = self.scheme(problem.n())?.draw(&mut rng.batch);
        let g = self.gradient(state, problem, x, &batch);
        self.evals += 2.0 * self.b as f64;
        let refresh = rng.coin.random::<f64>() < state.p;
        if refresh {
            let anchor_grad = problem.objective.grad_full_unchecked(x);
            let state = self.state.as_mut().expect("checked above");
            state.anchor.copy_from_slice(x);
            state.anchor_grad = anchor_grad;
            self.evals += problem.n() as f64;
        }
        Ok(g)
    }

    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>> {
        let state = require(&self.state)?;
        check_x(problem, x)?;
        let n = problem.n();
        let refreshed = LSvrgState { anchor: x.to_vec(), anchor_grad: problem.objective.grad_full_unchecked(x), p: state.p };
        let mut out = Vec::new();
        for point in self.scheme(n)?.enumerate_support()? {
            let gradient = self.gradient(state, problem, x, &point.batch);
            let base = self.evals + 2.0 * self.b as f64;
            if state.p > 0.0 {
                out.push(Outcome {
                    probability: point.probability * state.p,
                    gradient: gradient.clone(),
                    next: LSvrg { state: Some(refreshed.clone()), evals: base + n as f64, ..self.clone() },
                });
            }
            if state.p < 1.0 {
                out.push(Outcome {
                    probability: point.probability * (1.0 - state.p),
                    gradient,
                    next: LSvrg { evals: base, ..self.clone() },
                });
            }
        }
        Ok(out)
    }

    /// `A = 2𝓛(b)`, `B = 2`, `ρ = p`, `C = p𝓛(b)`, `G = 𝓛(b)L`.
    fn constants(&self, problem: &CompositeProblem, _reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants> {
        let obj = &problem.objective;
        let n = obj.n();
        self.scheme(n)?;
        let p = self.probability(n);
        let smoothness = expected_smoothness_b_nice(n, self.b, obj.l_max(), obj.l());
        Ok(AssumptionConstants {
            a: 2.0 * smoothness,
            b: 2.0,
            rho: p,
            c: p * smoothness,
            d1: 0.0,
            d2: 0.0,
            g: Some(smoothness * obj.l()),
        })
    }

    /// `E_B ‖∇f_B(w) - ∇f_B(x*) - (∇f(w) - ∇f(x*))‖²`, exact over the batch
    /// distribution.
    fn sigma_sq(&self, problem: &CompositeProblem, reference: &ReferenceSolution) -> Result<f64> {
        let state = require(&self.state)?;
        let n = problem.n();
        let jac = problem.objective.jacobian_unchecked(&state.anchor);
        let diff = linalg::sub(jac.as_slice(), reference.jacobian_star.as_slice());
        let z = Matrix::from_row_major(n, problem.d(), diff);
        self.scheme(n)?.sampled_mean_variance(&z)
    }

    fn grad_evals(&self) -> f64 {
        self.evals
    }

    fn batch_size(&self) -> usize {
        self.b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{FiniteSumObjective, LinearModel, Loss};

    fn problem() -> CompositeProblem {
        let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![-0.3, 2.0], vec![0.7, -1.0]]);
        CompositeProblem::smooth(
            FiniteSumObjective::from_components(LinearModel::new(Loss::LeastSquares, a, vec![1.0, 0.0, -1.0]).unwrap())
                .unwrap(),
        )
    }

    #[test]
    fn gradient_at_anchor_is_exact() {
        let p = problem();
        let x0 = [0.4, -0.7];
        let mut est = LSvrg::new(1);
        est.initialize(&p, &x0).unwrap();
        let g = est.next_gradient(&p, &x0, &mut RngStreams::new(3)).unwrap();
        let full = p.objective.grad_full(&x0).unwrap();
        for (a, b) in g.iter().zip(&full) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let p = problem();
        let mut est = LSvrg::with_probability(2, 0.3);
        est.initialize(&p, &[0.0, 0.0]).unwrap();
        let outs = est.outcomes(&p, &[1.0, 1.0]).unwrap();
        assert_eq!(outs.len(), 6);
        let total: f64 = outs.iter().map(|o| o.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn refresh_always_with_p_one() {
        let p = problem();
        let mut est = LSvrg::with_probability(1, 1.0);
        est.initialize(&p, &[0.0, 0.0]).unwrap();
        est.next_gradient(&p, &[1.0, 2.0], &mut RngStreams::new(0)).unwrap();
        assert_eq!(est.state().unwrap().anchor, vec![1.0, 2.0]);
        assert_eq!(est.grad_evals(), 3.0 + 2.0 + 3.0);
    }
}
