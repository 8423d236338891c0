use super::{check_x, require, AssumptionConstants, GradientEstimator, Outcome};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::problem::{CompositeProblem, ReferenceSolution};
use crate::rng::RngStreams;
use crate::sampling::{expected_residual_b_nice, expected_smoothness_b_nice, SampledBatch, SamplingScheme};

/// Minibatch SAGA over b-nice batches.
#[derive(Debug, Clone)]
pub struct Saga {
    b: usize,
    state: Option<SagaState>,
    evals: f64,
}

/// Stored component gradients, one row per component, and their mean.
#[derive(Debug, Clone)]
pub struct SagaState {
    pub jacobian: Matrix,
    pub mean: Vec<f64>,
}

impl Saga {
    pub fn new(b: usize) -> Self {
        Self { b, state: None, evals: 0.0 }
    }

    pub fn state(&self) -> Option<&SagaState> {
        self.state.as_ref()
    }

    /// Replaces the stored table; the mean is recomputed.
    pub fn set_jacobian(&mut self, jacobian: Matrix) -> Result<()> {
        let state = self.state.as_mut().ok_or(Error::Uninitialized)?;
        if jacobian.rows() != state.jacobian.rows() || jacobian.cols() != state.jacobian.cols() {
            return Err(Error::DimensionMismatch { expected: state.jacobian.rows(), got: jacobian.rows() });
        }
        state.mean = column_mean(&jacobian);
        state.jacobian = jacobian;
        Ok(())
    }

    fn scheme(&self, n: usize) -> Result<SamplingScheme> {
        SamplingScheme::b_nice(n, self.b)
    }
}

/// Gradient for `batch`; replaces the batch rows of the table in place.
fn apply(state: &mut SagaState, problem: &CompositeProblem, x: &[f64], batch: &SampledBatch) -> Vec<f64> {
    let oracle = problem.objective.oracle();
    let n = problem.n() as f64;
    let inv_b = 1.0 / batch.indices.len() as f64;
    let mut g = state.mean.clone();
    let mut fresh = vec![0.0; problem.d()];
    for &i in &batch.indices {
        fresh.iter_mut().for_each(|v| *v = 0.0);
        oracle.add_gradient(i, x, 1.0, &mut fresh);
        let old = state.jacobian.row_mut(i);
        for ((gk, mk), (o, f)) in g.iter_mut().zip(state.mean.iter_mut()).zip(old.iter_mut().zip(&fresh)) {
            let diff = f - *o;
            *gk += inv_b * diff;
            *mk += diff / n;
            *o = *f;
        }
    }
    g
}

fn column_mean(m: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; m.cols()];
    let w = 1.0 / m.rows() as f64;
    for i in 0..m.rows() {
        linalg::axpy(w, m.row(i), &mut mean);
    }
    mean
}

impl GradientEstimator for Saga {
    fn name(&self) -> &'static str {
        "saga"
    }

    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
        check_x(problem, x0)?;
        self.scheme(problem.n())?;
        let jacobian = problem.objective.jacobian_unchecked(x0);
        self.state = Some(SagaState { mean: column_mean(&jacobian), jacobian });
        self.evals = problem.n() as f64;
        Ok(())
    }

    fn is_initialized(&self) -> bool {
        self.state.is_some()
    }

    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>> {
        check_x(problem, x)?;
        let batch = self.scheme(problem.n())?.draw(&mut rng.batch);
        let state = self.state.as_mut().ok_or(Error::Uninitialized)?;
        let g = apply(state, problem, x, &batch);
        self.evals += self.b as f64;
        Ok(g)
    }

    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>> {
        let state = require(&self.state)?;
        check_x(problem, x)?;
        self.scheme(problem.n())?
            .enumerate_support()?
            .into_iter()
            .map(|p| {
                let mut state = state.clone();
                let gradient = apply(&mut state, problem, x, &p.batch);
                let next = Saga { b: self.b, state: Some(state), evals: self.evals + self.b as f64 };
                Ok(Outcome { probability: p.probability, gradient, next })
            })
            .collect()
    }

    /// `A = 2𝓛(b)`, `B = 2`, `ρ = b/n`, `C = bζ(b)/n`, `G = ζ(b)L`.
    fn constants(&self, problem: &CompositeProblem, _reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants> {
        let obj = &problem.objective;
        let n = obj.n();
        self.scheme(n)?;
        let smoothness = expected_smoothness_b_nice(n, self.b, obj.l_max(), obj.l());
        let zeta = expected_residual_b_nice(n, self.b, obj.l_max());
        let ratio = self.b as f64 / n as f64;
        Ok(AssumptionConstants {
            a: 2.0 * smoothness,
            b: 2.0,
            rho: ratio,
            c: ratio * zeta,
            d1: 0.0,
            d2: 0.0,
            g: Some(zeta * obj.l()),
        })
    }

    /// `(1/(nb))((n-b)/(n-1)) ‖J - ∇H(x*)‖_F²`.
    fn sigma_sq(&self, problem: &CompositeProblem, reference: &ReferenceSolution) -> Result<f64> {
        let state = require(&self.state)?;
        let n = problem.n();
        if n == 1 {
            return Ok(0.0);
        }
        let frob = linalg::dist_sq(state.jacobian.as_slice(), reference.jacobian_star.as_slice());
        let (nf, bf) = (n as f64, self.b as f64);
        Ok(frob * (nf - bf) / (nf * bf * (nf - 1.0)))
    }

    fn grad_evals(&self) -> f64 {
        self.evals
    }

    fn batch_size(&self) -> usize {
        self.b
    }
}
