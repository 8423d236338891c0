use super::{check_x, require, AssumptionConstants, GradientEstimator, Outcome};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, ReferenceSolution};
use crate::rng::RngStreams;
use crate::sampling::{SampledBatch, SamplingScheme};

/// Miniblock SEGA: observes `b` uniformly chosen coordinates of `∇f(x_k)` per
/// iteration and keeps a running sketch `h` of the full gradient.
#[derive(Debug, Clone)]
pub struct Sega {
    b: usize,
    h: Option<Vec<f64>>,
    evals: f64,
}

impl Sega {
    pub fn new(b: usize) -> Self {
        Self { b, h: None, evals: 0.0 }
    }

    pub fn sketch(&self) -> Option<&[f64]> {
        self.h.as_deref()
    }

    /// Replaces the gradient sketch of an initialized estimator.
    pub fn set_sketch(&mut self, h: Vec<f64>) -> Result<()> {
        let cur = self.h.as_ref().ok_or(Error::Uninitialized)?;
        if cur.len() != h.len() {
            return Err(Error::DimensionMismatch { expected: cur.len(), got: h.len() });
        }
        self.h = Some(h);
        Ok(())
    }

    fn scheme(&self, d: usize) -> Result<SamplingScheme> {
        SamplingScheme::b_nice(d, self.b)
    }

    /// Cost of `b` of `d` coordinates of a full gradient, in component gradients.
    fn cost(&self, problem: &CompositeProblem) -> f64 {
        problem.n() as f64 * self.b as f64 / problem.d() as f64
    }

    fn apply(&self, h: &mut [f64], full: &[f64], block: &SampledBatch, d: usize) -> Vec<f64> {
        let mut g = h.to_vec();
        let scale = d as f64 / self.b as f64;
        for &j in &block.indices {
            let diff = full[j] - h[j];
            g[j] += scale * diff;
            h[j] = full[j];
        }
        g
    }
}

impl GradientEstimator for Sega {
    fn name(&self) -> &'static str {
        "sega"
    }

    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
        check_x(problem, x0)?;
        self.scheme(problem.d())?;
        self.h = Some(vec![0.0; problem.d()]);
        self.evals = 0.0;
        Ok(())
    }

    fn is_initialized(&self) -> bool {
        self.h.is_some()
    }

    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>> {
        require(&self.h)?;
        check_x(problem, x)?;
        let d = problem.d();
        let block = self.scheme(d)?.draw(&mut rng.batch);
        let full = problem.objective.grad_full_unchecked(x);
        let mut h = self.h.take().ok_or(Error::Uninitialized)?;
        let g = self.apply(&mut h, &full, &block, d);
        self.h = Some(h);
        self.evals += self.cost(problem);
        Ok(g)
    }

    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>> {
        let h = require(&self.h)?;
        check_x(problem, x)?;
        let d = problem.d();
        let full = problem.objective.grad_full_unchecked(x);
        self.scheme(d)?
            .enumerate_support()?
            .into_iter()
            .map(|p| {
                let mut next_h = h.clone();
                let gradient = self.apply(&mut next_h, &full, &p.batch, d);
                let next = Sega { b: self.b, h: Some(next_h), evals: self.evals + self.cost(problem) };
                Ok(Outcome { probability: p.probability, gradient, next })
            })
            .collect()
    }

    /// `A = 2dL/b`, `B = 2(d/b - 1)`, `ρ = b/d`, `C = bL/d`, `G = 0`.
    fn constants(&self, problem: &CompositeProblem, _reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants> {
        let d = problem.d();
        self.scheme(d)?;
        let l = problem.objective.l();
        let ratio = self.b as f64 / d as f64;
        Ok(AssumptionConstants {
            a: 2.0 * l / ratio,
            b: 2.0 * (1.0 / ratio - 1.0),
            rho: ratio,
            c: ratio * l,
            d1: 0.0,
            d2: 0.0,
            g: Some(0.0),
        })
    }

    /// `‖h - ∇f(x*)‖²`.
    fn sigma_sq(&self, _problem: &CompositeProblem, reference: &ReferenceSolution) -> Result<f64> {
        let h = require(&self.h)?;
        Ok(linalg::dist_sq(h, &reference.grad_star))
    }

    fn grad_evals(&self) -> f64 {
        self.evals
    }

    fn batch_size(&self) -> usize {
        self.b
    }
}
