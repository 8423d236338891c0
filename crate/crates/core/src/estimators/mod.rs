//! Stateful gradient estimators `g_k` for the iteration
//! `x_{k+1} = prox_{γ_k R}(x_k - γ_k g_k)`, with the constants of the unified
//! second-moment / noise-recursion bounds they satisfy.

mod diana;
mod quantizer;
mod saga;
mod sega;
mod sgd;
mod svrg;

use serde::{Deserialize, Serialize};

pub use diana::Diana;
pub use quantizer::Quantizer;
pub use saga::Saga;
pub use sega::Sega;
pub use sgd::SgdAs;
pub use svrg::LSvrg;

use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, ReferenceSolution};
use crate::rng::RngStreams;

/// Constants `(A, B, ρ, C, D1, D2)` such that
///
/// ```text
/// E[‖g_k - ∇f(x*)‖² | x_k]  ≤ 2A·D_f(x_k, x*) + B·σ_k² + D1
/// E[σ_{k+1}² | x_k]         ≤ (1 - ρ)·σ_k² + 2C·D_f(x_k, x*) + D2
/// ```
///
/// plus the optional `G` with `σ_0² ≤ G‖x_0 - x*‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub a: f64,
    pub b: f64,
    pub rho: f64,
    pub c: f64,
    pub d1: f64,
    pub d2: f64,
    pub g: Option<f64>,
}

/// How `M` is formed from `B` and `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MConvention {
    /// `M = B/ρ`, valid for any regularizer.
    General,
    /// `M = B/(2ρ)`, the sharper choice available when `R = 0`.
    Smooth,
}

impl AssumptionConstants {
    pub fn m(&self, convention: MConvention) -> f64 {
        if self.b == 0.0 {
            return 0.0;
        }
        match convention {
            MConvention::General => self.b / self.rho,
            MConvention::Smooth => self.b / (2.0 * self.rho),
        }
    }

    /// `A + M·C`.
    pub fn a_plus_mc(&self, convention: MConvention) -> f64 {
        self.a + self.m(convention) * self.c
    }

    pub fn is_variance_reduced(&self) -> bool {
        self.d1 == 0.0 && self.d2 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.a, self.b, self.rho, self.c, self.d1, self.d2, self.g.unwrap_or(0.0)];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("constants must be finite and nonnegative: {self:?}")));
        }
        if self.rho > 1.0 || (self.b > 0.0 && self.rho == 0.0) {
            return Err(Error::InvalidParameter(format!("ρ = {} must lie in (0, 1] when B > 0", self.rho)));
        }
        Ok(())
    }
}

/// One branch of the estimator's internal randomness at a fixed `x_k`.
#[derive(Debug, Clone)]
pub struct Outcome<E> {
    pub probability: f64,
    pub gradient: Vec<f64>,
    /// Estimator state after this branch.
    pub next: E,
}

pub trait GradientEstimator: Clone + Send + Sync + std::fmt::Debug {
    fn name(&self) -> &'static str;

    /// Resets the state at `x_0` and the evaluation counter.
    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()>;

    fn is_initialized(&self) -> bool;

    /// Draws `g_k` at `x_k` and advances the internal state.
    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>>;

    /// Every branch `next_gradient` could take from the current state, with
    /// its probability. Errors when the randomness is not enumerable.
    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>>;

    fn constants(&self, problem: &CompositeProblem, reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants>;

    /// The current `σ_k²`.
    fn sigma_sq(&self, problem: &CompositeProblem, reference: &ReferenceSolution) -> Result<f64>;

    /// Cumulative cost in component-gradient evaluations, including initialization.
    fn grad_evals(&self) -> f64;

    /// Minibatch (or miniblock) size for reporting.
    fn batch_size(&self) -> usize;
}

/// Runtime choice among the concrete estimators.
#[derive(Debug, Clone)]
pub enum Estimator {
    Sgd(SgdAs),
    Saga(Saga),
    LSvrg(LSvrg),
    Sega(Sega),
    Diana(Diana),
}

macro_rules! dispatch {
    ($self:expr, $e:ident => $body:expr) => {
        match $self {
            Estimator::Sgd($e) => $body,
            Estimator::Saga($e) => $body,
            Estimator::LSvrg($e) => $body,
            Estimator::Sega($e) => $body,
            Estimator::Diana($e) => $body,
        }
    };
}

fn wrap<E: GradientEstimator>(outcomes: Vec<Outcome<E>>, f: impl Fn(E) -> Estimator) -> Vec<Outcome<Estimator>> {
    outcomes
        .into_iter()
        .map(|o| Outcome { probability: o.probability, gradient: o.gradient, next: f(o.next) })
        .collect()
}

impl GradientEstimator for Estimator {
    fn name(&self) -> &'static str {
        dispatch!(self, e => e.name())
    }

    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
        dispatch!(self, e => e.initialize(problem, x0))
    }

    fn is_initialized(&self) -> bool {
        dispatch!(self, e => e.is_initialized())
    }

    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>> {
        dispatch!(self, e => e.next_gradient(problem, x, rng))
    }

    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>> {
        Ok(match self {
            Estimator::Sgd(e) => wrap(e.outcomes(problem, x)?, Estimator::Sgd),
            Estimator::Saga(e) => wrap(e.outcomes(problem, x)?, Estimator::Saga),
            Estimator::LSvrg(e) => wrap(e.outcomes(problem, x)?, Estimator::LSvrg),
            Estimator::Sega(e) => wrap(e.outcomes(problem, x)?, Estimator::Sega),
            Estimator::Diana(e) => wrap(e.outcomes(problem, x)?, Estimator::Diana),
        })
    }

    fn constants(&self, problem: &CompositeProblem, reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants> {
        dispatch!(self, e => e.constants(problem, reference))
    }

    fn sigma_sq(&self, problem: &CompositeProblem, reference: &ReferenceSolution) -> Result<f64> {
        dispatch!(self, e => e.sigma_sq(problem, reference))
    }

    fn grad_evals(&self) -> f64 {
        dispatch!(self, e => e.grad_evals())
    }

    fn batch_size(&self) -> usize {
        dispatch!(self, e => e.batch_size())
    }
}

fn check_x(problem: &CompositeProblem, x: &[f64]) -> Result<()> {
    problem.check_dim(x)
}

fn require<T>(state: &Option<T>) -> Result<&T> {
    state.as_ref().ok_or(Error::Uninitialized)
}
