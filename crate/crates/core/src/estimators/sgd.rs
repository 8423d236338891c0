use super::{check_x, AssumptionConstants, GradientEstimator, Outcome};
use crate::error::{Error, Result};
use crate::problem::{gradient_noise, CompositeProblem, NoiseMode, ReferenceSolution};
use crate::rng::RngStreams;
use crate::sampling::SamplingScheme;

/// SGD with arbitrary sampling: `g_k = ∇f_{v_k}(x_k)`, `σ_k ≡ 0`.
///
/// With `NoiseMode::Centered` the constants are `A = 2𝓛`, `D1 = 2σ²` for the
/// sampling's gradient noise. `NoiseMode::Uncentered` is the plain uniform
/// single-element variant, with `σ² = (1/n) Σ ‖∇f_i(x*)‖²`.
#[derive(Debug, Clone)]
pub struct SgdAs {
    scheme: SamplingScheme,
    noise: NoiseMode,
    ready: bool,
    evals: f64,
}

impl SgdAs {
    pub fn new(scheme: SamplingScheme) -> Self {
        Self { scheme, noise: NoiseMode::Centered, ready: false, evals: 0.0 }
    }

    /// Uniform single-element SGD with the uncentered noise constant.
    pub fn uniform(n: usize) -> Result<Self> {
        Ok(Self { noise: NoiseMode::Uncentered, ..Self::new(SamplingScheme::uniform_single(n)?) })
    }

    pub fn with_noise_mode(mut self, noise: NoiseMode) -> Self {
        self.noise = noise;
        self
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn noise_mode(&self) -> NoiseMode {
        self.noise
    }

    fn check_problem(&self, problem: &CompositeProblem) -> Result<()> {
        if self.scheme.n() != problem.n() {
            return Err(Error::InvalidParameter(format!(
                "sampling over {} components used with {} components",
                self.scheme.n(),
                problem.n()
            )));
        }
        Ok(())
    }
}

impl GradientEstimator for SgdAs {
    fn name(&self) -> &'static str {
        "sgd"
    }

    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
        self.check_problem(problem)?;
        check_x(problem, x0)?;
        self.ready = true;
        self.evals = 0.0;
        Ok(())
    }

    fn is_initialized(&self) -> bool {
        self.ready
    }

    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>> {
        if !self.ready {
            return Err(Error::Uninitialized);
        }
        check_x(problem, x)?;
        let batch = self.scheme.draw(&mut rng.batch);
        self.evals += batch.indices.len() as f64;
        Ok(problem.objective.grad_weighted_unchecked(&batch.indices, &batch.weights, x))
    }

    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>> {
        if !self.ready {
            return Err(Error::Uninitialized);
        }
        check_x(problem, x)?;
        self.scheme
            .enumerate_support()?
            .into_iter()
            .map(|p| {
                let mut next = self.clone();
                next.evals += p.batch.indices.len() as f64;
                Ok(Outcome {
                    probability: p.probability,
                    gradient: problem.objective.grad_weighted_unchecked(&p.batch.indices, &p.batch.weights, x),
                    next,
                })
            })
            .collect()
    }

    fn constants(&self, problem: &CompositeProblem, reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants> {
        self.check_problem(problem)?;
        let smoothness = self.scheme.expected_smoothness(&problem.objective)?;
        let sigma = if self.scheme.is_deterministic() && self.noise == NoiseMode::Centered {
            0.0
        } else {
            let r = reference.ok_or(Error::MissingReference("the gradient noise of SGD"))?;
            gradient_noise(problem, &self.scheme, r, self.noise)?
        };
        Ok(AssumptionConstants { a: 2.0 * smoothness, b: 0.0, rho: 1.0, c: 0.0, d1: 2.0 * sigma, d2: 0.0, g: None })
    }

    fn sigma_sq(&self, _problem: &CompositeProblem, _reference: &ReferenceSolution) -> Result<f64> {
        Ok(0.0)
    }

    fn grad_evals(&self) -> f64 {
        self.evals
    }

    fn batch_size(&self) -> usize {
        self.scheme.batch_size()
    }
}
