//! Drives `x_{k+1} = prox_{γ_k R}(x_k - γ_k g_k)` for any estimator, keeping
//! the weighted average iterate and a sparse log of the run.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::records::fmt_f64;
use crate::error::{Error, Result};
use crate::estimators::{AssumptionConstants, GradientEstimator, MConvention};
use crate::linalg;
use crate::problem::{CompositeProblem, ReferenceSolution};
use crate::rng::RngStreams;
use crate::theory::{default_constant_step, jensen_weight, StepSizePolicy};

pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingRule {
    pub max_iters: u64,
    /// Stop once `F(x_k) - F* < eps_rel (F(x_0) - F*)`.
    pub eps_rel: Option<f64>,
    /// Log every this many iterations; `None` means `max(1, max_iters/1000)`.
    pub log_every: Option<u64>,
}

impl StoppingRule {
    pub fn new(max_iters: u64) -> Self {
        Self { max_iters, eps_rel: None, log_every: None }
    }

    pub fn with_eps_rel(mut self, eps: f64) -> Self {
        self.eps_rel = Some(eps);
        self
    }

    pub fn with_log_every(mut self, every: u64) -> Self {
        self.log_every = Some(every);
        self
    }

    pub fn cadence(&self) -> u64 {
        self.log_every.unwrap_or((self.max_iters / 1000).max(1)).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if let Some(e) = self.eps_rel {
            if !(e > 0.0) {
                return Err(Error::InvalidParameter(format!("eps_rel must be positive, got {e}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub policy: StepSizePolicy,
    pub stop: StoppingRule,
    /// Convention for `M` in the step threshold and the averaging weights.
    pub convention: MConvention,
    /// Skip the step-size threshold check.
    pub allow_unsafe_step: bool,
    pub seed: u64,
    /// Keep every iterate and weight (memory heavy; for testing).
    pub keep_iterates: bool,
}

impl RunConfig {
    pub fn new(policy: StepSizePolicy, stop: StoppingRule, seed: u64) -> Self {
        Self { policy, stop, convention: MConvention::General, allow_unsafe_step: false, seed, keep_iterates: false }
    }

    pub fn with_convention(mut self, convention: MConvention) -> Self {
        self.convention = convention;
        self
    }

    pub fn allow_unsafe(mut self) -> Self {
        self.allow_unsafe_step = true;
        self
    }

    pub fn keep_iterates(mut self) -> Self {
        self.keep_iterates = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub k: u64,
    /// Step used for the transition out of `x_k`.
    pub gamma: f64,
    /// `F(x_k) - F*`.
    pub subopt: f64,
    /// `F(x̄_k) - F*`; `δ0` at `k = 0`, NaN when averaging is off.
    pub avg_subopt: f64,
    pub sigma_sq: f64,
    pub grad_evals: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub algo: String,
    pub batch_size: usize,
    pub seed: u64,
    pub constants: AssumptionConstants,
    pub delta0: f64,
    pub log: Vec<LogEntry>,
    pub iterations: u64,
    pub converged: bool,
    pub grad_evals: f64,
    pub x_final: Vec<f64>,
    /// Weighted average of `x_0, …, x_{t-1}`; `None` at `t = 0` or with averaging off.
    pub x_avg: Option<Vec<f64>>,
    /// Sum of the averaging weights.
    pub weight_sum: f64,
    pub averaging: bool,
    /// `x_0, …, x_t` when requested.
    pub iterates: Vec<Vec<f64>>,
    /// Averaging weights per step when requested.
    pub weights: Vec<f64>,
}

impl Trajectory {
    pub fn final_subopt(&self) -> f64 {
        self.log.last().map_or(f64::NAN, |e| e.subopt)
    }

    pub fn final_rel_subopt(&self) -> f64 {
        if self.delta0 > 0.0 {
            self.final_subopt() / self.delta0
        } else {
            0.0
        }
    }
}

/// Runs `estimator` from `x0`. The estimator is initialized here.
pub fn run<E: GradientEstimator>(
    problem: &CompositeProblem,
    estimator: &mut E,
    x0: &[f64],
    reference: &ReferenceSolution,
    config: &RunConfig,
) -> Result<Trajectory> {
    config.stop.validate()?;
    config.policy.validate()?;
    problem.check_dim(x0)?;
    if config.convention == MConvention::Smooth && !problem.regularizer.is_zero() {
        return Err(Error::InvalidParameter("the smooth M convention requires a zero regularizer".into()));
    }
    estimator.initialize(problem, x0)?;
    let constants = estimator.constants(problem, Some(reference))?;
    let amc = constants.a_plus_mc(config.convention);
    let gamma0 = config.policy.initial();
    if !config.allow_unsafe_step {
        let threshold = default_constant_step(&constants, problem.objective.l(), config.convention)?;
        if gamma0 > threshold * (1.0 + 1e-12) {
            return Err(Error::StepThreshold { gamma: gamma0, threshold });
        }
    }

    let f_star = reference.f_star;
    let delta0 = problem.value_unchecked(x0) - f_star;
    let limit = DIVERGENCE_FACTOR * delta0.max(1e-12 * (1.0 + f_star.abs()));
    let target = config.stop.eps_rel.map(|e| e * delta0);
    let cadence = config.stop.cadence();
    let d = problem.d();

    let mut rng = RngStreams::new(config.seed);
    let mut x = x0.to_vec();
    let mut avg_sum = vec![0.0; d];
    let mut weight_sum = 0.0;
    let mut averaging = true;
    let mut log = Vec::new();
    let mut iterates = Vec::new();
    let mut weights = Vec::new();
    if config.keep_iterates {
        iterates.push(x.clone());
    }

    log.push(LogEntry {
        k: 0,
        gamma: gamma0,
        subopt: delta0,
        avg_subopt: delta0,
        sigma_sq: estimator.sigma_sq(problem, reference)?,
        grad_evals: estimator.grad_evals(),
    });

    let mut converged = target.is_some_and(|t| delta0 <= t && delta0 <= 0.0);
    let mut k = 0u64;
    while !converged && k < config.stop.max_iters {
        let gamma = config.policy.step(k);
        let w = jensen_weight(gamma, amc);
        if averaging {
            if w > 0.0 {
                linalg::axpy(w, &x, &mut avg_sum);
                weight_sum += w;
            } else if config.allow_unsafe_step {
                averaging = false;
            } else {
                return Err(Error::StepThreshold { gamma, threshold: 0.5 / amc });
            }
        }
        if config.keep_iterates {
            weights.push(w);
        }

        let g = estimator.next_gradient(problem, &x, &mut rng)?;
        linalg::axpy(-gamma, &g, &mut x);
        problem.regularizer.prox_in_place(gamma, &mut x);
        k += 1;
        if config.keep_iterates {
            iterates.push(x.clone());
        }

        let subopt = problem.value_unchecked(&x) - f_star;
        if !subopt.is_finite() || subopt > limit {
            return Err(Error::Diverged { iteration: k, subopt, limit });
        }
        if let Some(t) = target {
            converged = subopt < t;
        }
        if converged || k.is_multiple_of(cadence) || k == config.stop.max_iters {
            let avg_subopt = if averaging && weight_sum > 0.0 {
                let xa: Vec<f64> = avg_sum.iter().map(|v| v / weight_sum).collect();
                problem.value_unchecked(&xa) - f_star
            } else {
                f64::NAN
            };
            log.push(LogEntry {
                k,
                gamma: config.policy.step(k),
                subopt,
                avg_subopt,
                sigma_sq: estimator.sigma_sq(problem, reference)?,
                grad_evals: estimator.grad_evals(),
            });
        }
    }

    let x_avg = (averaging && weight_sum > 0.0).then(|| avg_sum.iter().map(|v| v / weight_sum).collect());
    Ok(Trajectory {
        algo: estimator.name().to_string(),
        batch_size: estimator.batch_size(),
        seed: config.seed,
        constants,
        delta0,
        log,
        iterations: k,
        converged,
        grad_evals: estimator.grad_evals(),
        x_final: x,
        x_avg,
        weight_sum,
        averaging,
        iterates,
        weights,
    })
}

pub const TRAJECTORY_HEADER: [&str; 6] = ["k", "gamma", "subopt", "avg_subopt", "sigma_sq", "grad_evals"];

/// One row per log entry, floats at 17 significant digits.
pub fn write_trajectory_csv<W: Write>(trajectory: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for e in &trajectory.log {
        w.write_record([
            e.k.to_string(),
            fmt_f64(e.gamma),
            fmt_f64(e.subopt),
            fmt_f64(e.avg_subopt),
            fmt_f64(e.sigma_sq),
            fmt_f64(e.grad_evals),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn trajectory_csv_string(trajectory: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    write_trajectory_csv(trajectory, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::solve_reference;
    use crate::estimators::{Saga, SgdAs};
    use crate::linalg::Matrix;
    use crate::problem::{FiniteSumObjective, LinearModel, Loss};
    use crate::sampling::SamplingScheme;

    fn quad() -> CompositeProblem {
        let a = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.5], vec![-0.4, 0.3], vec![0.8, -0.6]]);
        CompositeProblem::smooth(
            FiniteSumObjective::from_components(LinearModel::new(Loss::LeastSquares, a, vec![1.0, -1.0, 0.5, 0.0]).unwrap())
                .unwrap(),
        )
    }

    #[test]
    fn full_batch_gradient_descent_is_monotone() {
        let p = quad();
        let r = solve_reference(&p, 1e-12).unwrap();
        let mut est = SgdAs::new(SamplingScheme::full_batch(4).unwrap());
        let gamma = 1.0 / p.objective.l();
        let cfg = RunConfig::new(StepSizePolicy::Constant { gamma }, StoppingRule::new(50).with_log_every(1), 0)
            .allow_unsafe();
        let t = run(&p, &mut est, &[0.0, 0.0], &r, &cfg).unwrap();
        assert!(t.log.windows(2).all(|w| w[1].subopt <= w[0].subopt + 1e-15));
    }

    #[test]
    fn step_threshold_enforced() {
        let p = quad();
        let r = solve_reference(&p, 1e-12).unwrap();
        let mut est = Saga::new(2);
        let cfg = RunConfig::new(StepSizePolicy::Constant { gamma: 10.0 }, StoppingRule::new(5), 0);
        assert!(matches!(run(&p, &mut est, &[0.0, 0.0], &r, &cfg), Err(Error::StepThreshold { .. })));
    }

    #[test]
    fn divergence_guard() {
        let p = quad();
        let r = solve_reference(&p, 1e-12).unwrap();
        let mut est = SgdAs::new(SamplingScheme::full_batch(4).unwrap());
        let gamma = 5.0 / p.objective.l();
        let cfg = RunConfig::new(StepSizePolicy::Constant { gamma }, StoppingRule::new(10_000), 0).allow_unsafe();
        assert!(matches!(run(&p, &mut est, &[0.0, 0.0], &r, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn single_step_average_is_start() {
        let p = quad();
        let r = solve_reference(&p, 1e-12).unwrap();
        let mut est = Saga::new(1);
        let gamma = crate::theory::saga_step(4, 1, p.objective.l_max(), p.objective.l());
        let cfg = RunConfig::new(StepSizePolicy::Constant { gamma }, StoppingRule::new(1), 3)
            .with_convention(MConvention::Smooth);
        let x0 = [0.3, -0.3];
        let t = run(&p, &mut est, &x0, &r, &cfg).unwrap();
        assert_eq!(t.x_avg.unwrap(), x0.to_vec());
        assert_eq!(t.iterations, 1);
    }

    #[test]
    fn smooth_convention_needs_zero_regularizer() {
        let mut p = quad();
        p.regularizer = crate::problem::Regularizer::L1(0.1);
        let r = solve_reference(&p, 1e-12).unwrap();
        let cfg = RunConfig::new(StepSizePolicy::Constant { gamma: 0.01 }, StoppingRule::new(1), 0)
            .with_convention(MConvention::Smooth);
        assert!(run(&p, &mut Saga::new(1), &[0.0, 0.0], &r, &cfg).is_err());
    }
}
