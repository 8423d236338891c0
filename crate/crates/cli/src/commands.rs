use std::fmt::Write as _;

use rayon::prelude::*;

use proxsgd::data::records::ExperimentRecord;
use proxsgd::estimators::{Estimator, GradientEstimator, MConvention};
use proxsgd::rng::derive_seed;
use proxsgd::runner::{run, RunConfig, StoppingRule, Trajectory};
use proxsgd::theory::{self, default_constant_step, StepSizePolicy};
use proxsgd::verify::{standard_suite, CheckReport};

use crate::config::{build_estimator, convention, load_problem, load_setup, Algo, ExperimentConfig, Setup};
use crate::error::{CliError, CliResult};

pub const DEFAULT_MAX_ITERS: u64 = 1_000_000;
pub const DEFAULT_GRID_EPS: f64 = 1e-4;

/// `min{1/(4(A + MC)), 1/(2L)}` for `est` started at `x0`.
pub fn default_step(setup: &Setup, est: &Estimator, x0: &[f64], conv: MConvention) -> CliResult<f64> {
    let mut probe = est.clone();
    probe.initialize(&setup.problem, x0)?;
    let c = probe.constants(&setup.problem, Some(&setup.reference))?;
    Ok(default_constant_step(&c, setup.problem.objective.l(), conv)?)
}

fn policy(cfg: &ExperimentConfig, setup: &Setup, est: &Estimator, x0: &[f64]) -> CliResult<StepSizePolicy> {
    if let Some(gamma) = cfg.gamma {
        return Ok(StepSizePolicy::Constant { gamma });
    }
    if let Some(gamma0) = cfg.gamma0_inv_sqrt {
        return Ok(StepSizePolicy::InvSqrt { gamma0 });
    }
    let gamma = default_step(setup, est, x0, convention(cfg, &setup.problem))?;
    Ok(StepSizePolicy::Constant { gamma })
}

fn run_config(cfg: &ExperimentConfig, setup: &Setup, policy: StepSizePolicy, max_iters: u64, seed: u64) -> RunConfig {
    let mut stop = StoppingRule::new(max_iters);
    stop.eps_rel = cfg.eps_rel;
    stop.log_every = cfg.log_every;
    let mut rc = RunConfig::new(policy, stop, seed).with_convention(convention(cfg, &setup.problem));
    rc.allow_unsafe_step = cfg.unsafe_step.unwrap_or(false);
    rc
}

/// One run from the origin.
pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<Trajectory> {
    let setup = load_setup(cfg)?;
    let x0 = vec![0.0; setup.problem.d()];
    let b = cfg.b.unwrap_or(1);
    let mut est = build_estimator(cfg, b, &setup.problem)?;
    let pol = policy(cfg, &setup, &est, &x0)?;
    let rc = run_config(cfg, &setup, pol, cfg.max_iters.unwrap_or(DEFAULT_MAX_ITERS), cfg.seed());
    Ok(run(&setup.problem, &mut est, &x0, &setup.reference, &rc)?)
}

pub fn run_summary(t: &Trajectory) -> String {
    format!(
        "{} b={} seed={} iterations={} converged={} grad_evals={} rel_subopt={:.3e}\n",
        t.algo,
        t.batch_size,
        t.seed,
        t.iterations,
        t.converged,
        t.grad_evals,
        t.final_rel_subopt()
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub b: usize,
    /// Median total gradient evaluations; infinite when fewer than half the
    /// replicates converged.
    pub median_grad_evals: f64,
    pub converged: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub records: Vec<ExperimentRecord>,
    pub rows: Vec<GridRow>,
    pub b_theory: Option<usize>,
    pub b_empirical: Option<usize>,
    pub eps_rel: f64,
}

fn default_grid(n: usize) -> Vec<usize> {
    let mut g: Vec<usize> = std::iter::successors(Some(1usize), |b| b.checked_mul(2)).take_while(|&b| b < n).collect();
    g.push(n);
    g
}

/// Theory-optimal batch size for the algorithms that have one.
pub fn theory_b(algo: Algo, setup_problem: &proxsgd::problem::CompositeProblem) -> CliResult<Option<usize>> {
    let obj = &setup_problem.objective;
    Ok(match algo {
        Algo::Saga => Some(theory::optimal_b_saga(obj.l(), obj.l_max(), obj.n())?),
        Algo::Lsvrg => Some(theory::optimal_b_svrg(obj.l(), obj.l_max(), obj.n())?),
        Algo::Sega => Some(theory::optimal_b_sega(setup_problem.d())?),
        Algo::Sgd | Algo::Diana => None,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        0.5 * (values[m / 2 - 1] + values[m / 2])
    }
}

/// Runs every `(b, replicate)` cell to `eps_rel` in parallel. The
/// theory-optimal `b` is added to the default grid; an explicit grid is used
/// as given.
pub fn cmd_grid(cfg: &ExperimentConfig, jobs: usize) -> CliResult<GridOutcome> {
    let setup = load_setup(cfg)?;
    let n = setup.problem.n();
    let algo = cfg.algo();
    let eps = cfg.eps_rel.unwrap_or(DEFAULT_GRID_EPS);
    let max_iters = cfg.max_iters.unwrap_or(DEFAULT_MAX_ITERS);
    let replicates = cfg.replicates.unwrap_or(5);
    let limit = if algo == Algo::Sega { setup.problem.d() } else { n };
    let b_theory = theory_b(algo, &setup.problem)?;
    let mut grid = match &cfg.grid {
        Some(g) => g.clone(),
        None => {
            let mut g = default_grid(limit);
            g.extend(b_theory);
            g
        }
    };
    grid.sort_unstable();
    grid.dedup();
    if let Some(&b) = grid.iter().find(|&&b| b > limit) {
        return Err(CliError::config(format!("batch size {b} exceeds {limit}")));
    }

    let mut cell_cfg = cfg.clone();
    cell_cfg.eps_rel = Some(eps);
    let x0 = vec![0.0; setup.problem.d()];
    let cells: Vec<(usize, u64)> = grid.iter().flat_map(|&b| (0..replicates).map(move |r| (b, r))).collect();
    let work = |&(b, r): &(usize, u64)| -> CliResult<ExperimentRecord> {
        let seed = derive_seed(&[cfg.seed(), b as u64, r]);
        let mut est = build_estimator(&cell_cfg, b, &setup.problem)?;
        let pol = policy(&cell_cfg, &setup, &est, &x0)?;
        let mut rc = run_config(&cell_cfg, &setup, pol, max_iters, seed);
        rc.stop.log_every = Some(max_iters);
        let gamma = pol.initial();
        Ok(match run(&setup.problem, &mut est, &x0, &setup.reference, &rc) {
            Ok(t) => ExperimentRecord {
                algo: t.algo.clone(),
                b,
                gamma,
                seed,
                iters: t.iterations,
                grad_evals: t.grad_evals,
                rel_subopt: t.final_rel_subopt(),
            },
            Err(proxsgd::Error::Diverged { iteration, .. }) => ExperimentRecord {
                algo: est.name().to_string(),
                b,
                gamma,
                seed,
                iters: iteration,
                grad_evals: est.grad_evals(),
                rel_subopt: f64::INFINITY,
            },
            Err(e) => return Err(e.into()),
        })
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build().map_err(CliError::config)?;
    let records: Vec<ExperimentRecord> = pool.install(|| cells.par_iter().map(work).collect::<CliResult<Vec<_>>>())?;

    let mut rows = Vec::with_capacity(grid.len());
    for &b in &grid {
        let mut costs: Vec<f64> = records
            .iter()
            .filter(|r| r.b == b)
            .map(|r| if r.rel_subopt < eps { r.grad_evals } else { f64::INFINITY })
            .collect();
        let converged = costs.iter().filter(|c| c.is_finite()).count();
        rows.push(GridRow { b, median_grad_evals: median(&mut costs), converged, replicates: costs.len() });
    }
    let b_empirical = rows
        .iter()
        .filter(|r| r.median_grad_evals.is_finite())
        .min_by(|x, y| x.median_grad_evals.total_cmp(&y.median_grad_evals).then(x.b.cmp(&y.b)))
        .map(|r| r.b);
    Ok(GridOutcome { records, rows, b_theory, b_empirical, eps_rel: eps })
}

impl GridOutcome {
    pub fn row(&self, b: usize) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.b == b)
    }

    pub fn summary(&self) -> String {
        let mut out = String::from("b,median_grad_evals,converged,replicates\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.b, r.median_grad_evals, r.converged, r.replicates);
        }
        let show = |b: Option<usize>| b.map_or("none".to_string(), |b| b.to_string());
        let _ = writeln!(out, "b*_theory = {}", show(self.b_theory));
        let _ = writeln!(out, "b*_empirical = {}", show(self.b_empirical));
        if let (Some(bt), Some(be)) = (self.b_theory, self.b_empirical) {
            if let (Some(t), Some(e)) = (self.row(bt), self.row(be)) {
                let _ = writeln!(out, "complexity ratio b*_theory / grid minimum = {:.4}", t.median_grad_evals / e.median_grad_evals);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalBReport {
    pub algo: Algo,
    pub n: usize,
    pub d: usize,
    pub l: f64,
    pub l_max: f64,
    pub b_star: usize,
    /// `K(b*)` in units of `‖x0 - x*‖²/ε`.
    pub k_star: f64,
    pub curve: Vec<(usize, f64)>,
}

pub fn cmd_optimal_b(cfg: &ExperimentConfig) -> CliResult<OptimalBReport> {
    let problem = load_problem(cfg)?;
    let obj = &problem.objective;
    let (n, d, l, l_max) = (obj.n(), problem.d(), obj.l(), obj.l_max());
    let algo = cfg.algo();
    let k = |b: usize| -> proxsgd::Result<f64> {
        match algo {
            Algo::Saga => theory::k_saga(b, l, l_max, n, 1.0, 1.0),
            Algo::Lsvrg => theory::k_svrg(b, l, l_max, n, 1.0, 1.0),
            _ => theory::k_sega(b, d, l, 1.0, 1.0),
        }
    };
    let b_star = theory_b(algo, &problem)?
        .ok_or_else(|| CliError::config("optimal-b is available for saga, lsvrg and sega"))?;
    let limit = if algo == Algo::Sega { d } else { n };
    let curve = (1..=limit).map(|b| Ok((b, k(b)?))).collect::<proxsgd::Result<Vec<_>>>()?;
    Ok(OptimalBReport { algo, n, d, l, l_max, b_star, k_star: k(b_star)?, curve })
}

impl OptimalBReport {
    pub fn summary(&self) -> String {
        format!(
            "algo = {}\nn = {}\nd = {}\nL = {:.10e}\nL_max = {:.10e}\nb* = {}\nK(b*) = {:.10e} (units of |x0 - x*|^2 / eps)\n",
            self.algo.name(),
            self.n,
            self.d,
            self.l,
            self.l_max,
            self.b_star,
            self.k_star
        )
    }

    pub fn curve_csv(&self) -> String {
        let mut out = String::from("b,k\n");
        for (b, k) in &self.curve {
            let _ = writeln!(out, "{b},{}", proxsgd::data::records::fmt_f64(*k));
        }
        out
    }
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> CliResult<Vec<CheckReport>> {
    let mut opts = cfg.verify.clone().unwrap_or_default();
    if let Some(seed) = cfg.seed {
        opts.seed = seed;
    }
    Ok(standard_suite(&opts)?)
}
