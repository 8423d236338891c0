//! Certification of estimator constants by exact enumeration or Monte-Carlo,
//! and empirical checks of the convergence bounds.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::records::fmt_f64;
use crate::data::solve_reference;
use crate::error::{Error, Result};
use crate::estimators::{
    AssumptionConstants, Diana, Estimator, GradientEstimator, LSvrg, MConvention, Outcome, Quantizer, Saga, Sega, SgdAs,
};
use crate::linalg::{self, Matrix};
use crate::problem::{CompositeProblem, FiniteSumObjective, LinearModel, Loss, ReferenceSolution};
use crate::rng::{derive_seed, RngStreams};
use crate::runner::{run, RunConfig};
use crate::sampling::SamplingScheme;
use crate::theory::{default_constant_step, theorem1_bound, vr_bound, BoundInputs};

pub const EXACT_TOL: f64 = 1e-10;
/// Statistical tolerance in standard errors.
pub const MC_SE_TOL: f64 = 4.0;
pub const MIN_BOUND_SEEDS: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckMode {
    Exact,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_id: String,
    pub instance: String,
    /// Signed: positive means the inequality is broken by that much.
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub sample_size: u64,
    pub note: String,
}

impl CheckReport {
    pub fn new(check_id: &str, instance: &str, max_violation: f64, tolerance: f64, sample_size: u64) -> Self {
        Self {
            check_id: check_id.to_string(),
            instance: instance.to_string(),
            max_violation,
            tolerance,
            passed: max_violation <= tolerance,
            sample_size,
            note: String::new(),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

/// An iterate together with the estimator state at that iterate.
#[derive(Debug, Clone)]
pub struct Point<E> {
    pub x: Vec<f64>,
    pub estimator: E,
}

/// Runs `steps` iterations from `x0` with constant step `gamma` and returns
/// `(x_k, state_k)` for `k = 0, …, steps - 1`.
pub fn harvest<E: GradientEstimator>(
    problem: &CompositeProblem,
    template: &E,
    x0: &[f64],
    gamma: f64,
    steps: usize,
    seed: u64,
) -> Result<Vec<Point<E>>> {
    let mut est = template.clone();
    est.initialize(problem, x0)?;
    let mut rng = RngStreams::new(seed);
    let mut x = x0.to_vec();
    let mut points = Vec::with_capacity(steps);
    for _ in 0..steps {
        points.push(Point { x: x.clone(), estimator: est.clone() });
        let g = est.next_gradient(problem, &x, &mut rng)?;
        linalg::axpy(-gamma, &g, &mut x);
        x = problem.prox(gamma, &x)?;
    }
    Ok(points)
}

/// State built at the mirror image `2x* - x` of `x`, evaluated at `x`. For
/// quadratics this makes the stored gradient errors exactly opposite to the
/// current ones, where the second-moment bound is closest to tight.
pub fn reflected_point(problem: &CompositeProblem, reference: &ReferenceSolution, template: &Estimator, x: &[f64]) -> Result<Point<Estimator>> {
    let mirror: Vec<f64> = reference.x_star.iter().zip(x).map(|(s, xi)| 2.0 * s - xi).collect();
    let mut est = template.clone();
    est.initialize(problem, &mirror)?;
    if let Estimator::Sega(s) = &mut est {
        s.set_sketch(problem.objective.grad_full(&mirror)?)?;
    }
    Ok(Point { x: x.to_vec(), estimator: est })
}

/// `min{1/(4(A + MC)), 1/(2L)}` for the estimator on this problem.
pub fn safe_step<E: GradientEstimator>(problem: &CompositeProblem, template: &E, x0: &[f64], reference: &ReferenceSolution) -> Result<f64> {
    let mut est = template.clone();
    est.initialize(problem, x0)?;
    let c = est.constants(problem, Some(reference))?;
    default_constant_step(&c, problem.objective.l(), MConvention::General)
}

struct Moments {
    mean: Vec<f64>,
    /// Standard error of each mean; zero in exact mode.
    se: Vec<f64>,
    size: u64,
}

/// `E[h(g, next)]` over one step from `point`, exactly or by sampling.
fn expectation<E, H>(problem: &CompositeProblem, point: &Point<E>, mode: CheckMode, salt: u64, h: H) -> Result<Moments>
where
    E: GradientEstimator,
    H: Fn(&[f64], &E) -> Result<Vec<f64>>,
{
    match mode {
        CheckMode::Exact => {
            let outcomes: Vec<Outcome<E>> = point.estimator.outcomes(problem, &point.x)?;
            let total: f64 = outcomes.iter().map(|o| o.probability).sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("outcome probabilities sum to {total}")));
            }
            let mut mean: Vec<f64> = Vec::new();
            for o in &outcomes {
                let v = h(&o.gradient, &o.next)?;
                if mean.is_empty() {
                    mean = vec![0.0; v.len()];
                }
                linalg::axpy(o.probability, &v, &mut mean);
            }
            let se = vec![0.0; mean.len()];
            Ok(Moments { mean, se, size: outcomes.len() as u64 })
        }
        CheckMode::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidParameter("Monte-Carlo checks need at least 2 samples".into()));
            }
            let mut rng = RngStreams::new(derive_seed(&[seed, salt]));
            let mut sum: Vec<f64> = Vec::new();
            let mut sum_sq: Vec<f64> = Vec::new();
            for _ in 0..samples {
                let mut est = point.estimator.clone();
                let g = est.next_gradient(problem, &point.x, &mut rng)?;
                let v = h(&g, &est)?;
                if sum.is_empty() {
                    sum = vec![0.0; v.len()];
                    sum_sq = vec![0.0; v.len()];
                }
                for (j, vj) in v.iter().enumerate() {
                    sum[j] += vj;
                    sum_sq[j] += vj * vj;
                }
            }
            let s = samples as f64;
            let mean: Vec<f64> = sum.iter().map(|v| v / s).collect();
            let se = mean
                .iter()
                .zip(&sum_sq)
                .map(|(m, q)| ((q / s - m * m).max(0.0) * s / (s - 1.0) / s).sqrt())
                .collect();
            Ok(Moments { mean, se, size: samples as u64 })
        }
    }
}

/// Signed violation of `value ≤ bound`; in standard errors for sampled values.
fn violation(value: f64, se: f64, bound: f64, mode: CheckMode) -> f64 {
    match mode {
        CheckMode::Exact => value - bound,
        CheckMode::MonteCarlo { .. } => {
            let floor = 1e-12 * (1.0 + bound.abs());
            (value - bound) / se.max(floor)
        }
    }
}

fn tolerance(mode: CheckMode) -> f64 {
    match mode {
        CheckMode::Exact => EXACT_TOL,
        CheckMode::MonteCarlo { .. } => MC_SE_TOL,
    }
}

fn fold_points<E, F>(points: &[Point<E>], mut f: F) -> Result<(f64, u64)>
where
    F: FnMut(usize, &Point<E>) -> Result<(f64, u64)>,
{
    let mut worst = f64::NEG_INFINITY;
    let mut size = 0;
    for (i, p) in points.iter().enumerate() {
        let (v, s) = f(i, p)?;
        worst = worst.max(v);
        size += s;
    }
    Ok((if points.is_empty() { 0.0 } else { worst }, size))
}

/// `max ‖E[g | x] - ∇f(x)‖` over the points; per-coordinate z-scores in
/// Monte-Carlo mode.
pub fn check_unbiased<E: GradientEstimator>(
    problem: &CompositeProblem,
    points: &[Point<E>],
    mode: CheckMode,
    instance: &str,
) -> Result<CheckReport> {
    let (worst, size) = fold_points(points, |i, p| {
        let m = expectation(problem, p, mode, i as u64, |g, _| Ok(g.to_vec()))?;
        let grad = problem.objective.grad_full(&p.x)?;
        let v = match mode {
            CheckMode::Exact => linalg::dist_sq(&m.mean, &grad).sqrt(),
            CheckMode::MonteCarlo { .. } => (0..grad.len())
                .map(|j| {
                    let floor = 1e-12 * (1.0 + grad[j].abs());
                    (m.mean[j] - grad[j]).abs() / m.se[j].max(floor)
                })
                .fold(0.0, f64::max),
        };
        Ok((v, m.size))
    })?;
    Ok(CheckReport::new("unbiased", instance, worst, tolerance(mode), size))
}

/// `E‖g - ∇f(x*)‖² ≤ 2A D_f(x, x*) + Bσ² + D1` with the estimator's constants.
pub fn check_second_moment<E: GradientEstimator>(
    problem: &CompositeProblem,
    reference: &ReferenceSolution,
    points: &[Point<E>],
    mode: CheckMode,
    instance: &str,
) -> Result<CheckReport> {
    let (worst, size) = fold_points(points, |i, p| {
        let c = p.estimator.constants(problem, Some(reference))?;
        let sigma = p.estimator.sigma_sq(problem, reference)?;
        let df = problem.bregman(&p.x, &reference.x_star)?;
        let rhs = 2.0 * c.a * df + c.b * sigma + c.d1;
        let m = expectation(problem, p, mode, i as u64, |g, _| Ok(vec![linalg::dist_sq(g, &reference.grad_star)]))?;
        Ok((violation(m.mean[0], m.se[0], rhs, mode), m.size))
    })?;
    Ok(CheckReport::new("second_moment", instance, worst, tolerance(mode), size))
}

/// `E[σ²_{k+1} | x_k] ≤ (1 - ρ)σ_k² + 2C D_f(x_k, x*) + D2`.
pub fn check_sigma_recursion<E: GradientEstimator>(
    problem: &CompositeProblem,
    reference: &ReferenceSolution,
    points: &[Point<E>],
    mode: CheckMode,
    instance: &str,
) -> Result<CheckReport> {
    let (worst, size) = fold_points(points, |i, p| {
        let c = p.estimator.constants(problem, Some(reference))?;
        let sigma = p.estimator.sigma_sq(problem, reference)?;
        let df = problem.bregman(&p.x, &reference.x_star)?;
        let rhs = (1.0 - c.rho) * sigma + 2.0 * c.c * df + c.d2;
        let m = expectation(problem, p, mode, i as u64, |_, next| Ok(vec![next.sigma_sq(problem, reference)?]))?;
        Ok((violation(m.mean[0], m.se[0], rhs, mode), m.size))
    })?;
    Ok(CheckReport::new("sigma_recursion", instance, worst, tolerance(mode), size))
}

/// `σ_0² ≤ G‖x_0 - x*‖²` after initializing at each `x_0`.
pub fn check_g_bound<E: GradientEstimator>(
    problem: &CompositeProblem,
    reference: &ReferenceSolution,
    template: &E,
    x0s: &[Vec<f64>],
    instance: &str,
) -> Result<CheckReport> {
    let mut worst = if x0s.is_empty() { 0.0 } else { f64::NEG_INFINITY };
    for x0 in x0s {
        let mut est = template.clone();
        est.initialize(problem, x0)?;
        let g = est
            .constants(problem, Some(reference))?
            .g
            .ok_or(Error::InvalidParameter(format!("{} declares no G constant", est.name())))?;
        let sigma0 = est.sigma_sq(problem, reference)?;
        worst = f64::max(worst, sigma0 - g * linalg::dist_sq(x0, &reference.x_star));
    }
    Ok(CheckReport::new("g_bound", instance, worst, EXACT_TOL, x0s.len() as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// General weighted-average bound for any nonincreasing schedule.
    General,
    /// Smooth variance-reduced bound with constant step.
    VarianceReduced,
}

/// Averages `F(x̄_k) - F*` over `seeds` runs and compares with the bound at
/// every logged `k ≥ 1`. The violation is `max_k mean_k / bound_k - 1`.
pub fn check_theorem_bound<E: GradientEstimator>(
    problem: &CompositeProblem,
    reference: &ReferenceSolution,
    template: &E,
    x0: &[f64],
    config: &RunConfig,
    seeds: u64,
    kind: BoundKind,
    instance: &str,
) -> Result<CheckReport> {
    if seeds < MIN_BOUND_SEEDS {
        return Err(Error::InvalidParameter(format!("need at least {MIN_BOUND_SEEDS} seeds, got {seeds}")));
    }
    if config.stop.eps_rel.is_some() {
        return Err(Error::InvalidParameter("bound checks need fixed-length runs".into()));
    }
    let mut sums: Vec<(u64, f64)> = Vec::new();
    let mut first = None;
    for s in 0..seeds {
        let mut cfg = config.clone();
        cfg.seed = derive_seed(&[config.seed, s]);
        let mut est = template.clone();
        let t = run(problem, &mut est, x0, reference, &cfg)?;
        if sums.is_empty() {
            sums = t.log.iter().map(|e| (e.k, 0.0)).collect();
        }
        for (acc, e) in sums.iter_mut().zip(&t.log) {
            acc.1 += e.avg_subopt;
        }
        first.get_or_insert(t);
    }
    let t0 = first.expect("at least one run");
    let inputs = BoundInputs {
        dist0_sq: linalg::dist_sq(x0, &reference.x_star),
        delta0: t0.delta0,
        sigma0_sq: t0.log[0].sigma_sq,
        constants: t0.constants,
        l: problem.objective.l(),
        regularized: !problem.regularizer.is_zero(),
    };
    let mut worst = f64::NEG_INFINITY;
    let mut worst_k = 0;
    for &(k, total) in sums.iter().filter(|(k, _)| *k >= 1) {
        let bound = match kind {
            BoundKind::General => theorem1_bound(&inputs, &config.policy.prefix(k))?,
            BoundKind::VarianceReduced => vr_bound(&inputs, config.policy.initial(), k)?,
        };
        let ratio = total / seeds as f64 / bound;
        if !(ratio <= worst) {
            worst = ratio;
            worst_k = k;
        }
    }
    Ok(CheckReport::new("theorem_bound", instance, worst - 1.0, 0.0, seeds)
        .with_note(format!("max mean/bound ratio {worst:.4} at k = {worst_k}")))
}

/// Tail mean of `F(x_k) - F*` over the last `tail` fraction of logged
/// iterates, averaged over seeds, against `radius` plus `3` standard errors.
pub fn check_neighborhood<E: GradientEstimator>(
    problem: &CompositeProblem,
    reference: &ReferenceSolution,
    template: &E,
    x0: &[f64],
    config: &RunConfig,
    seeds: u64,
    tail: f64,
    radius: f64,
    instance: &str,
) -> Result<CheckReport> {
    if seeds < 2 || !(tail > 0.0 && tail <= 1.0) {
        return Err(Error::InvalidParameter("need at least 2 seeds and a tail fraction in (0, 1]".into()));
    }
    let start = ((1.0 - tail) * config.stop.max_iters as f64).floor() as u64;
    let mut means = Vec::with_capacity(seeds as usize);
    for s in 0..seeds {
        let mut cfg = config.clone();
        cfg.seed = derive_seed(&[config.seed, s]);
        let mut est = template.clone();
        let t = run(problem, &mut est, x0, reference, &cfg)?;
        let tail: Vec<f64> = t.log.iter().filter(|e| e.k >= start).map(|e| e.subopt).collect();
        means.push(tail.iter().sum::<f64>() / tail.len().max(1) as f64);
    }
    let s = seeds as f64;
    let mean = means.iter().sum::<f64>() / s;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (s - 1.0);
    let se = (var / s).sqrt();
    let v = (mean - radius) / se.max(1e-300);
    Ok(CheckReport::new("neighborhood", instance, v, 3.0, seeds)
        .with_note(format!("tail mean {mean:.6e}, radius {radius:.6e}, standard error {se:.3e}")))
}

/// Wraps an estimator and multiplies its declared `A` by `factor`; used to
/// confirm that the checks detect wrong constants.
#[derive(Debug, Clone)]
pub struct ScaledA<E> {
    pub inner: E,
    pub factor: f64,
}

impl<E: GradientEstimator> GradientEstimator for ScaledA<E> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }

    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
        self.inner.initialize(problem, x0)
    }

    fn is_initialized(&self) -> bool {
        self.inner.is_initialized()
    }

    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>> {
        self.inner.next_gradient(problem, x, rng)
    }

    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>> {
        Ok(self
            .inner
            .outcomes(problem, x)?
            .into_iter()
            .map(|o| Outcome { probability: o.probability, gradient: o.gradient, next: ScaledA { inner: o.next, factor: self.factor } })
            .collect())
    }

    fn constants(&self, problem: &CompositeProblem, reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants> {
        let mut c = self.inner.constants(problem, reference)?;
        c.a *= self.factor;
        Ok(c)
    }

    fn sigma_sq(&self, problem: &CompositeProblem, reference: &ReferenceSolution) -> Result<f64> {
        self.inner.sigma_sq(problem, reference)
    }

    fn grad_evals(&self) -> f64 {
        self.inner.grad_evals()
    }

    fn batch_size(&self) -> usize {
        self.inner.batch_size()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Unbiased,
    SecondMoment,
    SigmaRecursion,
    GBound,
    /// Sampled versions of the first three for DIANA with sparsification.
    DianaMc,
}

impl CheckKind {
    pub const ALL: [CheckKind; 5] =
        [CheckKind::Unbiased, CheckKind::SecondMoment, CheckKind::SigmaRecursion, CheckKind::GBound, CheckKind::DianaMc];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteOptions {
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckKind>,
    #[serde(default)]
    pub seed: u64,
    /// On-trajectory points per exact check.
    #[serde(default = "default_points")]
    pub points: usize,
    /// Random starting points for the `G` check.
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_mc_points")]
    pub mc_points: usize,
    /// Multiplier applied to every declared `A`; anything below 1 should fail.
    #[serde(default = "default_factor")]
    pub a_factor: f64,
}

fn default_checks() -> Vec<CheckKind> {
    CheckKind::ALL.to_vec()
}
fn default_points() -> usize {
    100
}
fn default_starts() -> usize {
    20
}
fn default_mc_samples() -> usize {
    100_000
}
fn default_mc_points() -> usize {
    3
}
fn default_factor() -> f64 {
    1.0
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            checks: default_checks(),
            seed: 0,
            points: default_points(),
            starts: default_starts(),
            mc_samples: default_mc_samples(),
            mc_points: default_mc_points(),
            a_factor: default_factor(),
        }
    }
}

/// Least-squares instance with `n` rows of uneven norms in dimension `d`.
pub fn small_quadratic(n: usize, d: usize, seed: u64) -> Result<CompositeProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let scale = 1.0 + i as f64 * 0.5;
        rows.push((0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
    }
    let targets = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let model = LinearModel::new(Loss::LeastSquares, Matrix::from_rows(&rows), targets)?;
    Ok(CompositeProblem::smooth(FiniteSumObjective::from_components(model)?))
}

/// Exact checks for SGD-AS, SAGA, L-SVRG and SEGA with `b = 2` on a
/// 6-component quadratic in dimension 3, plus sampled checks for DIANA.
pub fn standard_suite(opts: &SuiteOptions) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    if opts.checks.is_empty() {
        return Ok(reports);
    }
    let (n, d, b) = (6, 3, 2);
    let problem = small_quadratic(n, d, opts.seed)?;
    let reference = solve_reference(&problem, 1e-13)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[opts.seed, 1]));
    let x0: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let starts: Vec<Vec<f64>> =
        (0..opts.starts).map(|_| (0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
    let has = |k: CheckKind| opts.checks.contains(&k);

    let estimators = [
        Estimator::Sgd(SgdAs::new(SamplingScheme::b_nice(n, b)?)),
        Estimator::Saga(Saga::new(b)),
        Estimator::LSvrg(LSvrg::new(b)),
        Estimator::Sega(Sega::new(b)),
    ];
    for (idx, est) in estimators.into_iter().enumerate() {
        let est = ScaledA { inner: est, factor: opts.a_factor };
        let instance = format!("{} n={n} d={d} b={b}", est.name());
        let gamma = safe_step(&problem, &est, &x0, &reference)?;
        let points = harvest(&problem, &est, &x0, gamma, opts.points, derive_seed(&[opts.seed, 2, idx as u64]))?;
        if has(CheckKind::Unbiased) {
            reports.push(check_unbiased(&problem, &points, CheckMode::Exact, &instance)?);
        }
        if has(CheckKind::SecondMoment) {
            reports.push(check_second_moment(&problem, &reference, &points, CheckMode::Exact, &instance)?);
            let mirrored = starts
                .iter()
                .map(|x| {
                    let p = reflected_point(&problem, &reference, &est.inner, x)?;
                    Ok(Point { x: p.x, estimator: ScaledA { inner: p.estimator, factor: opts.a_factor } })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut rep = check_second_moment(&problem, &reference, &mirrored, CheckMode::Exact, &instance)?;
            rep.check_id = "second_moment_reflected".into();
            reports.push(rep);
        }
        if has(CheckKind::SigmaRecursion) {
            reports.push(check_sigma_recursion(&problem, &reference, &points, CheckMode::Exact, &instance)?);
        }
        if has(CheckKind::GBound) && est.inner.name() != "sgd" {
            reports.push(check_g_bound(&problem, &reference, &est, &starts, &instance)?);
        }
    }

    if has(CheckKind::DianaMc) {
        let est = ScaledA { inner: Diana::new(Quantizer::RandomSparsification { r: 1 }), factor: opts.a_factor };
        let instance = format!("diana n={n} d={d} r=1");
        let gamma = safe_step(&problem, &est, &x0, &reference)?;
        let points = harvest(&problem, &est, &x0, gamma, opts.mc_points, derive_seed(&[opts.seed, 3]))?;
        let mode = CheckMode::MonteCarlo { samples: opts.mc_samples, seed: derive_seed(&[opts.seed, 4]) };
        reports.push(check_unbiased(&problem, &points, mode, &instance)?);
        reports.push(check_second_moment(&problem, &reference, &points, mode, &instance)?);
        reports.push(check_sigma_recursion(&problem, &reference, &points, mode, &instance)?);
    }
    Ok(reports)
}

pub const REPORT_HEADER: [&str; 7] = ["check_id", "instance", "max_violation", "tolerance", "passed", "sample_size", "note"];

pub fn reports_to_csv(reports: &[CheckReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(REPORT_HEADER)?;
    for r in reports {
        w.write_record([
            r.check_id.clone(),
            r.instance.clone(),
            fmt_f64(r.max_violation),
            fmt_f64(r.tolerance),
            r.passed.to_string(),
            r.sample_size.to_string(),
            r.note.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn render_summary(reports: &[CheckReport]) -> String {
    let mut out = String::new();
    for r in reports {
        let _ = write!(
            out,
            "{} {:<26} {:<24} violation {:+.3e} (tol {:.1e}, size {})",
            if r.passed { "PASS" } else { "FAIL" },
            r.check_id,
            r.instance,
            r.max_violation,
            r.tolerance,
            r.sample_size
        );
        if !r.note.is_empty() {
            let _ = write!(out, "  {}", r.note);
        }
        out.push('\n');
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    let _ = writeln!(out, "{} checks, {} failed", reports.len(), failed);
    out
}
