//! Seeded synthetic linear-model problems with a controllable `L_max / L`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::problem::{CompositeProblem, FiniteSumObjective, LinearModel, Loss};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: Loss,
    pub n: usize,
    pub d: usize,
    /// Requested `L_max / L`; clamped to `[1, n]`. `None` keeps the raw
    /// Gaussian design.
    #[serde(default)]
    pub condition: Option<f64>,
    pub seed: u64,
    /// Standard deviation of the additive noise on least-squares targets.
    #[serde(default = "default_noise")]
    pub noise: f64,
}

fn default_noise() -> f64 {
    0.1
}

impl SyntheticSpec {
    pub fn new(kind: Loss, n: usize, d: usize, condition: Option<f64>, seed: u64) -> Self {
        Self { kind, n, d, condition, seed, noise: default_noise() }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub features: Matrix,
    pub targets: Vec<f64>,
    /// Planted parameter the targets were generated from.
    pub planted: Vec<f64>,
}

const BISECTION_STEPS: usize = 40;

pub fn gen_synthetic_data(spec: &SyntheticSpec) -> Result<SyntheticData> {
    let (n, d) = (spec.n, spec.d);
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!("synthetic sizes must be positive, got n = {n}, d = {d}")));
    }
    if let Some(c) = spec.condition {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("condition target must be positive, got {c}")));
        }
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise level must be nonnegative, got {}", spec.noise)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let raw: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    let raw = Matrix::from_row_major(n, d, raw);
    let mut mean_dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let norm = linalg::norm(&mean_dir);
    linalg::scale(1.0 / norm, &mut mean_dir);

    let features = match spec.condition {
        None => shape(&raw, &mean_dir, 0.0, 1.0),
        Some(c) => calibrate(&raw, &mean_dir, c.clamp(1.0, n as f64)),
    };

    let mut planted: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let pn = linalg::norm(&planted);
    linalg::scale(3.0 / pn, &mut planted);

    let targets = (0..n)
        .map(|i| {
            let m = linalg::dot(features.row(i), &planted);
            match spec.kind {
                Loss::Logistic => {
                    let p = 1.0 / (1.0 + (-m).exp());
                    if rng.random::<f64>() < p {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Loss::LeastSquares => m + spec.noise * rng.sample::<f64, _>(StandardNormal),
            }
        })
        .collect();

    Ok(SyntheticData { features, targets, planted })
}

/// Synthetic problem with a zero regularizer.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<CompositeProblem> {
    let data = gen_synthetic_data(spec)?;
    let model = LinearModel::new(spec.kind, data.features, data.targets)?;
    Ok(CompositeProblem::smooth(FiniteSumObjective::from_components(model)?))
}

/// Rows `(g_i + mu·u)/‖·‖`, then row 0 scaled by `heavy`.
fn shape(raw: &Matrix, dir: &[f64], mu: f64, heavy: f64) -> Matrix {
    let mut m = raw.clone();
    for i in 0..m.rows() {
        let row = m.row_mut(i);
        linalg::axpy(mu, dir, row);
        let norm = linalg::norm(row);
        if norm > 0.0 {
            linalg::scale(1.0 / norm, row);
        }
    }
    linalg::scale(heavy, m.row_mut(0));
    m
}

fn ratio(features: &Matrix) -> f64 {
    let model = LinearModel::new(Loss::LeastSquares, features.clone(), vec![0.0; features.rows()])
        .expect("shapes are consistent");
    let obj = FiniteSumObjective::from_components(model).expect("nonempty");
    obj.l_max() / obj.l()
}

/// A shared mean direction pulls the ratio towards 1; a heavy first row
/// pushes it towards n. Bisection in log space on whichever knob applies.
fn calibrate(raw: &Matrix, dir: &[f64], target: f64) -> Matrix {
    let base = shape(raw, dir, 0.0, 1.0);
    let r0 = ratio(&base);
    if (r0 / target - 1.0).abs() < 1e-3 || raw.rows() == 1 {
        return base;
    }
    let knob: Box<dyn Fn(f64) -> Matrix> = if target < r0 {
        Box::new(|t: f64| shape(raw, dir, t, 1.0))
    } else {
        Box::new(|t: f64| shape(raw, dir, 0.0, t))
    };
    let decreasing = target < r0;
    // bracket [lo, hi] in log10 of the knob
    let (mut lo, mut hi) = if decreasing { (-3.0_f64, 4.0_f64) } else { (0.0_f64, 4.0_f64) };
    let mut best = base;
    let mut best_err = (r0 / target).ln().abs();
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let m = knob(10f64.powf(mid));
        let r = ratio(&m);
        let err = (r / target).ln().abs();
        if err < best_err {
            best_err = err;
            best = m;
        }
        let overshoot = if decreasing { r < target } else { r > target };
        if overshoot {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    best
}
