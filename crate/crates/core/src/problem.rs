//! Composite problems `F = f + R` with `f = (1/n) Σ f_i` smooth and convex.
//!
//! The smooth part is described by a [`ComponentOracle`]; the objective
//! precomputes the per-component smoothness constants `L_i`, their maximum
//! `L_max` and the smoothness constant `L` of the average.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::sampling::SamplingScheme;

/// Per-component value and gradient oracles for a finite sum.
pub trait ComponentOracle: Send + Sync + fmt::Debug {
    /// Number of components `n`.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension `d` of the decision variable.
    fn dim(&self) -> usize;

    fn value(&self, i: usize, x: &[f64]) -> f64;

    /// `out += weight * ∇f_i(x)`
    fn add_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]);

    /// Smoothness constant `L_i` of component `i`.
    fn smoothness(&self, i: usize) -> f64;

    /// `out = H v` for a fixed PSD operator `H` that dominates the Hessian of
    /// the average `f` everywhere. Its top eigenvalue is `L`.
    fn apply_curvature_bound(&self, v: &[f64], out: &mut [f64]);
}

/// Loss attached to a linear model `x ↦ ℓ(⟨a_i, x⟩, y_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `log(1 + exp(-y ⟨a, x⟩))`, labels in {-1, +1}.
    Logistic,
    /// `½ (⟨a, x⟩ - y)²`.
    LeastSquares,
}

impl Loss {
    fn curvature(self) -> f64 {
        match self {
            Loss::Logistic => 0.25,
            Loss::LeastSquares => 1.0,
        }
    }
}

/// Generalized linear model components over a dense feature matrix.
#[derive(Debug, Clone)]
pub struct LinearModel {
    loss: Loss,
    features: Matrix,
    targets: Vec<f64>,
}

impl LinearModel {
    pub fn new(loss: Loss, features: Matrix, targets: Vec<f64>) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.cols() == 0 {
            return Err(Error::InvalidParameter("feature dimension must be positive".into()));
        }
        if targets.len() != features.rows() {
            return Err(Error::DimensionMismatch { expected: features.rows(), got: targets.len() });
        }
        if loss == Loss::Logistic {
            if let Some(bad) = targets.iter().find(|&&y| y != 1.0 && y != -1.0) {
                return Err(Error::InvalidParameter(format!(
                    "logistic labels must be -1 or +1, found {bad}"
                )));
            }
        }
        Ok(Self { loss, features, targets })
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl ComponentOracle for LinearModel {
    fn len(&self) -> usize {
        self.features.rows()
    }

    fn dim(&self) -> usize {
        self.features.cols()
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        let margin = linalg::dot(self.features.row(i), x);
        let y = self.targets[i];
        match self.loss {
            Loss::Logistic => softplus(-y * margin),
            Loss::LeastSquares => 0.5 * (margin - y) * (margin - y),
        }
    }

    fn add_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        let a = self.features.row(i);
        let margin = linalg::dot(a, x);
        let y = self.targets[i];
        let slope = match self.loss {
            Loss::Logistic => -y * sigmoid(-y * margin),
            Loss::LeastSquares => margin - y,
        };
        linalg::axpy(weight * slope, a, out);
    }

    fn smoothness(&self, i: usize) -> f64 {
        self.loss.curvature() * linalg::norm_sq(self.features.row(i))
    }

    fn apply_curvature_bound(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let c = self.loss.curvature() / self.len() as f64;
        for i in 0..self.len() {
            let a = self.features.row(i);
            linalg::axpy(c * linalg::dot(a, v), a, out);
        }
    }
}

/// Components `f_i(x) = ½ ‖x - c_i‖²`.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    centers: Matrix,
}

impl SquaredDistance {
    pub fn new(centers: Matrix) -> Result<Self> {
        if centers.rows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if centers.cols() == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self { centers })
    }
}

impl ComponentOracle for SquaredDistance {
    fn len(&self) -> usize {
        self.centers.rows()
    }

    fn dim(&self) -> usize {
        self.centers.cols()
    }

    fn value(&self, i: usize, x: &[f64]) -> f64 {
        0.5 * linalg::dist_sq(x, self.centers.row(i))
    }

    fn add_gradient(&self, i: usize, x: &[f64], weight: f64, out: &mut [f64]) {
        for ((o, xj), cj) in out.iter_mut().zip(x).zip(self.centers.row(i)) {
            *o += weight * (xj - cj);
        }
    }

    fn smoothness(&self, _i: usize) -> f64 {
        1.0
    }

    fn apply_curvature_bound(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
    }
}

/// The smooth finite-sum part `f = (1/n) Σ f_i` together with its smoothness
/// constants.
#[derive(Debug, Clone)]
pub struct FiniteSumObjective {
    oracle: Arc<dyn ComponentOracle>,
    lipschitz: Vec<f64>,
    l_max: f64,
    l: f64,
}

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 10_000;

impl FiniteSumObjective {
    pub fn new(oracle: Arc<dyn ComponentOracle>) -> Result<Self> {
        if oracle.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if oracle.dim() == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let lipschitz: Vec<f64> = (0..oracle.len()).map(|i| oracle.smoothness(i)).collect();
        let l_max = lipschitz.iter().cloned().fold(0.0, f64::max);
        let l = top_eigenvalue(oracle.dim(), |v, out| oracle.apply_curvature_bound(v, out));
        Ok(Self { oracle, lipschitz, l_max, l })
    }

    pub fn from_components<C: ComponentOracle + 'static>(components: C) -> Result<Self> {
        Self::new(Arc::new(components))
    }

    pub fn oracle(&self) -> &dyn ComponentOracle {
        self.oracle.as_ref()
    }

    pub fn n(&self) -> usize {
        self.oracle.len()
    }

    pub fn d(&self) -> usize {
        self.oracle.dim()
    }

    /// Per-component smoothness constants `L_i`.
    pub fn lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    pub fn l_max(&self) -> f64 {
        self.l_max
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn smoothness_constants(&self) -> (&[f64], f64, f64) {
        (&self.lipschitz, self.l_max, self.l)
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), got: x.len() });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.value_unchecked(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        let n = self.n();
        (0..n).map(|i| self.oracle.value(i, x)).sum::<f64>() / n as f64
    }

    pub fn component_value(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_index(i)?;
        self.check_dim(x)?;
        Ok(self.oracle.value(i, x))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange { index: i, n: self.n() });
        }
        Ok(())
    }

    pub fn component_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        self.check_index(i)?;
        self.check_dim(x)?;
        let mut g = vec![0.0; self.d()];
        self.oracle.add_gradient(i, x, 1.0, &mut g);
        Ok(g)
    }

    pub fn grad_full(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.grad_full_unchecked(x))
    }

    pub(crate) fn grad_full_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut g = vec![0.0; self.d()];
        let w = 1.0 / n as f64;
        for i in 0..n {
            self.oracle.add_gradient(i, x, w, &mut g);
        }
        g
    }

    /// Minibatch average `(1/|B|) Σ_{i∈B} ∇f_i(x)`.
    pub fn grad_batch(&self, batch: &[usize], x: &[f64]) -> Result<Vec<f64>> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        for &i in batch {
            self.check_index(i)?;
        }
        self.check_dim(x)?;
        Ok(self.grad_batch_unchecked(batch, x))
    }

    pub(crate) fn grad_batch_unchecked(&self, batch: &[usize], x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d()];
        let w = 1.0 / batch.len() as f64;
        for &i in batch {
            self.oracle.add_gradient(i, x, w, &mut g);
        }
        g
    }

    /// `(1/n) Σ_{i∈S} v_i ∇f_i(x)`: the gradient of the subsampled function
    /// for a sampling vector supported on `indices`.
    pub(crate) fn grad_weighted_unchecked(&self, indices: &[usize], weights: &[f64], x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.d()];
        let inv_n = 1.0 / self.n() as f64;
        for (&i, &v) in indices.iter().zip(weights) {
            self.oracle.add_gradient(i, x, v * inv_n, &mut g);
        }
        g
    }

    /// All component gradients at `x`, one row per component (`∇H(x)` transposed).
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        self.check_dim(x)?;
        Ok(self.jacobian_unchecked(x))
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[f64]) -> Matrix {
        let mut jac = Matrix::zeros(self.n(), self.d());
        for i in 0..self.n() {
            self.oracle.add_gradient(i, x, 1.0, jac.row_mut(i));
        }
        jac
    }

    /// Bregman divergence `D_f(x, y) = f(x) - f(y) - ⟨∇f(y), x - y⟩`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        let gy = self.grad_full_unchecked(y);
        let diff = linalg::sub(x, y);
        Ok(self.value_unchecked(x) - self.value_unchecked(y) - linalg::dot(&gy, &diff))
    }

    /// Bregman divergence of a single component.
    pub fn component_bregman(&self, i: usize, x: &[f64], y: &[f64]) -> Result<f64> {
        let gy = self.component_gradient(i, y)?;
        self.check_dim(x)?;
        let diff = linalg::sub(x, y);
        Ok(self.oracle.value(i, x) - self.oracle.value(i, y) - linalg::dot(&gy, &diff))
    }
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration, stopped
/// once the eigen-residual `‖Hv - λv‖` falls below `1e-8 λ`.
fn top_eigenvalue(d: usize, apply: impl Fn(&[f64], &mut [f64])) -> f64 {
    let mut v: Vec<f64> = (0..d).map(|j| 1.0 + 0.5 * ((j + 1) as f64).sin()).collect();
    let nv = linalg::norm(&v);
    linalg::scale(1.0 / nv, &mut v);
    let mut w = vec![0.0; d];
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        apply(&v, &mut w);
        lambda = linalg::dot(&v, &w);
        let wn = linalg::norm(&w);
        if wn == 0.0 || lambda <= 0.0 {
            return 0.0;
        }
        let residual: f64 = w.iter().zip(&v).map(|(wi, vi)| (wi - lambda * vi).powi(2)).sum::<f64>().sqrt();
        if residual <= POWER_TOL * lambda {
            break;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wn;
        }
    }
    lambda
}

/// Convex regularizer with a closed-form proximal operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "lambda", rename_all = "snake_case")]
pub enum Regularizer {
    Zero,
    /// `λ ‖x‖₁`
    L1(f64),
    /// `(λ/2) ‖x‖²`
    SquaredL2(f64),
}

impl Regularizer {
    pub fn is_zero(&self) -> bool {
        match *self {
            Regularizer::Zero => true,
            Regularizer::L1(l) | Regularizer::SquaredL2(l) => l == 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Regularizer::Zero => Ok(()),
            Regularizer::L1(l) | Regularizer::SquaredL2(l) if l >= 0.0 && l.is_finite() => Ok(()),
            Regularizer::L1(l) | Regularizer::SquaredL2(l) => {
                Err(Error::InvalidParameter(format!("regularization weight must be nonnegative, got {l}")))
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1(l) => l * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::SquaredL2(l) => 0.5 * l * linalg::norm_sq(x),
        }
    }

    /// `argmin_u { γ R(u) + ½ ‖u - y‖² }`
    pub fn prox(&self, gamma: f64, y: &[f64]) -> Result<Vec<f64>> {
        if !(gamma > 0.0) {
            return Err(Error::NonPositiveStep(gamma));
        }
        let mut out = y.to_vec();
        self.prox_in_place(gamma, &mut out);
        Ok(out)
    }

    pub(crate) fn prox_in_place(&self, gamma: f64, y: &mut [f64]) {
        match *self {
            Regularizer::Zero => {}
            Regularizer::L1(l) => {
                let t = gamma * l;
                for v in y {
                    *v = v.signum() * (v.abs() - t).max(0.0);
                }
            }
            Regularizer::SquaredL2(l) => linalg::scale(1.0 / (1.0 + gamma * l), y),
        }
    }
}

/// `F = f + R`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub objective: FiniteSumObjective,
    pub regularizer: Regularizer,
}

impl CompositeProblem {
    pub fn new(objective: FiniteSumObjective, regularizer: Regularizer) -> Result<Self> {
        regularizer.validate()?;
        Ok(Self { objective, regularizer })
    }

    pub fn smooth(objective: FiniteSumObjective) -> Self {
        Self { objective, regularizer: Regularizer::Zero }
    }

    pub fn n(&self) -> usize {
        self.objective.n()
    }

    pub fn d(&self) -> usize {
        self.objective.d()
    }

    /// `F(x) = f(x) + R(x)`.
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.objective.value(x)? + self.regularizer.value(x))
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        self.objective.value_unchecked(x) + self.regularizer.value(x)
    }

    pub fn grad_batch(&self, batch: &[usize], x: &[f64]) -> Result<Vec<f64>> {
        self.objective.grad_batch(batch, x)
    }

    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.objective.bregman(x, y)
    }

    pub fn prox(&self, gamma: f64, y: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(y)?;
        self.regularizer.prox(gamma, y)
    }

    pub(crate) fn check_dim(&self, x: &[f64]) -> Result<()> {
        self.objective.check_dim(x)
    }

    /// Norm of the prox-gradient fixed-point residual `x - prox_{γR}(x - γ∇f(x))`.
    pub fn prox_grad_residual(&self, x: &[f64], gamma: f64) -> Result<f64> {
        self.check_dim(x)?;
        let g = self.objective.grad_full_unchecked(x);
        let mut y = x.to_vec();
        linalg::axpy(-gamma, &g, &mut y);
        self.regularizer.prox_in_place(gamma, &mut y);
        Ok(linalg::dist_sq(x, &y).sqrt())
    }
}

/// High-accuracy minimizer of a composite problem and the component
/// gradients there.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// Row `i` is `∇f_i(x*)`.
    pub jacobian_star: Matrix,
    /// `∇f(x*)`.
    pub grad_star: Vec<f64>,
    /// Prox-gradient residual reached with `γ = 1/L`.
    pub tol_achieved: f64,
    pub iterations: u64,
    pub converged: bool,
}

impl ReferenceSolution {
    /// Builds the reference data at a known minimizer.
    pub fn at(problem: &CompositeProblem, x_star: Vec<f64>) -> Result<Self> {
        problem.check_dim(&x_star)?;
        let gamma = 1.0 / problem.objective.l();
        let tol = problem.prox_grad_residual(&x_star, gamma)?;
        Ok(Self {
            f_star: problem.value_unchecked(&x_star),
            jacobian_star: problem.objective.jacobian_unchecked(&x_star),
            grad_star: problem.objective.grad_full_unchecked(&x_star),
            x_star,
            tol_achieved: tol,
            iterations: 0,
            converged: true,
        })
    }
}

/// Which gradient-noise convention to evaluate at the minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `E‖∇f_v(x*) - ∇f(x*)‖²` under the sampling.
    Centered,
    /// `(1/n) Σ ‖∇f_i(x*)‖²`.
    Uncentered,
}

/// Gradient noise at the reference minimizer. The centered mode is exact for
/// every supported sampling scheme.
pub fn gradient_noise(
    problem: &CompositeProblem,
    scheme: &SamplingScheme,
    reference: &ReferenceSolution,
    mode: NoiseMode,
) -> Result<f64> {
    let n = problem.n();
    if scheme.n() != n {
        return Err(Error::InvalidParameter(format!(
            "sampling over {} components used with a problem of {} components",
            scheme.n(),
            n
        )));
    }
    match mode {
        NoiseMode::Centered => scheme.sampled_mean_variance(&reference.jacobian_star),
        NoiseMode::Uncentered => Ok(reference.jacobian_star.frobenius_sq() / n as f64),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ls(rows: &[Vec<f64>], y: &[f64]) -> FiniteSumObjective {
        FiniteSumObjective::from_components(
            LinearModel::new(Loss::LeastSquares, Matrix::from_rows(rows), y.to_vec()).unwrap(),
        )
        .unwrap()
    }

    fn half_norm_1d() -> CompositeProblem {
        CompositeProblem::smooth(
            FiniteSumObjective::from_components(SquaredDistance::new(Matrix::from_rows(&[vec![0.0]])).unwrap())
                .unwrap(),
        )
    }

    #[test]
    fn value_of_half_norm_at_zero() {
        assert_eq!(half_norm_1d().value(&[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn value_adds_l1_term() {
        let mut p = half_norm_1d();
        p.regularizer = Regularizer::L1(1.0);
        assert_eq!(p.value(&[1.0]).unwrap(), 1.5);
    }

    #[test]
    fn logistic_value_at_zero_is_ln2() {
        let f = FiniteSumObjective::from_components(
            LinearModel::new(
                Loss::Logistic,
                Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]),
                vec![1.0, -1.0],
            )
            .unwrap(),
        )
        .unwrap();
        assert!((f.value(&[0.0, 0.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn value_rejects_wrong_dimension() {
        assert!(matches!(
            half_norm_1d().value(&[0.0, 1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn full_batch_matches_normal_equations() {
        let rows = vec![vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.0]];
        let y = [1.0, 2.0, -1.0];
        let f = ls(&rows, &y);
        let x = [0.3, -0.7];
        let g = f.grad_batch(&[0, 1, 2], &x).unwrap();
        // (1/n) Aᵀ(Ax - y)
        let mut expected = [0.0; 2];
        for (r, yi) in rows.iter().zip(&y) {
            let res = r[0] * x[0] + r[1] * x[1] - yi;
            expected[0] += r[0] * res / 3.0;
            expected[1] += r[1] * res / 3.0;
        }
        for k in 0..2 {
            assert!((g[k] - expected[k]).abs() < 1e-14);
        }
        assert_eq!(g, f.grad_full(&x).unwrap());
    }

    #[test]
    fn singleton_batch_is_component_gradient() {
        let f = ls(&[vec![1.0, 2.0], vec![0.5, -1.0]], &[1.0, 2.0]);
        let x = [0.1, 0.2];
        assert_eq!(f.grad_batch(&[1], &x).unwrap(), f.component_gradient(1, &x).unwrap());
    }

    #[test]
    fn grad_batch_errors() {
        let f = ls(&[vec![1.0], vec![2.0]], &[1.0, 2.0]);
        assert!(matches!(f.grad_batch(&[], &[0.0]), Err(Error::EmptyBatch)));
        assert!(matches!(f.grad_batch(&[2], &[0.0]), Err(Error::IndexOutOfRange { index: 2, n: 2 })));
    }

    #[test]
    fn bregman_identities() {
        let f = FiniteSumObjective::from_components(
            SquaredDistance::new(Matrix::from_rows(&[vec![0.0, 0.0, 0.0]])).unwrap(),
        )
        .unwrap();
        let x = [1.0, -2.0, 0.5];
        let y = [0.3, 0.1, -1.0];
        assert_eq!(f.bregman(&x, &x).unwrap(), 0.0);
        let half = 0.5 * linalg::dist_sq(&x, &y);
        assert!((f.bregman(&x, &y).unwrap() - half).abs() < 1e-14);
    }

    #[test]
    fn prox_closed_forms() {
        let y = [2.0, -0.5, 0.0];
        assert_eq!(Regularizer::Zero.prox(0.7, &y).unwrap(), y.to_vec());
        assert_eq!(Regularizer::L1(1.0).prox(1.0, &y).unwrap(), vec![1.0, 0.0, 0.0]);
        let lambda = 0.4;
        let gamma = 2.5;
        let p = Regularizer::SquaredL2(lambda).prox(gamma, &y).unwrap();
        for (pi, yi) in p.iter().zip(&y) {
            assert!((pi - yi / (1.0 + gamma * lambda)).abs() < 1e-15);
        }
        assert!(matches!(Regularizer::L1(1.0).prox(0.0, &y), Err(Error::NonPositiveStep(_))));
        assert!(matches!(Regularizer::Zero.prox(-1.0, &y), Err(Error::NonPositiveStep(_))));
    }

    #[test]
    fn logistic_single_row_constants() {
        let f = FiniteSumObjective::from_components(
            LinearModel::new(Loss::Logistic, Matrix::from_rows(&[vec![2.0, 0.0]]), vec![1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(f.lipschitz(), &[1.0]);
        assert!((f.l() - 1.0).abs() < 1e-12);
        assert_eq!(f.l_max(), 1.0);
    }

    #[test]
    fn orthonormal_rows_give_l_equal_one_over_n() {
        let n = 5;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let f = ls(&rows, &vec![0.0; n]);
        assert_eq!(f.l_max(), 1.0);
        assert!((f.l() - 1.0 / n as f64).abs() < 1e-14);
    }

    #[test]
    fn zero_row_has_zero_smoothness() {
        let f = ls(&[vec![0.0, 0.0], vec![1.0, 1.0]], &[0.0, 1.0]);
        assert_eq!(f.lipschitz()[0], 0.0);
    }

    #[test]
    fn empty_dataset_rejected() {
        let empty = Matrix::from_row_major(0, 2, vec![]);
        assert!(matches!(LinearModel::new(Loss::LeastSquares, empty, vec![]), Err(Error::EmptyDataset)));
    }

    #[test]
    fn logistic_rejects_non_binary_labels() {
        let m = Matrix::from_rows(&[vec![1.0]]);
        assert!(LinearModel::new(Loss::Logistic, m, vec![0.0]).is_err());
    }

    #[test]
    fn noise_of_quadratics_at_mean() {
        // f_i = ½ (x - c_i)², x* = mean(c); centered noise = (1/4) Σ (c̄ - c_i)².
        let c = [1.0, 2.0, 4.0, 9.0];
        let problem = CompositeProblem::smooth(
            FiniteSumObjective::from_components(
                SquaredDistance::new(Matrix::from_rows(&c.iter().map(|&v| vec![v]).collect::<Vec<_>>())).unwrap(),
            )
            .unwrap(),
        );
        let mean = c.iter().sum::<f64>() / 4.0;
        let reference = ReferenceSolution::at(&problem, vec![mean]).unwrap();
        let scheme = SamplingScheme::uniform_single(4).unwrap();
        let expected = c.iter().map(|ci| (mean - ci).powi(2)).sum::<f64>() / 4.0;
        let centered = gradient_noise(&problem, &scheme, &reference, NoiseMode::Centered).unwrap();
        let uncentered = gradient_noise(&problem, &scheme, &reference, NoiseMode::Uncentered).unwrap();
        assert!((centered - expected).abs() < 1e-12);
        assert!((uncentered - expected).abs() < 1e-12);
    }

    #[test]
    fn interpolation_has_zero_noise() {
        // every row consistent with x = (1, -1)
        let rows = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]];
        let y: Vec<f64> = rows.iter().map(|r| r[0] - r[1]).collect();
        let problem = CompositeProblem::smooth(ls(&rows, &y));
        let reference = ReferenceSolution::at(&problem, vec![1.0, -1.0]).unwrap();
        for scheme in [SamplingScheme::uniform_single(3).unwrap(), SamplingScheme::b_nice(3, 2).unwrap()] {
            for mode in [NoiseMode::Centered, NoiseMode::Uncentered] {
                assert_eq!(gradient_noise(&problem, &scheme, &reference, mode).unwrap(), 0.0);
            }
        }
    }
}
