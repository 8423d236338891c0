//! Step-size thresholds, convergence-bound evaluators, total complexities and
//! optimal minibatch sizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{AssumptionConstants, MConvention};
use crate::sampling::{expected_residual_b_nice, expected_smoothness_b_nice};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSizePolicy {
    Constant { gamma: f64 },
    /// `γ_k = γ0 / √(k + 1)`.
    InvSqrt { gamma0: f64 },
}

impl StepSizePolicy {
    pub fn step(&self, k: u64) -> f64 {
        match *self {
            StepSizePolicy::Constant { gamma } => gamma,
            StepSizePolicy::InvSqrt { gamma0 } => gamma0 / ((k + 1) as f64).sqrt(),
        }
    }

    pub fn initial(&self) -> f64 {
        self.step(0)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.initial();
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::NonPositiveStep(g));
        }
        Ok(())
    }

    /// `γ_0, …, γ_{t-1}`.
    pub fn prefix(&self, t: u64) -> Vec<f64> {
        (0..t).map(|k| self.step(k)).collect()
    }
}

/// `min{1/(4(A + MC)), 1/(2L)}`.
pub fn default_constant_step(c: &AssumptionConstants, l: f64, convention: MConvention) -> Result<f64> {
    let amc = c.a_plus_mc(convention);
    if !(amc > 0.0) && !(l > 0.0) {
        return Err(Error::InvalidParameter("all constants are zero; no step size is determined".into()));
    }
    let first = if amc > 0.0 { 1.0 / (4.0 * amc) } else { f64::INFINITY };
    let second = if l > 0.0 { 1.0 / (2.0 * l) } else { f64::INFINITY };
    Ok(first.min(second))
}

/// Minibatch SAGA step `1/(4(2𝓛(b) + ζ(b)))`.
pub fn saga_step(n: usize, b: usize, l_max: f64, l: f64) -> f64 {
    1.0 / (4.0 * (2.0 * expected_smoothness_b_nice(n, b, l_max, l) + expected_residual_b_nice(n, b, l_max)))
}

/// Minibatch L-SVRG step `1/(12𝓛(b))`, for refresh probability `1/n`.
pub fn svrg_step(n: usize, b: usize, l_max: f64, l: f64) -> f64 {
    1.0 / (12.0 * expected_smoothness_b_nice(n, b, l_max, l))
}

/// Miniblock SEGA step `b/(4(3d - b)L)`.
pub fn sega_step(d: usize, b: usize, l: f64) -> f64 {
    b as f64 / (4.0 * (3.0 * d as f64 - b as f64) * l)
}

/// Quantities the convergence bounds are evaluated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    /// `‖x_0 - x*‖²`.
    pub dist0_sq: f64,
    /// `F(x_0) - F*`.
    pub delta0: f64,
    pub sigma0_sq: f64,
    pub constants: AssumptionConstants,
    pub l: f64,
    /// Whether the regularizer is nonzero.
    pub regularized: bool,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        for (name, v) in [("‖x0 - x*‖²", self.dist0_sq), ("δ0", self.delta0), ("σ0²", self.sigma0_sq), ("L", self.l)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Jensen weights `(1 - 2γ_k(A + MC))γ_k`.
pub fn jensen_weight(gamma: f64, a_plus_mc: f64) -> f64 {
    (1.0 - 2.0 * gamma * a_plus_mc) * gamma
}

/// General bound on `E[F(x̄_t) - F*]` for a nonincreasing schedule, with `M = B/ρ`:
///
/// ```text
/// (‖x0 - x*‖² + 2γ0(δ0 + γ0 M σ0²) + 2(D1 + 2M D2) Σ γ_k²) / (2 Σ (1 - 2γ_k(A + MC)) γ_k)
/// ```
///
/// Requires `γ0 < min{1/(2(A + MC)), 1/L}`.
pub fn theorem1_bound(inputs: &BoundInputs, steps: &[f64]) -> Result<f64> {
    inputs.validate()?;
    let Some(&g0) = steps.first() else {
        return Err(Error::InvalidParameter("empty step schedule".into()));
    };
    if steps.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::NonPositiveStep(steps.iter().cloned().fold(f64::INFINITY, f64::min)));
    }
    if steps.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidParameter("step schedule must be nonincreasing".into()));
    }
    let c = &inputs.constants;
    let m = c.m(MConvention::General);
    let amc = c.a_plus_mc(MConvention::General);
    let threshold = threshold_min(0.5 / amc, 1.0 / inputs.l);
    if !(g0 < threshold) {
        return Err(Error::StepThreshold { gamma: g0, threshold });
    }
    let sum_sq: f64 = steps.iter().map(|g| g * g).sum();
    let denom: f64 = 2.0 * steps.iter().map(|&g| jensen_weight(g, amc)).sum::<f64>();
    let numer = inputs.dist0_sq + 2.0 * g0 * (inputs.delta0 + g0 * m * inputs.sigma0_sq) + 2.0 * (c.d1 + 2.0 * m * c.d2) * sum_sq;
    Ok(numer / denom)
}

fn threshold_min(a: f64, b: f64) -> f64 {
    let a = if a.is_finite() { a } else { f64::INFINITY };
    let b = if b.is_finite() { b } else { f64::INFINITY };
    a.min(b)
}

/// Limit of the constant-step bound as `t → ∞`: `2γ(D1 + M D2)` with `M = B/ρ`.
pub fn neighborhood_radius(c: &AssumptionConstants, gamma: f64) -> f64 {
    2.0 * gamma * (c.d1 + c.m(MConvention::General) * c.d2)
}

/// Constant-step bound `(2γ(δ0 + γMσ0²) + ‖x0 - x*‖²)/(γt) + 2γ(D1 + M D2)`,
/// valid for `γ ≤ min{1/(4(A + MC)), 1/(2L)}` with `M = B/ρ`.
pub fn constant_step_bound(inputs: &BoundInputs, gamma: f64, t: u64) -> Result<f64> {
    inputs.validate()?;
    check_corollary_step(inputs, gamma)?;
    if t == 0 {
        return Err(Error::InvalidParameter("t must be positive".into()));
    }
    let c = &inputs.constants;
    let m = c.m(MConvention::General);
    Ok((2.0 * gamma * (inputs.delta0 + gamma * m * inputs.sigma0_sq) + inputs.dist0_sq) / (gamma * t as f64)
        + neighborhood_radius(c, gamma))
}

/// Decreasing-step expression for `γ_k = γ/√(k+1)`, `M = B/ρ`:
///
/// ```text
/// (γ(δ0 + γMσ0²) + ‖x0 - x*‖² + (D1/2 + M D2)(log t + 1)) / (γ(√t - 1))
/// ```
///
/// Defined for `t ≥ 2`.
pub fn inv_sqrt_bound(inputs: &BoundInputs, gamma: f64, t: u64) -> Result<f64> {
    inputs.validate()?;
    check_corollary_step(inputs, gamma)?;
    if t < 2 {
        return Err(Error::InvalidParameter("the decreasing-step expression needs t ≥ 2".into()));
    }
    let c = &inputs.constants;
    let m = c.m(MConvention::General);
    let tf = t as f64;
    let numer =
        gamma * (inputs.delta0 + gamma * m * inputs.sigma0_sq) + inputs.dist0_sq + (c.d1 / 2.0 + m * c.d2) * (tf.ln() + 1.0);
    Ok(numer / (gamma * (tf.sqrt() - 1.0)))
}

fn check_corollary_step(inputs: &BoundInputs, gamma: f64) -> Result<()> {
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveStep(gamma));
    }
    let threshold = threshold_min(0.25 / inputs.constants.a_plus_mc(MConvention::General), 0.5 / inputs.l);
    if gamma > threshold * (1.0 + 1e-12) {
        return Err(Error::StepThreshold { gamma, threshold });
    }
    Ok(())
}

/// Smooth variance-reduced bound `(‖x0 - x*‖² + 2Mγ²σ0²)/(γk)` with
/// `M = B/(2ρ)`. Needs `R = 0`, `D1 = D2 = 0` and `γ ≤ 1/(4(A + MC))`.
pub fn vr_bound(inputs: &BoundInputs, gamma: f64, k: u64) -> Result<f64> {
    inputs.validate()?;
    if inputs.regularized {
        return Err(Error::InvalidParameter("the smooth variance-reduced bound requires R = 0".into()));
    }
    let c = &inputs.constants;
    if !c.is_variance_reduced() {
        return Err(Error::InvalidParameter("the smooth variance-reduced bound requires D1 = D2 = 0".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::NonPositiveStep(gamma));
    }
    let threshold = 0.25 / c.a_plus_mc(MConvention::Smooth);
    if gamma > threshold * (1.0 + 1e-12) {
        return Err(Error::StepThreshold { gamma, threshold });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let m = c.m(MConvention::Smooth);
    Ok((inputs.dist0_sq + 2.0 * m * gamma * gamma * inputs.sigma0_sq) / (gamma * k as f64))
}

/// Iterations after which the smooth variance-reduced bound is at most `ε`,
/// given `σ0² ≤ G‖x0 - x*‖²` and `γ = 1/(4(A + BC/(2ρ)))`:
/// `(4(A + BC/(2ρ)) + BG/(2(2ρA + BC))) ‖x0 - x*‖²/ε`.
pub fn vr_iteration_complexity(c: &AssumptionConstants, dist0_sq: f64, eps: f64) -> Result<f64> {
    let g = c.g.ok_or(Error::InvalidParameter("the estimator declares no G constant".into()))?;
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {eps}")));
    }
    let lead = 4.0 * c.a_plus_mc(MConvention::Smooth);
    let denom = 2.0 * (2.0 * c.rho * c.a + c.b * c.c);
    let tail = if c.b * g == 0.0 { 0.0 } else { c.b * g / denom };
    Ok((lead + tail) * dist0_sq / eps)
}

fn check_b(b: usize, n: usize) -> Result<()> {
    if b == 0 || b > n {
        return Err(Error::InvalidParameter(format!("minibatch size {b} outside [1, {n}]")));
    }
    Ok(())
}

/// `L ≤ L_max ≤ nL`, up to a relative rounding slack.
pub fn check_constants(l: f64, l_max: f64, n: usize) -> Result<()> {
    let slack = 1e-9 * l_max.abs().max(l.abs());
    if !(l > 0.0) || !(l <= l_max + slack) || !(l_max <= n as f64 * l + slack) || n == 0 {
        return Err(Error::InconsistentConstants { l, l_max, n });
    }
    Ok(())
}

/// Total complexity of minibatch SAGA:
/// `(4E/(n-1) + n(n-b)L_max L/(2E)) r0²/ε` with `E = 3(n-b)L_max + 2n(b-1)L`.
pub fn k_saga(b: usize, l: f64, l_max: f64, n: usize, r0_sq: f64, eps: f64) -> Result<f64> {
    check_b(b, n)?;
    if n < 2 {
        return Err(Error::InvalidParameter("minibatch SAGA complexity needs n ≥ 2".into()));
    }
    let (nf, bf) = (n as f64, b as f64);
    let e = 3.0 * (nf - bf) * l_max + 2.0 * nf * (bf - 1.0) * l;
    Ok((4.0 * e / (nf - 1.0) + nf * (nf - bf) * l_max * l / (2.0 * e)) * r0_sq / eps)
}

/// Integer minimizer of [`k_saga`] over `[1, n]`.
///
/// Returns `n` when `L_max ≥ 2nL/3`; otherwise evaluates the stationary
/// point `b_1` and maps it to `1`, `⌊b_1⌋` or `n`.
pub fn optimal_b_saga(l: f64, l_max: f64, n: usize) -> Result<usize> {
    check_constants(l, l_max, n)?;
    if n == 1 {
        return Ok(1);
    }
    let nf = n as f64;
    let disc = 2.0 * nf * l - 3.0 * l_max;
    if disc <= 0.0 {
        return Ok(n);
    }
    let b1 = saga_b1(l, l_max, n);
    Ok(if b1 < 2.0 {
        1
    } else if b1 < nf {
        b1.floor() as usize
    } else {
        n
    })
}

/// `n((n-1)L√L_max - 2√(2nL - 3L_max)(3L_max - 2L)) / (2(2nL - 3L_max)^{3/2})`.
pub fn saga_b1(l: f64, l_max: f64, n: usize) -> f64 {
    let nf = n as f64;
    let disc = 2.0 * nf * l - 3.0 * l_max;
    nf * ((nf - 1.0) * l * l_max.sqrt() - 2.0 * disc.sqrt() * (3.0 * l_max - 2.0 * l)) / (2.0 * disc.powf(1.5))
}

/// Total complexity of minibatch L-SVRG with refresh probability `1/n`:
/// `(1 + 2b)(12𝓛(b) + nL/6) r0²/ε`.
pub fn k_svrg(b: usize, l: f64, l_max: f64, n: usize, r0_sq: f64, eps: f64) -> Result<f64> {
    check_b(b, n)?;
    let bf = b as f64;
    Ok((1.0 + 2.0 * bf) * (12.0 * expected_smoothness_b_nice(n, b, l_max, l) + n as f64 * l / 6.0) * r0_sq / eps)
}

/// `6√(n(L_max - L)/(72(nL - L_max) + n(n-1)L))`.
pub fn svrg_b_continuous(l: f64, l_max: f64, n: usize) -> f64 {
    let nf = n as f64;
    let numer = (nf * (l_max - l)).max(0.0);
    let denom = 72.0 * (nf * l - l_max).max(0.0) + nf * (nf - 1.0) * l;
    6.0 * (numer / denom).sqrt()
}

/// Rounds the continuous minimizer to whichever of floor/ceil has the smaller
/// [`k_svrg`] (ties to the smaller b), clamped to `[1, n]`.
pub fn optimal_b_svrg(l: f64, l_max: f64, n: usize) -> Result<usize> {
    check_constants(l, l_max, n)?;
    if n == 1 {
        return Ok(1);
    }
    let b = svrg_b_continuous(l, l_max, n);
    let lo = (b.floor() as usize).clamp(1, n);
    let hi = (b.ceil() as usize).clamp(1, n);
    if lo == hi {
        return Ok(lo);
    }
    let k_lo = k_svrg(lo, l, l_max, n, 1.0, 1.0)?;
    let k_hi = k_svrg(hi, l, l_max, n, 1.0, 1.0)?;
    Ok(if k_hi < k_lo { hi } else { lo })
}

/// Total complexity of miniblock SEGA, `4(3d - b)L r0²/ε`, counted in
/// sampled gradient coordinates.
pub fn k_sega(b: usize, d: usize, l: f64, r0_sq: f64, eps: f64) -> Result<f64> {
    check_b(b, d)?;
    Ok(4.0 * (3.0 * d as f64 - b as f64) * l * r0_sq / eps)
}

/// The miniblock minimizing [`k_sega`]: always the full dimension.
pub fn optimal_b_sega(d: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    Ok(d)
}
