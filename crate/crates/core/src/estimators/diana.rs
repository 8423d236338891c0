use std::ops::Range;

use super::{check_x, require, AssumptionConstants, GradientEstimator, Outcome, Quantizer};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{CompositeProblem, ReferenceSolution};
use crate::rng::RngStreams;

pub const DEFAULT_MAX_WORKERS: usize = 8;

/// DIANA with `m` simulated workers. Components are split into contiguous
/// shards; worker `j` holds `f^j = (m/n) Σ_{i∈S_j} f_i`, so the average of the
/// worker functions is `f`. Workers send quantized differences to learned
/// shifts `h_j`.
#[derive(Debug, Clone)]
pub struct Diana {
    quantizer: Quantizer,
    workers: Option<usize>,
    alpha: Option<f64>,
    sigma_bound: Option<f64>,
    state: Option<DianaState>,
    evals: f64,
}

#[derive(Debug, Clone)]
pub struct DianaState {
    pub shards: Vec<Range<usize>>,
    /// Per-worker shifts.
    pub shifts: Vec<Vec<f64>>,
    /// Mean of `shifts`, maintained incrementally.
    pub master: Vec<f64>,
    pub alpha: f64,
    pub omega: f64,
    /// Largest `(1/m) Σ_j ‖∇f^j(x) - ∇f(x)‖²` seen at any queried iterate.
    pub dispersion_max: f64,
}

impl Diana {
    pub fn new(quantizer: Quantizer) -> Self {
        Self { quantizer, workers: None, alpha: None, sigma_bound: None, state: None, evals: 0.0 }
    }

    /// Number of workers; defaults to `min(n, 8)`.
    pub fn with_workers(mut self, m: usize) -> Self {
        self.workers = Some(m);
        self
    }

    /// Shift step; defaults to `1/(1 + ω)`.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// Fixed bound on the worker-gradient dispersion used in `D1`, `D2`.
    pub fn with_sigma_bound(mut self, sigma_sq: f64) -> Self {
        self.sigma_bound = Some(sigma_sq);
        self
    }

    pub fn quantizer(&self) -> Quantizer {
        self.quantizer
    }

    pub fn state(&self) -> Option<&DianaState> {
        self.state.as_ref()
    }

    pub fn worker_count(&self, n: usize) -> usize {
        self.workers.unwrap_or(n.min(DEFAULT_MAX_WORKERS))
    }

    fn shards(&self, n: usize) -> Result<Vec<Range<usize>>> {
        let m = self.worker_count(n);
        if m == 0 || m > n {
            return Err(Error::InvalidParameter(format!("{m} workers for {n} components")));
        }
        Ok(contiguous_shards(n, m))
    }

    fn alpha_for(&self, omega: f64) -> Result<f64> {
        let cap = 1.0 / (1.0 + omega);
        let alpha = self.alpha.unwrap_or(cap);
        if !(alpha > 0.0 && alpha <= cap * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!("shift step {alpha} outside (0, 1/(1+ω)] = (0, {cap}]")));
        }
        Ok(alpha)
    }

    /// Smoothness bound of the worker functions: `max_j (m/n) Σ_{i∈S_j} L_i`.
    pub fn worker_l_max(&self, problem: &CompositeProblem) -> Result<f64> {
        let n = problem.n();
        let shards = self.shards(n)?;
        let scale = shards.len() as f64 / n as f64;
        let lip = problem.objective.lipschitz();
        Ok(shards.iter().map(|s| scale * lip[s.clone()].iter().sum::<f64>()).fold(0.0, f64::max))
    }

    fn worker_gradients(shards: &[Range<usize>], problem: &CompositeProblem, x: &[f64]) -> Vec<Vec<f64>> {
        let n = problem.n();
        let scale = shards.len() as f64 / n as f64;
        shards
            .iter()
            .map(|s| {
                let mut g = vec![0.0; problem.d()];
                for i in s.clone() {
                    problem.objective.oracle().add_gradient(i, x, scale, &mut g);
                }
                g
            })
            .collect()
    }

    /// Quantized differences `Δ̂_j` from `draw`, then the shared update.
    fn apply(state: &mut DianaState, grads: &[Vec<f64>], deltas_hat: &[Vec<f64>]) -> Vec<f64> {
        let m = state.shards.len() as f64;
        let mut g = state.master.clone();
        for (j, dh) in deltas_hat.iter().enumerate() {
            linalg::axpy(1.0 / m, dh, &mut g);
            linalg::axpy(state.alpha, dh, &mut state.shifts[j]);
            linalg::axpy(state.alpha / m, dh, &mut state.master);
        }
        let mean: Vec<f64> = {
            let mut mean = vec![0.0; g.len()];
            for gj in grads {
                linalg::axpy(1.0 / m, gj, &mut mean);
            }
            mean
        };
        let disp = grads.iter().map(|gj| linalg::dist_sq(gj, &mean)).sum::<f64>() / m;
        state.dispersion_max = state.dispersion_max.max(disp);
        g
    }

    fn deltas(state: &DianaState, grads: &[Vec<f64>]) -> Vec<Vec<f64>> {
        grads.iter().zip(&state.shifts).map(|(g, h)| linalg::sub(g, h)).collect()
    }
}

/// `m` contiguous ranges covering `0..n`, sizes differing by at most one.
pub fn contiguous_shards(n: usize, m: usize) -> Vec<Range<usize>> {
    let base = n / m;
    let extra = n % m;
    let mut start = 0;
    (0..m)
        .map(|j| {
            let len = base + usize::from(j < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

impl GradientEstimator for Diana {
    fn name(&self) -> &'static str {
        "diana"
    }

    fn initialize(&mut self, problem: &CompositeProblem, x0: &[f64]) -> Result<()> {
        check_x(problem, x0)?;
        let d = problem.d();
        let omega = self.quantizer.omega(d)?;
        let alpha = self.alpha_for(omega)?;
        let shards = self.shards(problem.n())?;
        let m = shards.len();
        let grads = Self::worker_gradients(&shards, problem, x0);
        let mut state = DianaState {
            shards,
            shifts: vec![vec![0.0; d]; m],
            master: vec![0.0; d],
            alpha,
            omega,
            dispersion_max: 0.0,
        };
        let mean = problem.objective.grad_full_unchecked(x0);
        state.dispersion_max = grads.iter().map(|g| linalg::dist_sq(g, &mean)).sum::<f64>() / m as f64;
        self.state = Some(state);
        self.evals = 0.0;
        Ok(())
    }

    fn is_initialized(&self) -> bool {
        self.state.is_some()
    }

    fn next_gradient(&mut self, problem: &CompositeProblem, x: &[f64], rng: &mut RngStreams) -> Result<Vec<f64>> {
        let state = self.state.as_mut().ok_or(Error::Uninitialized)?;
        check_x(problem, x)?;
        let grads = Self::worker_gradients(&state.shards, problem, x);
        let deltas_hat = Self::deltas(state, &grads)
            .iter()
            .map(|dj| self.quantizer.quantize(dj, &mut rng.quant))
            .collect::<Result<Vec<_>>>()?;
        let g = Self::apply(state, &grads, &deltas_hat);
        self.evals += problem.n() as f64;
        Ok(g)
    }

    /// Enumerable only with the identity quantizer, where the step is deterministic.
    fn outcomes(&self, problem: &CompositeProblem, x: &[f64]) -> Result<Vec<Outcome<Self>>> {
        let state = require(&self.state)?;
        check_x(problem, x)?;
        if self.quantizer != Quantizer::Identity {
            return Err(Error::InvalidParameter(
                "compressed updates are not enumerable; use a Monte-Carlo check".into(),
            ));
        }
        let grads = Self::worker_gradients(&state.shards, problem, x);
        let mut next_state = state.clone();
        let deltas = Self::deltas(state, &grads);
        let gradient = Self::apply(&mut next_state, &grads, &deltas);
        let next = Diana { state: Some(next_state), evals: self.evals + problem.n() as f64, ..self.clone() };
        Ok(vec![Outcome { probability: 1.0, gradient, next }])
    }

    /// With `m` workers and worker smoothness `L_w`:
    /// `A = (1 + 2ω/m) L_w`, `B = 2ω/m`, `ρ = α`, `C = α L_w`,
    /// `D1 = (1 + ω)σ²/m`, `D2 = ασ²`.
    fn constants(&self, problem: &CompositeProblem, _reference: Option<&ReferenceSolution>) -> Result<AssumptionConstants> {
        let d = problem.d();
        let omega = self.quantizer.omega(d)?;
        let alpha = self.alpha_for(omega)?;
        let m = self.shards(problem.n())?.len() as f64;
        let l_w = self.worker_l_max(problem)?;
        let sigma = match (self.sigma_bound, &self.state) {
            (Some(s), _) => s,
            (None, Some(state)) => state.dispersion_max,
            (None, None) => return Err(Error::Uninitialized),
        };
        Ok(AssumptionConstants {
            a: (1.0 + 2.0 * omega / m) * l_w,
            b: 2.0 * omega / m,
            rho: alpha,
            c: alpha * l_w,
            d1: (1.0 + omega) * sigma / m,
            d2: alpha * sigma,
            g: None,
        })
    }

    /// `(1/m) Σ_j ‖h_j - ∇f^j(x*)‖²`.
    fn sigma_sq(&self, problem: &CompositeProblem, reference: &ReferenceSolution) -> Result<f64> {
        let state = require(&self.state)?;
        let m = state.shards.len() as f64;
        let scale = m / problem.n() as f64;
        let mut total = 0.0;
        for (shard, h) in state.shards.iter().zip(&state.shifts) {
            let mut g_star = vec![0.0; problem.d()];
            for i in shard.clone() {
                linalg::axpy(scale, reference.jacobian_star.row(i), &mut g_star);
            }
            total += linalg::dist_sq(h, &g_star);
        }
        Ok(total / m)
    }

    fn grad_evals(&self) -> f64 {
        self.evals
    }

    fn batch_size(&self) -> usize {
        self.state.as_ref().map_or(0, |s| s.shards.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problem::{FiniteSumObjective, LinearModel, Loss};

    fn problem() -> CompositeProblem {
        let a = Matrix::from_rows(&[
            vec![1.0, 0.5, 0.0],
            vec![-0.3, 2.0, 1.0],
            vec![0.7, -1.0, 0.2],
            vec![1.5, 0.2, -0.4],
            vec![0.1, 0.1, 0.9],
        ]);
        CompositeProblem::smooth(
            FiniteSumObjective::from_components(
                LinearModel::new(Loss::LeastSquares, a, vec![1.0, 0.0, -1.0, 2.0, 0.5]).unwrap(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn shards_cover_range() {
        let s = contiguous_shards(10, 4);
        assert_eq!(s, vec![0..3, 3..6, 6..8, 8..10]);
        assert_eq!(contiguous_shards(3, 3), vec![0..1, 1..2, 2..3]);
    }

    #[test]
    fn master_shift_is_mean_of_worker_shifts() {
        let p = problem();
        let mut est = Diana::new(Quantizer::RandomSparsification { r: 1 }).with_workers(3);
        est.initialize(&p, &[0.0; 3]).unwrap();
        let mut rng = RngStreams::new(4);
        let mut x = vec![0.0; 3];
        for _ in 0..500 {
            let g = est.next_gradient(&p, &x, &mut rng).unwrap();
            linalg::axpy(-0.01, &g, &mut x);
        }
        let state = est.state().unwrap();
        let mut mean = vec![0.0; 3];
        for h in &state.shifts {
            linalg::axpy(1.0 / 3.0, h, &mut mean);
        }
        for (a, b) in mean.iter().zip(&state.master) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_quantizer_gives_exact_gradient() {
        let p = problem();
        let mut est = Diana::new(Quantizer::Identity).with_workers(2);
        est.initialize(&p, &[0.0; 3]).unwrap();
        let x = [0.2, -0.1, 0.4];
        let g = est.next_gradient(&p, &x, &mut RngStreams::new(0)).unwrap();
        let full = p.objective.grad_full(&x).unwrap();
        for (a, b) in g.iter().zip(&full) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_constants() {
        let p = problem();
        let mut est = Diana::new(Quantizer::Identity).with_workers(5).with_sigma_bound(2.0);
        est.initialize(&p, &[0.0; 3]).unwrap();
        let c = est.constants(&p, None).unwrap();
        let l_max = p.objective.l_max();
        // five workers of one component each: worker smoothness equals L_max
        assert!((c.a - l_max).abs() < 1e-12);
        assert_eq!(c.b, 0.0);
        assert_eq!(c.rho, 1.0);
        assert!((c.c - l_max).abs() < 1e-12);
        assert!((c.d1 - 2.0 / 5.0).abs() < 1e-15);
        assert_eq!(c.d2, 2.0);
    }

    #[test]
    fn alpha_above_cap_rejected() {
        let p = problem();
        let mut est = Diana::new(Quantizer::RandomSparsification { r: 1 }).with_alpha(0.5);
        assert!(est.initialize(&p, &[0.0; 3]).is_err());
    }
}
