//! Samplings over `[n]`, the sampling vectors they induce, and the
//! expected-smoothness / expected-residual constants.
//!
//! A proper sampling `S` with inclusion probabilities `p_i = P(i ∈ S) > 0`
//! defines the sampling vector `v_i = 1(i ∈ S) / p_i`, which has `E[v_i] = 1`.
//! The subsampled gradient is `∇f_v(x) = (1/n) Σ_{i∈S} v_i ∇f_i(x)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::problem::FiniteSumObjective;

/// Largest support `enumerate_support` will materialize.
pub const SUPPORT_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum SamplingScheme {
    /// Uniform over all subsets of size `b` (minibatching without replacement).
    BNice { n: usize, b: usize },
    /// A single index `i` drawn with probability `probs[i]`.
    SingleElement { probs: Vec<f64> },
    /// Deterministic `S = [n]`.
    FullBatch { n: usize },
}

/// One realization of a sampling: the chosen indices and the matching
/// sampling-vector entries `v_i = 1/p_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledBatch {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl SampledBatch {
    /// Dense sampling vector, zero off the support.
    pub fn sampling_vector(&self, n: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            v[i] = w;
        }
        v
    }
}

/// An element of the support with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPoint {
    pub batch: SampledBatch,
    pub probability: f64,
}

impl SamplingScheme {
    pub fn b_nice(n: usize, b: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sampling over an empty index set".into()));
        }
        if b == 0 || b > n {
            return Err(Error::InvalidParameter(format!("minibatch size {b} outside [1, {n}]")));
        }
        Ok(SamplingScheme::BNice { n, b })
    }

    pub fn single_element(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("sampling over an empty index set".into()));
        }
        if let Some(p) = probs.iter().find(|&&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sampling is not proper: probability {p} is not positive"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {total}, not 1")));
        }
        Ok(SamplingScheme::SingleElement { probs })
    }

    pub fn uniform_single(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sampling over an empty index set".into()));
        }
        Self::single_element(vec![1.0 / n as f64; n])
    }

    pub fn full_batch(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("sampling over an empty index set".into()));
        }
        Ok(SamplingScheme::FullBatch { n })
    }

    pub fn n(&self) -> usize {
        match self {
            SamplingScheme::BNice { n, .. } | SamplingScheme::FullBatch { n } => *n,
            SamplingScheme::SingleElement { probs } => probs.len(),
        }
    }

    /// `p_i = P(i ∈ S)`.
    pub fn inclusion_probability(&self, i: usize) -> f64 {
        match self {
            SamplingScheme::BNice { n, b } => *b as f64 / *n as f64,
            SamplingScheme::SingleElement { probs } => probs[i],
            SamplingScheme::FullBatch { .. } => 1.0,
        }
    }

    /// Number of indices in every draw.
    pub fn batch_size(&self) -> usize {
        match self {
            SamplingScheme::BNice { b, .. } => *b,
            SamplingScheme::SingleElement { .. } => 1,
            SamplingScheme::FullBatch { n } => *n,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        match self {
            SamplingScheme::BNice { n, b } => n == b,
            SamplingScheme::SingleElement { probs } => probs.len() == 1,
            SamplingScheme::FullBatch { .. } => true,
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SampledBatch {
        match self {
            SamplingScheme::BNice { n, b } => {
                let (n, b) = (*n, *b);
                let mut pool: Vec<usize> = (0..n).collect();
                // partial Fisher–Yates
                for i in 0..b {
                    let j = rng.random_range(i..n);
                    pool.swap(i, j);
                }
                pool.truncate(b);
                let w = n as f64 / b as f64;
                SampledBatch { weights: vec![w; b], indices: pool }
            }
            SamplingScheme::SingleElement { probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = probs.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                SampledBatch { indices: vec![chosen], weights: vec![1.0 / probs[chosen]] }
            }
            SamplingScheme::FullBatch { n } => SampledBatch { indices: (0..*n).collect(), weights: vec![1.0; *n] },
        }
    }

    pub fn support_size(&self) -> u128 {
        match self {
            SamplingScheme::BNice { n, b } => binomial(*n as u64, *b as u64),
            SamplingScheme::SingleElement { probs } => probs.len() as u128,
            SamplingScheme::FullBatch { .. } => 1,
        }
    }

    /// Every subset the sampling can produce, with its probability.
    pub fn enumerate_support(&self) -> Result<Vec<SupportPoint>> {
        let size = self.support_size();
        if size > SUPPORT_LIMIT {
            return Err(Error::SupportTooLarge { size, limit: SUPPORT_LIMIT });
        }
        Ok(match self {
            SamplingScheme::BNice { n, b } => {
                let prob = 1.0 / size as f64;
                let w = *n as f64 / *b as f64;
                combinations(*n, *b)
                    .into_iter()
                    .map(|indices| SupportPoint {
                        batch: SampledBatch { weights: vec![w; indices.len()], indices },
                        probability: prob,
                    })
                    .collect()
            }
            SamplingScheme::SingleElement { probs } => probs
                .iter()
                .enumerate()
                .map(|(i, &p)| SupportPoint {
                    batch: SampledBatch { indices: vec![i], weights: vec![1.0 / p] },
                    probability: p,
                })
                .collect(),
            SamplingScheme::FullBatch { n } => vec![SupportPoint {
                batch: SampledBatch { indices: (0..*n).collect(), weights: vec![1.0; *n] },
                probability: 1.0,
            }],
        })
    }

    /// Expected smoothness constant `𝓛` of the sampling for `objective`.
    ///
    /// b-nice uses the closed form `𝓛(b)`; a single-element sampling uses the
    /// surrogate `max_j E[L_v v_j]` with `L_v = (1/n) Σ v_i L_i`; the full
    /// batch gives `L`.
    pub fn expected_smoothness(&self, objective: &FiniteSumObjective) -> Result<f64> {
        self.check_n(objective)?;
        match self {
            SamplingScheme::BNice { n, b } => Ok(expected_smoothness_b_nice(*n, *b, objective.l_max(), objective.l())),
            SamplingScheme::SingleElement { .. } => surrogate_expected_smoothness(self, objective.lipschitz()),
            SamplingScheme::FullBatch { .. } => Ok(objective.l()),
        }
    }

    fn check_n(&self, objective: &FiniteSumObjective) -> Result<()> {
        if self.n() != objective.n() {
            return Err(Error::InvalidParameter(format!(
                "sampling over {} components used with {} components",
                self.n(),
                objective.n()
            )));
        }
        Ok(())
    }

    /// Exact `E‖(1/n) Σ_{i∈S} v_i z_i - z̄‖²` for the rows `z_i` of `z`, where
    /// `z̄` is their mean.
    pub fn sampled_mean_variance(&self, z: &Matrix) -> Result<f64> {
        let n = self.n();
        if z.rows() != n {
            return Err(Error::DimensionMismatch { expected: n, got: z.rows() });
        }
        let mean = row_mean(z);
        Ok(match self {
            SamplingScheme::FullBatch { .. } => 0.0,
            SamplingScheme::BNice { n, b } => {
                if *n == 1 {
                    return Ok(0.0);
                }
                let (nf, bf) = (*n as f64, *b as f64);
                let spread: f64 = (0..*n).map(|i| linalg::dist_sq(z.row(i), &mean)).sum::<f64>() / nf;
                spread * (nf - bf) / (bf * (nf - 1.0))
            }
            SamplingScheme::SingleElement { probs } => {
                let nf = n as f64;
                probs
                    .iter()
                    .enumerate()
                    .map(|(i, &p)| {
                        let s = 1.0 / (nf * p);
                        p * z.row(i).iter().zip(&mean).map(|(zi, m)| (s * zi - m).powi(2)).sum::<f64>()
                    })
                    .sum()
            }
        })
    }
}

fn row_mean(z: &Matrix) -> Vec<f64> {
    let mut mean = vec![0.0; z.cols()];
    let w = 1.0 / z.rows() as f64;
    for i in 0..z.rows() {
        linalg::axpy(w, z.row(i), &mut mean);
    }
    mean
}

/// `𝓛(b) = (1/b)((n-b)/(n-1)) L_max + (n/b)((b-1)/(n-1)) L`; equals `L` when `n = 1`.
pub fn expected_smoothness_b_nice(n: usize, b: usize, l_max: f64, l: f64) -> f64 {
    if n == 1 {
        return l;
    }
    let (nf, bf) = (n as f64, b as f64);
    (nf - bf) / (bf * (nf - 1.0)) * l_max + nf * (bf - 1.0) / (bf * (nf - 1.0)) * l
}

/// `ζ(b) = (1/b)((n-b)/(n-1)) L_max`; zero when `n = 1`.
pub fn expected_residual_b_nice(n: usize, b: usize, l_max: f64) -> f64 {
    if n == 1 {
        return 0.0;
    }
    let (nf, bf) = (n as f64, b as f64);
    (nf - bf) / (bf * (nf - 1.0)) * l_max
}

/// Expected residual `ζ(b)` for b-nice sampling on `objective`.
pub fn expected_residual(b: usize, objective: &FiniteSumObjective) -> Result<f64> {
    let n = objective.n();
    if b == 0 || b > n {
        return Err(Error::InvalidParameter(format!("minibatch size {b} outside [1, {n}]")));
    }
    Ok(expected_residual_b_nice(n, b, objective.l_max()))
}

/// `max_j E[L_v v_j]` by enumeration, with `L_v = (1/n) Σ_i v_i L_i`.
pub fn surrogate_expected_smoothness(scheme: &SamplingScheme, lipschitz: &[f64]) -> Result<f64> {
    let n = scheme.n();
    if lipschitz.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lipschitz.len() });
    }
    let mut per_index = vec![0.0; n];
    for point in scheme.enumerate_support()? {
        let batch = &point.batch;
        let l_v: f64 = batch.indices.iter().zip(&batch.weights).map(|(&i, &v)| v * lipschitz[i]).sum::<f64>() / n as f64;
        for (&j, &v) in batch.indices.iter().zip(&batch.weights) {
            per_index[j] += point.probability * l_v * v;
        }
    }
    Ok(per_index.into_iter().fold(0.0, f64::max))
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// All size-`k` subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        // rightmost position that can still advance
        let mut pos = k;
        while pos > 0 && current[pos - 1] == n - k + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return out;
        }
        current[pos - 1] += 1;
        for j in pos..k {
            current[j] = current[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_batch_draw_is_everything() {
        let s = SamplingScheme::full_batch(4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let batch = s.draw(&mut rng);
        assert_eq!(batch.indices, vec![0, 1, 2, 3]);
        assert_eq!(batch.weights, vec![1.0; 4]);
    }

    #[test]
    fn b_nice_with_b_equal_n_is_full() {
        let s = SamplingScheme::b_nice(5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut batch = s.draw(&mut rng);
        batch.indices.sort_unstable();
        assert_eq!(batch.indices, (0..5).collect::<Vec<_>>());
        assert_eq!(batch.weights, vec![1.0; 5]);
    }

    #[test]
    fn b_nice_draw_has_distinct_indices() {
        let s = SamplingScheme::b_nice(10, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let mut idx = s.draw(&mut rng).indices;
            idx.sort_unstable();
            idx.dedup();
            assert_eq!(idx.len(), 4);
            assert!(idx.iter().all(|&i| i < 10));
        }
    }

    #[test]
    fn b_nice_inclusion_frequency() {
        let (n, b, draws) = (6usize, 2usize, 100_000usize);
        let s = SamplingScheme::b_nice(n, b).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            for i in s.draw(&mut rng).indices {
                counts[i] += 1;
            }
        }
        let p = b as f64 / n as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for c in counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - p).abs() < 3.0 * se, "frequency {freq} vs {p} (se {se})");
        }
    }

    #[test]
    fn enumerate_b_nice_4_2() {
        let support = SamplingScheme::b_nice(4, 2).unwrap().enumerate_support().unwrap();
        assert_eq!(support.len(), 6);
        for p in &support {
            assert!((p.probability - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn enumerate_uniform_single() {
        let support = SamplingScheme::uniform_single(5).unwrap().enumerate_support().unwrap();
        assert_eq!(support.len(), 5);
        assert!(support.iter().all(|p| p.batch.indices.len() == 1 && (p.probability - 0.2).abs() < 1e-15));
    }

    #[test]
    fn sampling_vectors_are_unbiased_under_enumeration() {
        let schemes = [
            SamplingScheme::b_nice(7, 3).unwrap(),
            SamplingScheme::single_element(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
            SamplingScheme::full_batch(3).unwrap(),
            SamplingScheme::b_nice(8, 1).unwrap(),
        ];
        for s in &schemes {
            let n = s.n();
            let mut expectation = vec![0.0; n];
            let mut total = 0.0;
            for point in s.enumerate_support().unwrap() {
                total += point.probability;
                for (e, v) in expectation.iter_mut().zip(point.batch.sampling_vector(n)) {
                    *e += point.probability * v;
                }
            }
            assert!((total - 1.0).abs() < 1e-12);
            for e in expectation {
                assert!((e - 1.0).abs() < 1e-12, "{s:?}: E[v_i] = {e}");
            }
        }
    }

    #[test]
    fn support_too_large() {
        let s = SamplingScheme::b_nice(40, 20).unwrap();
        assert!(matches!(s.enumerate_support(), Err(Error::SupportTooLarge { .. })));
    }

    #[test]
    fn expected_smoothness_endpoints_and_hand_value() {
        assert_eq!(expected_smoothness_b_nice(9, 1, 7.0, 2.0), 7.0);
        assert!((expected_smoothness_b_nice(9, 9, 7.0, 2.0) - 2.0).abs() < 1e-15);
        // (1/2)(2/3)·10 + (4/2)(1/3)·4 = 6
        assert!((expected_smoothness_b_nice(4, 2, 10.0, 4.0) - 6.0).abs() < 1e-14);
        assert_eq!(expected_smoothness_b_nice(1, 1, 3.0, 3.0), 3.0);
    }

    #[test]
    fn expected_residual_values() {
        assert_eq!(expected_residual_b_nice(5, 5, 3.0), 0.0);
        assert_eq!(expected_residual_b_nice(5, 1, 3.0), 3.0);
        assert!((expected_residual_b_nice(4, 2, 10.0) - 10.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn surrogate_for_uniform_single_is_l_max() {
        let lip = [1.0, 5.0, 2.0];
        let s = SamplingScheme::uniform_single(3).unwrap();
        assert!((surrogate_expected_smoothness(&s, &lip).unwrap() - 5.0).abs() < 1e-12);
        // importance sampling proportional to L_i gives the mean
        let total: f64 = lip.iter().sum();
        let s = SamplingScheme::single_element(lip.iter().map(|l| l / total).collect()).unwrap();
        assert!((surrogate_expected_smoothness(&s, &lip).unwrap() - total / 3.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_variance_matches_enumeration() {
        let z = Matrix::from_rows(&[
            vec![1.0, -2.0],
            vec![0.5, 3.0],
            vec![-1.5, 0.0],
            vec![2.0, 2.0],
            vec![0.0, -1.0],
        ]);
        let n = z.rows();
        let mean = row_mean(&z);
        for s in [
            SamplingScheme::b_nice(n, 1).unwrap(),
            SamplingScheme::b_nice(n, 2).unwrap(),
            SamplingScheme::b_nice(n, 4).unwrap(),
            SamplingScheme::single_element(vec![0.1, 0.3, 0.2, 0.25, 0.15]).unwrap(),
            SamplingScheme::full_batch(n).unwrap(),
        ] {
            let mut brute = 0.0;
            for point in s.enumerate_support().unwrap() {
                let mut est = vec![0.0; 2];
                for (&i, &v) in point.batch.indices.iter().zip(&point.batch.weights) {
                    linalg::axpy(v / n as f64, z.row(i), &mut est);
                }
                brute += point.probability * linalg::dist_sq(&est, &mean);
            }
            let closed = s.sampled_mean_variance(&z).unwrap();
            assert!((brute - closed).abs() < 1e-12, "{s:?}: {brute} vs {closed}");
        }
    }

    #[test]
    fn improper_samplings_rejected() {
        assert!(SamplingScheme::single_element(vec![0.5, 0.5, 0.0]).is_err());
        assert!(SamplingScheme::single_element(vec![0.5, 0.6]).is_err());
        assert!(SamplingScheme::b_nice(3, 0).is_err());
        assert!(SamplingScheme::b_nice(3, 4).is_err());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(6, 2).len(), 15);
        assert_eq!(combinations(5, 0), vec![Vec::<usize>::new()]);
        assert!(binomial(300, 150) > SUPPORT_LIMIT);
        assert_eq!(binomial(10, 3), 120);
    }
}
