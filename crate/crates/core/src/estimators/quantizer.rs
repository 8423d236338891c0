use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{binomial, combinations, SUPPORT_LIMIT};

/// Unbiased compression operator with `E‖Q(x)‖² ≤ (1 + ω)‖x‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantizer {
    Identity,
    /// Keeps `r` uniformly chosen coordinates, scaled by `d/r`.
    RandomSparsification { r: usize },
}

impl Quantizer {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            Quantizer::Identity => Ok(()),
            Quantizer::RandomSparsification { r } if r == 0 || r > d => Err(Error::InvalidParameter(format!(
                "sparsification keeps {r} coordinates, need 1 ≤ r ≤ d = {d}"
            ))),
            Quantizer::RandomSparsification { .. } => Ok(()),
        }
    }

    pub fn omega(&self, d: usize) -> Result<f64> {
        self.validate(d)?;
        Ok(match *self {
            Quantizer::Identity => 0.0,
            Quantizer::RandomSparsification { r } => d as f64 / r as f64 - 1.0,
        })
    }

    pub fn quantize<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let d = x.len();
        self.validate(d)?;
        Ok(match *self {
            Quantizer::Identity => x.to_vec(),
            Quantizer::RandomSparsification { r } => {
                let scale = d as f64 / r as f64;
                let mut out = vec![0.0; d];
                for j in rand::seq::index::sample(rng, d, r) {
                    out[j] = scale * x[j];
                }
                out
            }
        })
    }

    /// All outcomes of `Q(x)` with their probabilities.
    pub fn outcomes(&self, x: &[f64]) -> Result<Vec<(f64, Vec<f64>)>> {
        let d = x.len();
        self.validate(d)?;
        match *self {
            Quantizer::Identity => Ok(vec![(1.0, x.to_vec())]),
            Quantizer::RandomSparsification { r } => {
                let size = binomial(d as u64, r as u64);
                if size > SUPPORT_LIMIT {
                    return Err(Error::SupportTooLarge { size, limit: SUPPORT_LIMIT });
                }
                let prob = 1.0 / size as f64;
                let scale = d as f64 / r as f64;
                Ok(combinations(d, r)
                    .into_iter()
                    .map(|kept| {
                        let mut out = vec![0.0; d];
                        for j in kept {
                            out[j] = scale * x[j];
                        }
                        (prob, out)
                    })
                    .collect())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_full_sparsification_are_exact() {
        let x = [1.0, -2.0, 3.5];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(Quantizer::Identity.quantize(&x, &mut rng).unwrap(), x.to_vec());
        assert_eq!(Quantizer::RandomSparsification { r: 3 }.quantize(&x, &mut rng).unwrap(), x.to_vec());
        assert_eq!(Quantizer::Identity.omega(3).unwrap(), 0.0);
    }

    #[test]
    fn sparsification_keeps_r_scaled_coordinates() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = Quantizer::RandomSparsification { r: 2 }.quantize(&x, &mut rng).unwrap();
        let kept: Vec<usize> = (0..4).filter(|&j| q[j] != 0.0).collect();
        assert_eq!(kept.len(), 2);
        for j in kept {
            assert_eq!(q[j], 2.0 * x[j]);
        }
    }

    #[test]
    fn too_many_coordinates_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(Quantizer::RandomSparsification { r: 4 }.quantize(&[1.0, 2.0, 3.0], &mut rng).is_err());
        assert!(Quantizer::RandomSparsification { r: 0 }.omega(3).is_err());
    }
}
