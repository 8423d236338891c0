//! Per-run random streams. Each run owns one seed, split into independent
//! ChaCha substreams so that one consumer never shifts another's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BATCH_STREAM: u64 = 1;
const COIN_STREAM: u64 = 2;
const QUANT_STREAM: u64 = 3;

#[derive(Debug, Clone)]
pub struct RngStreams {
    /// Minibatch, coordinate-block and index draws.
    pub batch: ChaCha8Rng,
    /// Anchor refresh coin flips.
    pub coin: ChaCha8Rng,
    /// Quantizer randomness.
    pub quant: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self { batch: stream(seed, BATCH_STREAM), coin: stream(seed, COIN_STREAM), quant: stream(seed, QUANT_STREAM) }
    }
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// SplitMix64 finalizer over a sequence of words; used to derive child seeds.
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}
