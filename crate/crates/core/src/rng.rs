//! Keyed random streams.
//!
//! Every random draw in the crate is a pure function of a master seed and a
//! small tuple of counters (trial index, site index, ...). Work can then be
//! partitioned across threads in any way without changing a single output bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent 64-bit key from a parent key and a counter.
#[inline]
pub fn derive(key: u64, counter: u64) -> u64 {
    mix64(key ^ mix64(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Uniform draw in the open interval (0, 1) keyed by `(key, counter)`.
#[inline]
pub fn uniform_open(key: u64, counter: u64) -> f64 {
    let bits = derive(key, counter) >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Seeded generator for trial `trial` of a run with master seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, trial))
}
