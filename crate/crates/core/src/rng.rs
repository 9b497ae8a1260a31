//! Deterministic seed derivation.
//!
//! Every random draw in this crate flows from an explicit `u64` seed through
//! [`ChaCha8Rng`]; nothing reads wall-clock entropy. Substreams (per query,
//! per experiment cell, per retry) are derived with a SplitMix64 mix so that
//! stream `i` is independent of stream `i+1` without coordination.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// SplitMix64 finalizer. Bijective on `u64`, good avalanche.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed for substream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// RNG for substream `index` of `master`.
pub fn substream(master: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index))
}

/// RNG seeded directly from `seed`.
pub fn from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
