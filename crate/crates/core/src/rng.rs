//! Counter-based random numbers.
//!
//! Every draw is a pure function of its key, so the order in which nodes
//! are visited (or the number of threads visiting them) cannot change the
//! result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a seed and a tuple of counters into 64 random bits.
#[inline]
pub fn hash_key(seed: u64, keys: &[u64]) -> u64 {
    let mut h = splitmix64(seed);
    for &k in keys {
        h = splitmix64(h ^ k);
    }
    h
}

/// Uniform draw in `[0, 1)` keyed by `(seed, keys...)`.
#[inline]
pub fn uniform(seed: u64, keys: &[u64]) -> f64 {
    (hash_key(seed, keys) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives an independent child seed.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    hash_key(seed ^ 0x5EED_5EED_5EED_5EED, &[stream])
}

/// Sequential generator for code paths that do not need counter keys.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
