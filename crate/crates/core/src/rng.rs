//! Seeded randomness. Every stream is a ChaCha8 generator seeded through
//! `seed_from_u64`; uniform reals are `(next_u64 >> 11) · 2⁻⁵³ ∈ [0, 1)`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One SplitMix64 output step.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into `seed`; order-sensitive, independent of scheduling.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(seed), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Order-sensitive hash of an index set.
pub fn hash_indices(indices: &[usize]) -> u64 {
    indices
        .iter()
        .fold(0x243F_6A88_85A3_08D3, |acc, &i| splitmix64(acc ^ i as u64))
}

/// Uniform in `[0, 1)` with 53 random bits.
pub fn unit_f64(rng: &mut Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform in `[lo, hi)`.
pub fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit_f64(rng)
}

/// Uniform index in `0..n` (`n > 0`).
pub fn index_below(rng: &mut Rng, n: usize) -> usize {
    ((unit_f64(rng) * n as f64) as usize).min(n - 1)
}
