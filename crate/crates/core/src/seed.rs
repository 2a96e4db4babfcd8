//! Deterministic seed derivation.
//!
//! A child seed is the SplitMix64 output at position `index + 1` of the stream
//! whose state starts at `seed`:
//!
//! ```text
//! z = seed + 0x9E3779B97F4A7C15 * (index + 1)        (wrapping u64 arithmetic)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! derive(seed, index) = z ^ (z >> 31)
//! ```
//!
//! Nested streams compose, e.g. `derive(derive(global, row), trial)`. Random
//! generators are `ChaCha8Rng::seed_from_u64(derived)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, index: u64) -> u64 {
    mix(seed.wrapping_add(GAMMA.wrapping_mul(index.wrapping_add(1))))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
