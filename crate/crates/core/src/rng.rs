//! Seeded randomness.
//!
//! Every random draw in the crate comes from [`Rng`], which is ChaCha with 8
//! rounds (`rand_chacha::ChaCha8Rng`) seeded through `seed_from_u64`. Streams
//! for independent purposes are derived with [`derive`] so that adding a draw
//! in one place never shifts another.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Child seed for a named sub-stream (SplitMix64 finalizer over the pair).
pub fn derive(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}
