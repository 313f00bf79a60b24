//! Seeded random streams.
//!
//! Every stochastic routine in the crate draws from [`SeededRng`], a
//! ChaCha8 stream keyed by a `u64` through `SeedableRng::seed_from_u64`.
//! ChaCha output is specified independently of platform and word size, so a
//! `(config, seed)` pair reproduces the same draws on every machine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child seed for an independent sub-stream (experiment arms, splits).
///
/// SplitMix64 finalizer over `master + offset`, so nearby offsets give
/// unrelated streams.
pub fn derive_seed(master: u64, offset: u64) -> u64 {
    let mut z = master.wrapping_add(offset.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
