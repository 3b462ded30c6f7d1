//! Deterministic derivation of independent RNG streams.
//!
//! Every stochastic component (row generation, shuffles, bootstrap draws,
//! per-set pipelines) seeds its own stream from a base seed plus a stream
//! index, so results never depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Cheap, well-mixed, and stable across platforms.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `base` for the given stream index.
///
/// Distinct `stream` values yield statistically independent seeds; the same
/// inputs always yield the same output.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix(base ^ mix(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// Convenience constructor for a seeded stream cipher RNG.
pub fn stream_rng(base: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, stream))
}
