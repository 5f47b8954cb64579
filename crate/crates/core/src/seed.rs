//! Deterministic seed expansion.
//!
//! A single base seed fans out into independent streams with
//! [`derive_seed`]: `derive_seed(base, k)` is the seed of the `k`-th child
//! (trial, grid cell or k-means restart). Children of children are derived
//! the same way, so every random draw in a run is a pure function of the
//! base seed and the counter path that leads to it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags used inside the crate so that sibling consumers of one seed
/// never share a stream.
pub(crate) mod stream {
    pub const KMEANS: u64 = 0x6b6d;
    pub const SAMPLING: u64 = 0x7369;
    pub const SYNTHETIC: u64 = 0x7379;
    pub const THEOREM: u64 = 0x7468;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child number `counter` under `base`.
pub fn derive_seed(base: u64, counter: u64) -> u64 {
    splitmix64(splitmix64(base) ^ splitmix64(counter.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
