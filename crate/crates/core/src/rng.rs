//! Seedable random number generation with indexed substreams.
//!
//! Every randomized routine takes a 64-bit master seed. Independent work
//! units (Monte Carlo batches, protocol runs, grid cells) draw from
//! substreams derived as `substream(seed, index)`, so results are
//! reproducible and independent of execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer; decorrelates consecutive seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed of substream `index` from a master seed.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(index.wrapping_add(1)))
}

/// Generator for substream `index` of a master seed.
pub fn substream(seed: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(substream_seed(seed, index))
}

/// Generator seeded directly from a master seed (substream 0 by convention).
pub fn master(seed: u64) -> SimRng {
    substream(seed, 0)
}
