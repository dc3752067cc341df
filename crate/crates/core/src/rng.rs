//! Reproducible random streams.
//!
//! Every simulated path consumes its own substream, derived deterministically
//! from `(master_seed, path_index)`. Results are therefore independent of
//! scheduling order and worker-thread count: path `i` sees the same draws
//! whether it runs first, last, or on another core.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The stream type handed to samplers.
pub type Stream = ChaCha8Rng;

/// Substream for one path: ChaCha keyed by the master seed, with the path
/// index selecting the counter stream.
pub fn path_stream(master_seed: u64, path_index: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(path_index);
    rng
}

/// Derive an independent 64-bit seed for a sub-experiment (one sweep grid
/// point, one fleet unit). SplitMix64 finalizer over a keyed counter.
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
