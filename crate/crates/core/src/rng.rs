//! Seedable, splittable random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 generator keyed
//! by a 64-bit `seed`, with the 64-bit ChaCha stream id set to the index of
//! the independent task (draw index, grid cell, ...). Two tasks with the same
//! seed but different indices read disjoint keystreams, so results do not
//! depend on which thread ran which task or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for task `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an unrelated seed for a sub-purpose (for example the start vector
/// of the eigensolver run on draw `i`). SplitMix64 finalizer.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
