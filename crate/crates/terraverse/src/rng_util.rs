//! Seed derivation for independent, order-insensitive RNG streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a ChaCha stream from a master seed and a tag path.
///
/// Streams for distinct tag paths are independent, so work items (generator
/// slots, agents, iterations) can run in any order or in parallel without
/// changing their random draws.
pub fn derive_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix64(seed);
    for &t in tags {
        state = splitmix64(state ^ t);
    }
    ChaCha8Rng::seed_from_u64(state)
}
