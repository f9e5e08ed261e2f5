//! Seeded random streams: one independent ChaCha stream per sample index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Stream `index` of the generator seeded by `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}
