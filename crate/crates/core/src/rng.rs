//! Seeded random streams.
//!
//! Every consumer of randomness derives its generator from a `(seed, stream)`
//! pair so that independent components never share or reorder draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const SPLIT: u64 = 1;
pub const PROMPT_SAMPLE: u64 = 2;
pub const CV_FOLDS: u64 = 3;
pub const RANDOM_SELECT: u64 = 4;
pub const SEQUENTIAL_CV: u64 = 5;
pub const SYNTHETIC: u64 = 6;
/// Forest trees use `FOREST_BASE + tree_index`.
pub const FOREST_BASE: u64 = 1 << 32;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
