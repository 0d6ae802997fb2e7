//! Shared inputs for the benchmarks.

use fsbench_core::data::stratified_split;
use fsbench_core::{synthetic, Dataset, Split};

/// A logistic dataset with three informative columns and its 80/20 split.
pub fn fixture(n: usize, d: usize, seed: u64) -> (Dataset, Split) {
    let ds = synthetic::logistic(n, d, &[0, d / 2, d - 1], 1.0, seed);
    let split = stratified_split(&ds, 0.2, seed).expect("synthetic data splits");
    (ds, split)
}
