use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};
use crate::rng;

/// Train/test partition of the rows of one dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

impl Split {
    /// Checks that the split partitions `n` rows and that both sides hold
    /// both classes.
    pub fn validate(&self, ds: &Dataset) -> Result<(), DataError> {
        let n = ds.n_samples();
        let mut seen = vec![false; n];
        for &i in self.train_indices.iter().chain(&self.test_indices) {
            if i >= n || seen[i] {
                return Err(DataError::InvalidSplit(format!("row {i} out of range or repeated")));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(DataError::InvalidSplit("split does not cover every row".into()));
        }
        for (side, idx) in [("train", &self.train_indices), ("test", &self.test_indices)] {
            let pos = idx.iter().filter(|&&i| ds.y()[i] == 1).count();
            if pos == 0 || pos == idx.len() {
                return Err(DataError::InvalidSplit(format!("{side} partition lacks a class")));
            }
        }
        Ok(())
    }
}

pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Hamilton (largest-remainder) apportionment of `total` across groups in
/// proportion to `counts`. Remainder ties go to the lower group index.
pub fn allocate_largest_remainder(counts: &[usize], total: usize) -> Vec<usize> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return vec![0; counts.len()];
    }
    let total = total.min(n);
    let quotas: Vec<f64> = counts.iter().map(|&c| c as f64 * total as f64 / n as f64).collect();
    let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut remaining = total - alloc.iter().sum::<usize>();
    for &g in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if alloc[g] < counts[g] {
            alloc[g] += 1;
            remaining -= 1;
        }
    }
    alloc
}

fn class_indices(ds: &Dataset, rows: impl Iterator<Item = usize>) -> [Vec<usize>; 2] {
    let mut by_class = [Vec::new(), Vec::new()];
    for i in rows {
        by_class[usize::from(ds.y()[i])].push(i);
    }
    by_class
}

/// Stratified train/test split.
///
/// The test size is `round_half_up(n * test_fraction)`, apportioned across
/// classes by largest remainder, with every class keeping at least one row on
/// each side.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<Split, DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::InvalidFraction(test_fraction));
    }
    let mut by_class = class_indices(ds, 0..ds.n_samples());
    for (class, idx) in by_class.iter().enumerate() {
        if idx.len() < 2 {
            return Err(DataError::ClassTooSmall {
                class: class as u8,
                count: idx.len(),
            });
        }
    }
    let counts = [by_class[0].len(), by_class[1].len()];
    let total = round_half_up(ds.n_samples() as f64 * test_fraction);
    let alloc = allocate_largest_remainder(&counts, total);

    let mut rng = rng::stream(seed, rng::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        let take = alloc[class].clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..take]);
        train.extend_from_slice(&idx[take..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train_indices: train,
        test_indices: test,
        seed,
    })
}

/// Stratified sample of up to `n` train rows, serialized as CSV for a prompt.
///
/// Columns are the original features in dataset order, then `Class`.
pub fn sample_for_prompt(ds: &Dataset, split: &Split, n: usize, seed: u64) -> Result<String, DataError> {
    if n == 0 {
        return Err(DataError::EmptySample);
    }
    let mut by_class = class_indices(ds, split.train_indices.iter().copied());
    let counts = [by_class[0].len(), by_class[1].len()];
    let alloc = allocate_largest_remainder(&counts, n);
    let mut rng = rng::stream(seed, rng::PROMPT_SAMPLE);
    let mut rows = Vec::with_capacity(n);
    for (class, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut rng);
        rows.extend_from_slice(&idx[..alloc[class]]);
    }
    rows.shuffle(&mut rng);
    Ok(ds.to_csv(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn balanced(n_per_class: usize) -> Dataset {
        let n = 2 * n_per_class;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64);
        let y = (0..n).map(|i| u8::from(i % 2 == 1)).collect();
        Dataset::from_numeric("b", vec!["f".into()], x, y).unwrap()
    }

    #[test]
    fn ten_rows_give_one_test_row_per_class() {
        // Enumerated: quotas are 1.0 and 1.0 for total round(10*0.2) = 2.
        let split = stratified_split(&balanced(5), 0.2, 3).unwrap();
        let ds = balanced(5);
        let pos = split.test_indices.iter().filter(|&&i| ds.y()[i] == 1).count();
        assert_eq!(split.test_indices.len(), 2);
        assert_eq!(pos, 1);
    }

    #[test]
    fn split_is_deterministic_and_valid() {
        let ds = balanced(20);
        let a = stratified_split(&ds, 0.3, 11).unwrap();
        let b = stratified_split(&ds, 0.3, 11).unwrap();
        assert_eq!(a, b);
        a.validate(&ds).unwrap();
        assert_ne!(a, stratified_split(&ds, 0.3, 12).unwrap());
    }

    #[test]
    fn tiny_class_is_rejected() {
        let x = Array2::zeros((4, 1));
        let ds = Dataset::from_numeric("t", vec!["f".into()], x, vec![0, 0, 0, 1]).unwrap();
        assert!(matches!(stratified_split(&ds, 0.5, 0), Err(DataError::ClassTooSmall { class: 1, count: 1 })));
    }

    #[test]
    fn bad_fraction_is_rejected() {
        assert!(stratified_split(&balanced(5), 1.0, 0).is_err());
        assert!(stratified_split(&balanced(5), 0.0, 0).is_err());
    }

    #[test]
    fn largest_remainder_hits_total() {
        assert_eq!(allocate_largest_remainder(&[500, 268], 154), vec![100, 54]);
        assert_eq!(allocate_largest_remainder(&[5, 5], 3), vec![2, 1]);
        assert_eq!(allocate_largest_remainder(&[1, 1], 5), vec![1, 1]);
    }

    #[test]
    fn zero_sample_size_is_rejected() {
        let ds = balanced(5);
        let split = stratified_split(&ds, 0.2, 0).unwrap();
        assert!(matches!(sample_for_prompt(&ds, &split, 0, 0), Err(DataError::EmptySample)));
    }

    #[test]
    fn oversized_sample_is_a_permutation_of_train() {
        let ds = balanced(10);
        let split = stratified_split(&ds, 0.2, 0).unwrap();
        let csv = sample_for_prompt(&ds, &split, 1000, 5).unwrap();
        let mut values: Vec<usize> = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').next().unwrap().parse().unwrap())
            .collect();
        values.sort_unstable();
        assert_eq!(values, split.train_indices);
    }
}
