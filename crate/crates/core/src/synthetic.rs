//! Synthetic datasets with known signal, used by tests and benchmarks.
//!
//! Features are named `x0, x1, …` and drawn i.i.d. standard normal unless
//! stated otherwise.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::Dataset;
use crate::models::sigmoid;
use crate::rng;

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Exactly balanced labels in a seeded shuffled order.
fn balanced_labels(n: usize, rng: &mut rng::Rng) -> Vec<u8> {
    let mut y: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    y.shuffle(rng);
    y
}

fn normal_matrix(n: usize, d: usize, rng: &mut rng::Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, d), || rng.sample(StandardNormal))
}

/// Balanced labels with column `copy_index` equal to the label and all other
/// columns pure noise.
pub fn copy_target(n: usize, d: usize, copy_index: usize, seed: u64) -> Dataset {
    assert!(copy_index < d && n >= 4);
    let mut rng = rng::stream(seed, rng::SYNTHETIC);
    let y = balanced_labels(n, &mut rng);
    let mut x = normal_matrix(n, d, &mut rng);
    for (i, &label) in y.iter().enumerate() {
        x[[i, copy_index]] = f64::from(label);
    }
    Dataset::from_numeric(format!("copy{d}"), names(d), x, y).expect("valid synthetic data")
}

/// Logistic model `P(y=1) = σ(strength · Σ_{j ∈ informative} x_j)`.
pub fn logistic(n: usize, d: usize, informative: &[usize], strength: f64, seed: u64) -> Dataset {
    assert!(informative.iter().all(|&j| j < d));
    let mut rng = rng::stream(seed, rng::SYNTHETIC);
    loop {
        let x = normal_matrix(n, d, &mut rng);
        let y: Vec<u8> = (0..n)
            .map(|i| {
                let eta: f64 = informative.iter().map(|&j| x[[i, j]]).sum::<f64>() * strength;
                u8::from(rng.random::<f64>() < sigmoid(eta))
            })
            .collect();
        let positives = y.iter().filter(|&&v| v == 1).count();
        if positives >= 2 && n - positives >= 2 {
            return Dataset::from_numeric(format!("logistic{d}"), names(d), x, y).expect("valid synthetic data");
        }
    }
}

/// Balanced labels independent of every feature.
pub fn noise(n: usize, d: usize, seed: u64) -> Dataset {
    assert!(n >= 4);
    let mut rng = rng::stream(seed, rng::SYNTHETIC);
    let y = balanced_labels(n, &mut rng);
    let x = normal_matrix(n, d, &mut rng);
    Dataset::from_numeric(format!("noise{d}"), names(d), x, y).expect("valid synthetic data")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let a = logistic(100, 10, &[2, 5, 7], 1.5, 3);
        assert_eq!(a.n_samples(), 100);
        assert_eq!(a.n_features(), 10);
        assert_eq!(a.x(), logistic(100, 10, &[2, 5, 7], 1.5, 3).x());
        let c = copy_target(10, 3, 1, 0);
        for i in 0..10 {
            assert_eq!(c.x()[[i, 1]], f64::from(c.y()[i]));
        }
        assert_eq!(noise(10, 2, 0).y().iter().filter(|&&v| v == 1).count(), 5);
    }
}
