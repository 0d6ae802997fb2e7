use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auroc, fit_logreg, FitOptions, ModelError, Penalty};
use crate::rng;

pub const DEFAULT_C_GRID: [f64; 9] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3, 1e4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvGridResult {
    pub grid: Vec<f64>,
    /// Mean validation AUROC per grid entry.
    pub mean_scores: Vec<f64>,
    pub best_c: f64,
    pub folds: usize,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(y: &[u8], folds: usize, seed: u64) -> Result<Vec<usize>, ModelError> {
    if folds < 2 {
        return Err(ModelError::TooFewFolds(folds));
    }
    let mut assignment = vec![0; y.len()];
    let mut rng = rng::stream(seed, rng::CV_FOLDS);
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if idx.len() < folds {
            return Err(ModelError::DegenerateFold {
                class,
                count: idx.len(),
                folds,
            });
        }
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignment[i] = pos % folds;
        }
    }
    Ok(assignment)
}

fn fold_rows(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != fold)
}

/// Validation AUROC of one fold for a fixed penalty and C.
fn fold_score(
    x: &ArrayView2<'_, f64>,
    y: &[u8],
    assignment: &[usize],
    fold: usize,
    penalty: Penalty,
    c: f64,
    opts: &FitOptions,
) -> Result<f64, ModelError> {
    let (train, valid) = fold_rows(assignment, fold);
    let xt = x.select(Axis(0), &train);
    let yt: Vec<u8> = train.iter().map(|&i| y[i]).collect();
    let xv = x.select(Axis(0), &valid);
    let yv: Vec<u8> = valid.iter().map(|&i| y[i]).collect();
    let model = fit_logreg(xt.view(), &yt, penalty, c, opts)?;
    auroc(&model.decision_function(xv.view())?, &yv)
}

/// Mean validation AUROC over a precomputed fold assignment.
pub fn cv_auroc(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    assignment: &[usize],
    folds: usize,
    penalty: Penalty,
    c: f64,
    opts: &FitOptions,
) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for fold in 0..folds {
        total += fold_score(&x, y, assignment, fold, penalty, c, opts)?;
    }
    Ok(total / folds as f64)
}

/// Grid search over C by stratified k-fold validation AUROC.
///
/// Ties in mean score resolve to the smallest C (strongest regularization).
pub fn grid_search_cv(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    grid: &[f64],
    folds: usize,
    penalty: Penalty,
    seed: u64,
    opts: &FitOptions,
) -> Result<CvGridResult, ModelError> {
    if grid.is_empty() {
        return Err(ModelError::EmptyGrid);
    }
    let assignment = stratified_folds(y, folds, seed)?;
    let cells: Vec<(usize, usize)> = (0..grid.len()).flat_map(|g| (0..folds).map(move |f| (g, f))).collect();
    let scores = cells
        .par_iter()
        .map(|&(g, f)| fold_score(&x, y, &assignment, f, penalty, grid[g], opts))
        .collect::<Result<Vec<f64>, _>>()?;
    let mean_scores: Vec<f64> = scores.chunks(folds).map(|c| c.iter().sum::<f64>() / folds as f64).collect();

    let mut best = 0;
    for g in 1..grid.len() {
        let better = mean_scores[g] > mean_scores[best];
        let tie_smaller_c = mean_scores[g] == mean_scores[best] && grid[g] < grid[best];
        if better || tie_smaller_c {
            best = g;
        }
    }
    Ok(CvGridResult {
        grid: grid.to_vec(),
        mean_scores,
        best_c: grid[best],
        folds,
    })
}
