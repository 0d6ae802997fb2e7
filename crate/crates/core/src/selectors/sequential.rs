use ndarray::{Array2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset, Split};
use crate::models::{cv_auroc, stratified_folds, FitOptions, Penalty};

use super::rfe::INNER_C;
use super::{FeatureScores, SelectError};

/// Folds of the step criterion.
pub const SEQUENTIAL_FOLDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

struct Criterion<'a> {
    ds: &'a Dataset,
    x: Array2<f64>,
    y: Vec<u8>,
    assignment: Vec<usize>,
    opts: FitOptions,
}

impl Criterion<'_> {
    fn score(&self, features: &[usize]) -> Result<f64, SelectError> {
        let mut sorted = features.to_vec();
        sorted.sort_unstable();
        let cols = self.ds.columns_for(&sorted);
        let x = self.x.select(Axis(1), &cols);
        cv_auroc(x.view(), &self.y, &self.assignment, SEQUENTIAL_FOLDS, Penalty::L2, INNER_C, &self.opts)
            .map_err(SelectError::Cv)
    }

    /// Index into `candidates` of the best-scoring subset; ties go to the
    /// earliest candidate.
    fn best<F>(&self, candidates: &[usize], subset_for: F) -> Result<usize, SelectError>
    where
        F: Fn(usize) -> Vec<usize> + Sync,
    {
        let scores = candidates
            .par_iter()
            .map(|&f| self.score(&subset_for(f)))
            .collect::<Result<Vec<f64>, _>>()?;
        let mut best = 0;
        for k in 1..scores.len() {
            if scores[k] > scores[best] {
                best = k;
            }
        }
        Ok(best)
    }
}

/// Greedy sequential selection scored by 3-fold CV AUROC of an L2 logistic
/// regression on the standardized train partition.
///
/// Forward adds the feature giving the best score (ties to the lower index);
/// the addition order is the ranking. Backward drops the feature whose removal
/// leaves the best score; the reversed removal order is the ranking.
pub fn sequential_ranking(
    ds: &Dataset,
    split: &Split,
    direction: Direction,
    seed: u64,
) -> Result<FeatureScores, SelectError> {
    let l = ds.n_features();
    let method = match direction {
        Direction::Forward => "forward",
        Direction::Backward => "backward",
    };
    if l == 1 {
        return Ok(FeatureScores::from_order(method, ds, vec![0], seed));
    }
    let ds_std = standardize(ds, split);
    let y: Vec<u8> = split.train_indices.iter().map(|&i| ds.y()[i]).collect();
    let crit = Criterion {
        ds,
        x: ds_std.x().select(Axis(0), &split.train_indices),
        assignment: stratified_folds(&y, SEQUENTIAL_FOLDS, seed).map_err(SelectError::Cv)?,
        y,
        opts: FitOptions::default(),
    };

    let order = match direction {
        Direction::Forward => {
            let mut chosen: Vec<usize> = Vec::with_capacity(l);
            let mut remaining: Vec<usize> = (0..l).collect();
            while remaining.len() > 1 {
                let pick = crit.best(&remaining, |f| {
                    let mut s = chosen.clone();
                    s.push(f);
                    s
                })?;
                chosen.push(remaining.remove(pick));
            }
            chosen.extend(remaining);
            chosen
        }
        Direction::Backward => {
            let mut removed: Vec<usize> = Vec::with_capacity(l);
            let mut remaining: Vec<usize> = (0..l).collect();
            while remaining.len() > 1 {
                let drop = crit.best(&remaining, |f| remaining.iter().copied().filter(|&g| g != f).collect())?;
                removed.push(remaining.remove(drop));
            }
            removed.extend(remaining);
            removed.reverse();
            removed
        }
    };
    Ok(FeatureScores::from_order(method, ds, order, seed))
}
