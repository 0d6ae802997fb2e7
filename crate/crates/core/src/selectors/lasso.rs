use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::data::{is_standardized, Dataset, Split};
use crate::models::{fit_l1_lambda, l1_lambda_max, FitOptions, LogRegModel};

use super::{FeatureScores, SelectError};

pub const LASSO_PATH_POINTS: usize = 50;
/// Ratio between the first and last penalty weight on the path.
pub const LASSO_PATH_RATIO: f64 = 1e4;
/// Coefficients at or below this magnitude count as inactive.
const ACTIVE_EPS: f64 = 1e-8;

/// An L1 logistic regularization path on the train partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPath {
    /// Decreasing penalty weights, starting at `λ_max`.
    pub lambdas: Vec<f64>,
    /// Encoded-column coefficients at each path point.
    pub coefficients: Vec<Vec<f64>>,
    /// Per original feature, the first path index where it is active.
    pub entry: Vec<Option<usize>>,
}

/// Fits the warm-started path from `λ_max` down to `λ_max / 1e4` on a
/// log-spaced grid. Columns must already be standardized on the train rows.
pub fn lasso_path(ds: &Dataset, split: &Split) -> Result<LassoPath, SelectError> {
    if !is_standardized(ds, split, 1e-6) {
        return Err(SelectError::NotStandardized);
    }
    let x = ds.x().select(Axis(0), &split.train_indices);
    let y: Vec<u8> = split.train_indices.iter().map(|&i| ds.y()[i]).collect();
    let lambda_max = l1_lambda_max(x.view(), &y).map_err(SelectError::Lasso)?;
    let opts = FitOptions::default();
    let mut entry = vec![None; ds.n_features()];
    let mut lambdas = Vec::with_capacity(LASSO_PATH_POINTS);
    let mut coefficients = Vec::with_capacity(LASSO_PATH_POINTS);
    if lambda_max == 0.0 {
        // No column correlates with the labels: nothing ever enters.
        return Ok(LassoPath { lambdas, coefficients, entry });
    }

    let mut prev: Option<LogRegModel> = None;
    for t in 0..LASSO_PATH_POINTS {
        let frac = t as f64 / (LASSO_PATH_POINTS - 1) as f64;
        let lambda = lambda_max * LASSO_PATH_RATIO.powf(-frac);
        let model = fit_l1_lambda(x.view(), &y, lambda, &opts, prev.as_ref()).map_err(SelectError::Lasso)?;
        for (f, group) in ds.column_groups().iter().enumerate() {
            if entry[f].is_none() && group.iter().any(|&c| model.weights[c].abs() > ACTIVE_EPS) {
                entry[f] = Some(t);
            }
        }
        lambdas.push(lambda);
        coefficients.push(model.weights.clone());
        prev = Some(model);
    }
    Ok(LassoPath { lambdas, coefficients, entry })
}

impl LassoPath {
    fn group_norm(&self, ds: &Dataset, feature: usize, point: usize) -> f64 {
        ds.column_groups()[feature]
            .iter()
            .map(|&c| self.coefficients[point][c].powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Features by entry point. Simultaneous entries go to the larger group
    /// norm at entry, then the lower index; features that never enter come
    /// last by index.
    pub fn ranking(&self, ds: &Dataset) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.entry.len()).collect();
        order.sort_by(|&a, &b| match (self.entry[a], self.entry[b]) {
            (Some(ea), Some(eb)) => ea
                .cmp(&eb)
                .then_with(|| self.group_norm(ds, b, eb).total_cmp(&self.group_norm(ds, a, ea)))
                .then(a.cmp(&b)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.cmp(&b),
        });
        order
    }
}

/// Ranking by LASSO path entry order with rank-derived scores.
pub fn lasso_path_ranking(ds: &Dataset, split: &Split) -> Result<FeatureScores, SelectError> {
    let path = lasso_path(ds, split)?;
    Ok(FeatureScores::from_order("lasso", ds, path.ranking(ds), 0))
}
