//! Classical feature selectors. Each produces [`FeatureScores`] over the
//! original features of a dataset.

mod lasso;
pub mod mi;
mod mrmr;
mod random;
mod rfe;
mod sequential;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, Dataset, Split};
use crate::forest::{self, ForestError, ForestParams};
use crate::models::ModelError;

pub use lasso::{lasso_path, lasso_path_ranking, LassoPath, LASSO_PATH_POINTS, LASSO_PATH_RATIO};
pub use mi::mutual_information_scores;
pub use mrmr::mrmr_ranking;
pub use random::random_ranking;
pub use rfe::{rfe_ranking, rfe_survivors};
pub use sequential::{sequential_ranking, Direction};

/// Shortest runtime ever recorded, so that every run reports a positive time.
const MIN_RUNTIME: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("model fit failed while eliminating step {step}: {source}")]
    EliminationFit {
        step: usize,
        #[source]
        source: ModelError,
    },
    #[error("cross-validation failed: {0}")]
    Cv(#[source] ModelError),
    #[error("LASSO path: {0}")]
    Lasso(#[source] ModelError),
    #[error("LASSO path requires standardized columns; standardize on the train partition first")]
    NotStandardized,
    #[error("unknown method `{name}`; expected one of: {expected}")]
    UnknownMethod { name: String, expected: String },
}

/// Importance scores and total ranking of original features for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScores {
    pub method: String,
    pub dataset: String,
    pub seed: u64,
    pub runtime_seconds: f64,
    /// Keyed by feature name, in dataset column order.
    pub scores: IndexMap<String, f64>,
    /// Feature names, best first.
    pub ranking: Vec<String>,
}

impl FeatureScores {
    /// Ranks by descending score, ties broken by ascending column index.
    pub fn from_scores(method: impl Into<String>, ds: &Dataset, values: Vec<f64>, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        Self::assemble(method, ds, values, order, seed)
    }

    /// Uses `order` (best first) as the ranking and assigns rank-derived
    /// scores `(l - r + 1) / l`.
    pub fn from_order(method: impl Into<String>, ds: &Dataset, order: Vec<usize>, seed: u64) -> Self {
        let l = order.len() as f64;
        let mut values = vec![0.0; order.len()];
        for (r, &f) in order.iter().enumerate() {
            values[f] = (l - r as f64) / l;
        }
        Self::assemble(method, ds, values, order, seed)
    }

    /// Uses an explicit ranking alongside explicit scores.
    pub(crate) fn with_order(
        method: impl Into<String>,
        ds: &Dataset,
        values: Vec<f64>,
        order: Vec<usize>,
        seed: u64,
    ) -> Self {
        Self::assemble(method, ds, values, order, seed)
    }

    fn assemble(method: impl Into<String>, ds: &Dataset, values: Vec<f64>, order: Vec<usize>, seed: u64) -> Self {
        debug_assert_eq!(values.len(), ds.n_features());
        let names = ds.feature_names();
        Self {
            method: method.into(),
            dataset: ds.name().to_string(),
            seed,
            runtime_seconds: MIN_RUNTIME,
            scores: names.iter().cloned().zip(values).collect(),
            ranking: order.into_iter().map(|f| names[f].clone()).collect(),
        }
    }

    pub fn with_runtime(mut self, elapsed: Duration) -> Self {
        self.runtime_seconds = elapsed.as_secs_f64().max(MIN_RUNTIME);
        self
    }

    pub fn with_runtime_seconds(mut self, seconds: f64) -> Self {
        self.runtime_seconds = seconds.max(MIN_RUNTIME);
        self
    }

    pub fn with_method(mut self, method: impl Into<String>) -> Self {
        self.method = method.into();
        self
    }

    /// Original-feature indices of the top `k` ranked features.
    pub fn top_k(&self, ds: &Dataset, k: usize) -> Result<Vec<usize>, DataError> {
        self.ranking
            .iter()
            .take(k)
            .map(|name| ds.feature_index(name).ok_or_else(|| DataError::UnknownFeature(name.clone())))
            .collect()
    }

    /// Checks the ranking is a permutation of the dataset's features.
    pub fn is_complete_for(&self, ds: &Dataset) -> bool {
        let mut names = ds.feature_names();
        let mut ranked = self.ranking.clone();
        names.sort();
        ranked.sort();
        names == ranked && self.scores.len() == ds.n_features()
    }
}

/// A classical selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mi,
    Mrmr,
    Rfe,
    Forward,
    Backward,
    Lasso,
    Rf,
    Random,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Mi,
        Method::Mrmr,
        Method::Rfe,
        Method::Forward,
        Method::Backward,
        Method::Lasso,
        Method::Rf,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mi => "mi",
            Method::Mrmr => "mrmr",
            Method::Rfe => "rfe",
            Method::Forward => "forward",
            Method::Backward => "backward",
            Method::Lasso => "lasso",
            Method::Rf => "rf",
            Method::Random => "random",
        }
    }

    pub fn expected_names() -> String {
        Self::ALL.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ")
    }

    /// Runs the selector and records its wall-clock runtime.
    ///
    /// The LASSO path standardizes on the train partition itself.
    pub fn run(self, ds: &Dataset, split: &Split, seed: u64, forest: &ForestParams) -> Result<FeatureScores, SelectError> {
        let start = Instant::now();
        let scores = match self {
            Method::Mi => mutual_information_scores(ds, split),
            Method::Mrmr => mrmr_ranking(ds, split),
            Method::Rfe => rfe_ranking(ds, split)?,
            Method::Forward => sequential_ranking(ds, split, Direction::Forward, seed)?,
            Method::Backward => sequential_ranking(ds, split, Direction::Backward, seed)?,
            Method::Lasso => lasso_path_ranking(&crate::data::standardize(ds, split), split)?,
            Method::Rf => {
                let params = ForestParams { seed, ..*forest };
                forest::rf_feature_scores(ds, split, &params)?
            }
            Method::Random => random_ranking(ds, seed),
        };
        Ok(FeatureScores { seed, ..scores }.with_runtime(start.elapsed()))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = SelectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| SelectError::UnknownMethod {
                name: s.to_string(),
                expected: Self::expected_names(),
            })
    }
}
