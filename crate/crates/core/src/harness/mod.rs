//! Downstream evaluation: proportion sweep, cross-validated logistic
//! regression on the selected features, AUROC curves and aggregation.

mod aggregate;
mod eval;

use thiserror::Error;

use crate::data::DataError;
use crate::models::ModelError;
use crate::selectors::SelectError;

pub use aggregate::{aggregate, AggregateReport, PathRow, RuntimeRow, PATH_PROPORTIONS};
pub use eval::{
    evaluate_selection, k_for_proportion, proportions_to_k, run_curve, run_lasso_curve, run_lasso_curve_with, EvalConfig,
    EvalCurve, EvalPoint,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error("downstream model at k={k}: {source}")]
    Model {
        k: usize,
        #[source]
        source: ModelError,
    },
    #[error("ranking of `{method}` is not a permutation of the dataset features")]
    IncompleteRanking { method: String },
    #[error("k={k} is outside 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("no curves to aggregate")]
    NoCurves,
    #[error("curves for dataset `{dataset}` use different proportions (`{first}` vs `{second}`)")]
    InconsistentProportions { dataset: String, first: String, second: String },
    #[error("duplicate curve for method `{method}` on `{dataset}`")]
    DuplicateCurve { method: String, dataset: String },
}
