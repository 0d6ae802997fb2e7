//! Downstream models: regularized logistic regression, AUROC, and
//! cross-validated grid search over the inverse regularization strength.

mod cv;
mod logreg;
mod metrics;

use thiserror::Error;

pub use cv::{cv_auroc, grid_search_cv, stratified_folds, CvGridResult, DEFAULT_C_GRID};
pub use logreg::{
    fit_l1_lambda, fit_logreg, fit_logreg_from, fit_logreg_traced, l1_lambda_max, objective, objective_gradient,
    FitOptions, LogRegModel, Penalty,
};
pub use metrics::auroc;
pub(crate) use logreg::sigmoid;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("regularization strength must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("dimension mismatch: expected {expected} columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("C grid is empty")]
    EmptyGrid,
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("class {class} has {count} member(s), fewer than the {folds} folds requested")]
    DegenerateFold { class: u8, count: usize, folds: usize },
}
