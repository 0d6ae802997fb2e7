//! Feature-selection benchmarking toolkit.
//!
//! Classical selectors (mutual information, mRMR, RFE, sequential selection,
//! LASSO path, random forest, random), two LLM-driven scoring pipelines with a
//! deterministic offline mock, and a downstream evaluation protocol built on
//! cross-validated regularized logistic regression and AUROC.

pub mod data;
pub mod error;
pub mod forest;
pub mod harness;
pub mod llm;
pub mod models;
pub mod rng;
pub mod selectors;
pub mod synthetic;

pub use data::{Dataset, Feature, FeatureKind, LoadOptions, Split};
pub use error::{Error, Result};
pub use forest::{ForestModel, ForestParams};
pub use harness::{AggregateReport, EvalConfig, EvalCurve, EvalPoint};
pub use llm::{LlmExchange, LlmScoreEntry, Pipeline, PromptKind, PromptSpec};
pub use models::{CvGridResult, FitOptions, LogRegModel, Penalty};
pub use selectors::{FeatureScores, Method};
