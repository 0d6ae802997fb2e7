use thiserror::Error;

use crate::data::DataError;
use crate::forest::ForestError;
use crate::harness::HarnessError;
use crate::llm::LlmError;
use crate::models::ModelError;
use crate::selectors::SelectError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Umbrella error for callers that drive several subsystems at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}
