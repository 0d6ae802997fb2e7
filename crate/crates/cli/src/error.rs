use std::process::ExitCode;

use fsbench_core::data::DataError;
use fsbench_core::harness::HarnessError;
use fsbench_core::llm::LlmError;
use fsbench_core::selectors::SelectError;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Failure class, mapped one-to-one onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Config,
    Data,
    Provider,
    Evaluation,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Provider => 4,
            ErrorKind::Evaluation => 5,
        }
    }
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, message)
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Data, message)
    }

    pub fn evaluation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Evaluation, message)
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.exit_code())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::data(e.to_string())
    }
}

impl From<SelectError> for CliError {
    fn from(e: SelectError) -> Self {
        let kind = match e {
            SelectError::Data(_) => ErrorKind::Data,
            SelectError::UnknownMethod { .. } => ErrorKind::Config,
            _ => ErrorKind::Evaluation,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<LlmError> for CliError {
    fn from(e: LlmError) -> Self {
        let kind = match e {
            LlmError::Data(_) | LlmError::UnknownFeature(_) | LlmError::MissingClassHeader | LlmError::EmptySample => {
                ErrorKind::Data
            }
            LlmError::UnknownPipeline(_) => ErrorKind::Config,
            LlmError::Forest(_) => ErrorKind::Evaluation,
            LlmError::Provider(_) | LlmError::RetriesExhausted { .. } | LlmError::Cache { .. } => ErrorKind::Provider,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Data(d) => d.into(),
            HarnessError::Select(s) => s.into(),
            other => Self::evaluation(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [ErrorKind::Config, ErrorKind::Data, ErrorKind::Provider, ErrorKind::Evaluation].map(ErrorKind::exit_code);
        assert_eq!(codes, [2, 3, 4, 5]);
    }

    #[test]
    fn retries_exhausted_is_a_provider_failure() {
        let e: CliError = LlmError::RetriesExhausted {
            attempts: 4,
            last: fsbench_core::llm::ValidationError::NoJson,
        }
        .into();
        assert_eq!(e.kind, ErrorKind::Provider);
        let e: CliError = SelectError::UnknownMethod { name: "x".into(), expected: "mi".into() }.into();
        assert_eq!(e.kind, ErrorKind::Config);
    }
}
