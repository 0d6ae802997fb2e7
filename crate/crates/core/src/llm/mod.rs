//! LLM-driven feature scoring: prompt construction for the direct and hybrid
//! pipelines, HTTP chat-completion calls, response validation, an exchange
//! cache and a deterministic offline mock.

mod cache;
mod mock;
mod parse;
mod pipeline;
mod prompt;
mod provider;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;
use crate::forest::ForestError;

pub use cache::{cache_key, CacheSummary, ExchangeCache};
pub use mock::{MalformedKind, MockBehavior, MockProvider};
pub use parse::{parse_scores, validate_entries};
pub use pipeline::{call_provider, llm_feature_scores, LlmRun, LlmSelector, DEFAULT_SAMPLE_ROWS};
pub use prompt::{
    build_direct_prompt, build_hybrid_prompt, default_hybrid_context, DirectTemplates, DIRECT_FEATURE_MARKER,
    HYBRID_RESPONSE_FORMAT, HYBRID_SAMPLES_HEADING, HYBRID_SYSTEM_PROMPT, SYSTEM_MESSAGE,
};
pub use provider::{ChatProvider, HttpProvider, ProviderConfig, ProviderError, ProviderKind};

/// Which prompt family a [`PromptSpec`] belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Direct,
    Hybrid,
}

/// Scoring pipeline: one semantic prompt per feature, or one data-sample
/// prompt returning every score.
pub type Pipeline = PromptKind;

impl PromptKind {
    pub fn name(self) -> &'static str {
        match self {
            PromptKind::Direct => "direct",
            PromptKind::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PromptKind {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(PromptKind::Direct),
            "hybrid" => Ok(PromptKind::Hybrid),
            _ => Err(LlmError::UnknownPipeline(s.to_string())),
        }
    }
}

/// A rendered prompt together with the blocks it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub kind: PromptKind,
    /// Task description instruction.
    pub context: String,
    pub description: Option<String>,
    pub examples: Option<String>,
    pub cot: Option<String>,
    pub sample_csv: Option<String>,
    /// The feature a direct prompt asks about.
    pub feature: Option<String>,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmScoreEntry {
    pub concept: String,
    pub reasoning: String,
    pub score: f64,
}

/// One prompt/response round trip with its validation verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub provider: String,
    pub model: String,
    pub temperature: f64,
    pub prompt: PromptSpec,
    pub raw_response: String,
    pub entries: Vec<LlmScoreEntry>,
    pub valid: bool,
    /// Why validation failed, when it did.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_error: Option<String>,
    pub latency_seconds: f64,
    pub cache_key: String,
    /// Set when the exchange was replayed from the cache.
    #[serde(skip)]
    pub from_cache: bool,
}

/// A payload that does not satisfy the response contract.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("no JSON array of score objects found in the response")]
    NoJson,
    #[error("malformed score entry: {0}")]
    Malformed(String),
    #[error("feature `{0}` is missing from the response")]
    MissingFeature(String),
    #[error("score {value} for `{name}` is outside [0, 1]")]
    OutOfRange { name: String, value: f64 },
    #[error("features `{first}` and `{second}` share the score {score}")]
    DuplicateScore { first: String, second: String, score: f64 },
    #[error("feature `{0}` is scored more than once")]
    DuplicateFeature(String),
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("sample CSV has no `Class` column header")]
    MissingClassHeader,
    #[error("sample CSV is empty")]
    EmptySample,
    #[error("unknown pipeline `{0}`; expected direct or hybrid")]
    UnknownPipeline(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("invalid response after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: usize,
        #[source]
        last: ValidationError,
    },
    #[error("cache {path}: {message}")]
    Cache { path: String, message: String },
}

impl LlmError {
    /// The validation failure behind an exhausted retry budget.
    pub fn validation(&self) -> Option<&ValidationError> {
        match self {
            LlmError::RetriesExhausted { last, .. } => Some(last),
            _ => None,
        }
    }
}
