use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::mock::MockBehavior;

/// A transport-level or HTTP-level failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("request failed after {attempts} attempts: {message}")]
    Network { attempts: usize, message: String },
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider returned an empty response")]
    EmptyResponse,
    #[error("unexpected provider payload: {0}")]
    BadPayload(String),
    #[error("auth token variable `{0}` is not set")]
    MissingToken(String),
    #[error("no provider endpoint configured")]
    MissingEndpoint,
}

/// A chat-completion backend.
pub trait ChatProvider: Send + Sync {
    /// Returns the raw assistant text for one system + user exchange.
    fn complete(&self, system: &str, user: &str, temperature: f64) -> Result<String, ProviderError>;

    /// Number of completions requested so far.
    fn calls(&self) -> usize;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProviderKind {
    /// An OpenAI-compatible chat-completions endpoint.
    Http,
    Mock { behavior: MockBehavior },
}

/// Provider settings. The auth token is read from the environment variable
/// named by `token_env`, never from the file itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    /// Short label used in method tags, e.g. `deepseek`.
    pub name: String,
    pub kind: ProviderKind,
    /// Full chat-completions URL.
    pub endpoint: Option<String>,
    pub model: String,
    pub temperature: f64,
    pub token_env: Option<String>,
    /// Re-prompts allowed after an invalid payload, and retries allowed
    /// after a transient network failure.
    pub retries: usize,
    pub backoff_ms: u64,
    pub timeout_seconds: u64,
    /// Concurrent requests of the direct pipeline.
    pub max_in_flight: usize,
    /// Token-bucket refill rate; `None` disables rate limiting.
    pub requests_per_second: Option<f64>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            name: "mock".into(),
            kind: ProviderKind::Mock {
                behavior: MockBehavior::RfOracle,
            },
            endpoint: None,
            model: "mock-rf".into(),
            temperature: 0.1,
            token_env: None,
            retries: 3,
            backoff_ms: 500,
            timeout_seconds: 120,
            max_in_flight: 4,
            requests_per_second: None,
        }
    }
}

impl ProviderConfig {
    pub fn mock(behavior: MockBehavior) -> Self {
        let model = match &behavior {
            MockBehavior::RfOracle => "mock-rf".to_string(),
            MockBehavior::EchoFixture { .. } => "mock-echo".to_string(),
            MockBehavior::Malformed { kind } => format!("mock-malformed-{}", kind.name()),
        };
        Self {
            kind: ProviderKind::Mock { behavior },
            model,
            backoff_ms: 0,
            ..Self::default()
        }
    }

    pub fn is_mock(&self) -> bool {
        matches!(self.kind, ProviderKind::Mock { .. })
    }
}

/// Blocking client for OpenAI-compatible chat-completion endpoints.
pub struct HttpProvider {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    token: Option<String>,
    retries: usize,
    backoff: Duration,
    calls: std::sync::atomic::AtomicUsize,
}

impl HttpProvider {
    pub fn new(config: &ProviderConfig) -> Result<Self, ProviderError> {
        let endpoint = config.endpoint.clone().ok_or(ProviderError::MissingEndpoint)?;
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| ProviderError::MissingToken(var.clone()))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_seconds.max(1))))
            .build()
            .into();
        Ok(Self {
            agent,
            endpoint,
            model: config.model.clone(),
            token,
            retries: config.retries,
            backoff: Duration::from_millis(config.backoff_ms),
            calls: Default::default(),
        })
    }

    fn request_once(&self, body: &serde_json::Value) -> Result<String, Attempt> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.send_json(body).map_err(|e| Attempt::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Attempt::Transient(e.to_string()))?;
        if !(200..300).contains(&status) {
            let err = ProviderError::Status { status, body: text };
            return Err(if status == 429 || status >= 500 {
                Attempt::Retryable(err)
            } else {
                Attempt::Fatal(err)
            });
        }
        if text.trim().is_empty() {
            return Err(Attempt::Fatal(ProviderError::EmptyResponse));
        }
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Attempt::Fatal(ProviderError::BadPayload(e.to_string())))?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .ok_or_else(|| Attempt::Fatal(ProviderError::BadPayload(text.clone())))?;
        if content.trim().is_empty() {
            return Err(Attempt::Fatal(ProviderError::EmptyResponse));
        }
        Ok(content.to_string())
    }
}

enum Attempt {
    Transient(String),
    Retryable(ProviderError),
    Fatal(ProviderError),
}

impl ChatProvider for HttpProvider {
    fn complete(&self, system: &str, user: &str, temperature: f64) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        let body = json!({
            "model": self.model,
            "temperature": temperature,
            "messages": [
                { "role": "system", "content": system },
                { "role": "user", "content": user },
            ],
        });
        let attempts = self.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * 2u32.saturating_pow(attempt as u32 - 1));
            }
            match self.request_once(&body) {
                Ok(text) => return Ok(text),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retryable(e)) if attempt + 1 == attempts => return Err(e),
                Err(Attempt::Retryable(e)) => {
                    tracing::warn!(attempt, error = %e, "retrying provider request");
                    last = e.to_string();
                }
                Err(Attempt::Transient(message)) => {
                    tracing::warn!(attempt, error = %message, "retrying provider request");
                    last = message;
                }
            }
        }
        Err(ProviderError::Network { attempts, message: last })
    }

    fn calls(&self) -> usize {
        self.calls.load(std::sync::atomic::Ordering::SeqCst)
    }
}
