use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use crate::data::{sample_for_prompt, Dataset, Split};
use crate::selectors::FeatureScores;

use super::cache::{cache_key, ExchangeCache};
use super::parse::parse_scores;
use super::prompt::{build_direct_prompt, build_hybrid_prompt, default_hybrid_context, DirectTemplates, SYSTEM_MESSAGE};
use super::{ChatProvider, LlmError, LlmExchange, Pipeline, PromptSpec, ProviderConfig, ProviderError, ValidationError};

/// Rows sent with a hybrid prompt.
pub const DEFAULT_SAMPLE_ROWS: usize = 200;

/// Token bucket holding at most `capacity` requests, refilled at `rate` per
/// second.
struct RateLimiter {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    fn new(rate: f64, capacity: usize) -> Self {
        let capacity = capacity.max(1) as f64;
        Self {
            rate,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap_or_else(|p| p.into_inner());
                let now = Instant::now();
                let (tokens, last) = *state;
                let tokens = (tokens + now.duration_since(last).as_secs_f64() * self.rate).min(self.capacity);
                if tokens >= 1.0 {
                    *state = (tokens - 1.0, now);
                    return;
                }
                *state = (tokens, now);
                (1.0 - tokens) / self.rate
            };
            std::thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

fn exchange_once(
    spec: &PromptSpec,
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
    cache: Option<&ExchangeCache>,
    expected: &[String],
    limiter: Option<&RateLimiter>,
) -> Result<LlmExchange, LlmError> {
    let key = cache_key(&config.model, config.temperature, &spec.rendered);
    if let Some(cache) = cache {
        if let Some(hit) = cache.get(&key)? {
            return Ok(hit);
        }
    }
    if let Some(l) = limiter {
        l.acquire();
    }
    let start = Instant::now();
    let raw = provider.complete(SYSTEM_MESSAGE.trim_end(), &spec.rendered, config.temperature)?;
    let latency_seconds = start.elapsed().as_secs_f64();
    if raw.trim().is_empty() {
        return Err(ProviderError::EmptyResponse.into());
    }
    let parsed = parse_scores(&raw, expected);
    let exchange = LlmExchange {
        provider: config.name.clone(),
        model: config.model.clone(),
        temperature: config.temperature,
        prompt: spec.clone(),
        raw_response: raw,
        valid: parsed.is_ok(),
        validation_error: parsed.as_ref().err().map(ToString::to_string),
        entries: parsed.unwrap_or_default(),
        latency_seconds,
        cache_key: key,
        from_cache: false,
    };
    if exchange.valid {
        if let Some(cache) = cache {
            cache.put(&exchange)?;
        }
    }
    Ok(exchange)
}

/// One exchange for `spec`: the cache is consulted first, and on a miss the
/// provider is called once. Only valid exchanges are persisted.
pub fn call_provider(
    spec: &PromptSpec,
    provider: &dyn ChatProvider,
    config: &ProviderConfig,
    cache: Option<&ExchangeCache>,
    expected: &[String],
) -> Result<LlmExchange, LlmError> {
    exchange_once(spec, provider, config, cache, expected, None)
}

/// Scores from one selector run together with every exchange it made.
#[derive(Debug, Clone)]
pub struct LlmRun {
    pub scores: FeatureScores,
    pub exchanges: Vec<LlmExchange>,
    /// Exchanges that reached the provider rather than the cache.
    pub provider_calls: usize,
}

/// A configured provider plus cache and prompt settings.
pub struct LlmSelector {
    pub config: ProviderConfig,
    provider: Arc<dyn ChatProvider>,
    cache: Option<Arc<ExchangeCache>>,
    pub sample_rows: usize,
    /// Replaces the default hybrid task context.
    pub hybrid_context: Option<String>,
    /// Replaces the built-in direct templates.
    pub direct_templates: Option<DirectTemplates>,
}

impl LlmSelector {
    pub fn new(config: ProviderConfig, provider: Arc<dyn ChatProvider>, cache: Option<Arc<ExchangeCache>>) -> Self {
        Self {
            config,
            provider,
            cache,
            sample_rows: DEFAULT_SAMPLE_ROWS,
            hybrid_context: None,
            direct_templates: None,
        }
    }

    /// Method tag `provider/model/pipeline`.
    pub fn method_tag(&self, pipeline: Pipeline) -> String {
        format!("{}/{}/{}", self.config.name, self.config.model, pipeline.name())
    }

    pub fn provider_calls(&self) -> usize {
        self.provider.calls()
    }

    /// Calls until a valid payload arrives, allowing `retries` re-prompts.
    fn score_prompt(
        &self,
        spec: &PromptSpec,
        expected: &[String],
        limiter: Option<&RateLimiter>,
    ) -> Result<Vec<LlmExchange>, LlmError> {
        let attempts = self.config.retries + 1;
        let mut exchanges = Vec::with_capacity(1);
        let mut last = ValidationError::NoJson;
        for attempt in 0..attempts {
            let ex = exchange_once(spec, self.provider.as_ref(), &self.config, self.cache.as_deref(), expected, limiter)?;
            let valid = ex.valid;
            if !valid {
                tracing::warn!(attempt, error = ?ex.validation_error, "invalid LLM payload");
                last = parse_scores(&ex.raw_response, expected).expect_err("exchange marked invalid");
            }
            exchanges.push(ex);
            if valid {
                return Ok(exchanges);
            }
        }
        Err(LlmError::RetriesExhausted { attempts, last })
    }

    fn hybrid(&self, ds: &Dataset, split: &Split, seed: u64) -> Result<(Vec<f64>, Vec<LlmExchange>), LlmError> {
        let csv = sample_for_prompt(ds, split, self.sample_rows, seed)?;
        let context = self.hybrid_context.clone().unwrap_or_else(|| default_hybrid_context(ds));
        let spec = build_hybrid_prompt(ds, &csv, &context)?;
        let exchanges = self.score_prompt(&spec, &ds.feature_names(), None)?;
        let last = exchanges.last().expect("a valid exchange");
        let values = last.entries.iter().map(|e| e.score).collect();
        Ok((values, exchanges))
    }

    fn direct(&self, ds: &Dataset) -> Result<(Vec<f64>, Vec<LlmExchange>), LlmError> {
        let templates = self.direct_templates.clone().unwrap_or_else(|| DirectTemplates::for_dataset(ds));
        let names = ds.feature_names();
        let specs = names
            .iter()
            .map(|f| {
                build_direct_prompt(
                    ds,
                    f,
                    &templates.context,
                    &templates.description,
                    templates.examples.as_deref(),
                    templates.cot.as_deref(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let limiter = self
            .config
            .requests_per_second
            .filter(|r| *r > 0.0)
            .map(|r| RateLimiter::new(r, self.config.max_in_flight));
        let next = AtomicUsize::new(0);
        let results: Vec<Mutex<Option<Result<Vec<LlmExchange>, LlmError>>>> =
            (0..specs.len()).map(|_| Mutex::new(None)).collect();
        let workers = self.config.max_in_flight.clamp(1, specs.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= specs.len() {
                        break;
                    }
                    let r = self.score_prompt(&specs[i], std::slice::from_ref(&names[i]), limiter.as_ref());
                    *results[i].lock().unwrap_or_else(|p| p.into_inner()) = Some(r);
                });
            }
        });
        let mut values = Vec::with_capacity(specs.len());
        let mut exchanges = Vec::with_capacity(specs.len());
        for slot in results {
            let ex = slot.into_inner().unwrap_or_else(|p| p.into_inner()).expect("every feature scored")?;
            values.push(ex.last().expect("a valid exchange").entries[0].score);
            exchanges.extend(ex);
        }
        Ok((values, exchanges))
    }
}

/// Scores every original feature with an LLM.
///
/// The hybrid pipeline sends one prompt with a stratified train sample; the
/// direct pipeline sends one prompt per feature. The reported runtime is the
/// sum of the recorded exchange latencies.
pub fn llm_feature_scores(
    selector: &LlmSelector,
    ds: &Dataset,
    split: &Split,
    pipeline: Pipeline,
    seed: u64,
) -> Result<LlmRun, LlmError> {
    let (values, exchanges) = match pipeline {
        Pipeline::Hybrid => selector.hybrid(ds, split, seed)?,
        Pipeline::Direct => selector.direct(ds)?,
    };
    let runtime: f64 = exchanges.iter().map(|e| e.latency_seconds).sum();
    let provider_calls = exchanges.iter().filter(|e| !e.from_cache).count();
    let scores = FeatureScores::from_scores(selector.method_tag(pipeline), ds, values, seed).with_runtime_seconds(runtime);
    Ok(LlmRun {
        scores,
        exchanges,
        provider_calls,
    })
}
