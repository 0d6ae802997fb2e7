use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::{impute_missing, load_csv_str, Dataset, LoadOptions, Split, CLASS_HEADER};
use crate::forest::{fit_forest, forest_feature_scores, rf_feature_scores, ForestParams};
use crate::selectors::FeatureScores;

use super::prompt::{extract_feature, extract_sample};
use super::{ChatProvider, ProviderError};

/// Which invalid payload a malformed mock emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MalformedKind {
    NoJson,
    MissingFeature,
    OutOfRange,
    DuplicateScore,
}

impl MalformedKind {
    pub const ALL: [MalformedKind; 4] = [
        MalformedKind::NoJson,
        MalformedKind::MissingFeature,
        MalformedKind::OutOfRange,
        MalformedKind::DuplicateScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MalformedKind::NoJson => "no_json",
            MalformedKind::MissingFeature => "missing_feature",
            MalformedKind::OutOfRange => "out_of_range",
            MalformedKind::DuplicateScore => "duplicate_score",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MockBehavior {
    /// Runs the random forest on the prompt's own data and reports its
    /// importances, the way an LLM executing the requested code would.
    RfOracle,
    /// Replays a stored response file verbatim.
    EchoFixture { path: PathBuf },
    Malformed { kind: MalformedKind },
}

const ORACLE_REASONING: &str =
    "Impurity-decrease importance from a random forest fit on the provided samples.";

/// Deterministic offline provider. Pure apart from its call counter.
pub struct MockProvider {
    behavior: MockBehavior,
    dataset: Dataset,
    split: Split,
    forest: ForestParams,
    fixture: Option<String>,
    train_scores: OnceLock<Result<FeatureScores, String>>,
    calls: AtomicUsize,
}

impl MockProvider {
    pub fn new(behavior: MockBehavior, ds: &Dataset, split: &Split, forest: ForestParams) -> Result<Self, ProviderError> {
        let fixture = match &behavior {
            MockBehavior::EchoFixture { path } => Some(
                std::fs::read_to_string(path)
                    .map_err(|e| ProviderError::BadPayload(format!("fixture {}: {e}", path.display())))?,
            ),
            _ => None,
        };
        Ok(Self {
            behavior,
            dataset: ds.clone(),
            split: split.clone(),
            forest,
            fixture,
            train_scores: OnceLock::new(),
            calls: AtomicUsize::new(0),
        })
    }

    /// An echo mock replaying `text`.
    pub fn echo_text(text: impl Into<String>, ds: &Dataset, split: &Split) -> Self {
        Self {
            behavior: MockBehavior::EchoFixture { path: PathBuf::new() },
            dataset: ds.clone(),
            split: split.clone(),
            forest: ForestParams::default(),
            fixture: Some(text.into()),
            train_scores: OnceLock::new(),
            calls: AtomicUsize::new(0),
        }
    }

    /// Features a prompt asks about: the named one for a direct prompt,
    /// otherwise every dataset feature.
    fn prompt_features(&self, user: &str) -> Vec<String> {
        match extract_feature(user) {
            Some(f) if extract_sample(user).is_none() => vec![f.to_string()],
            _ => self.dataset.feature_names(),
        }
    }

    fn oracle(&self, user: &str) -> Result<String, ProviderError> {
        if let Some(csv) = extract_sample(user) {
            let scores = sample_forest_scores(csv, &self.dataset, &self.forest)?;
            return Ok(oracle_payload(&scores));
        }
        let feature = extract_feature(user).ok_or_else(|| ProviderError::BadPayload("prompt names no feature".into()))?;
        let scores = self
            .train_scores
            .get_or_init(|| rf_feature_scores(&self.dataset, &self.split, &self.forest).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| ProviderError::BadPayload(e.clone()))?;
        let score = *scores
            .scores
            .get(feature)
            .ok_or_else(|| ProviderError::BadPayload(format!("unknown feature `{feature}`")))?;
        Ok(json_payload(&[(feature.to_string(), score)]))
    }

    fn malformed(&self, kind: MalformedKind, user: &str) -> String {
        let features = self.prompt_features(user);
        let l = features.len() as f64;
        let distinct: Vec<(String, f64)> = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), (l - i as f64) / (l + 1.0)))
            .collect();
        match kind {
            MalformedKind::NoJson => "I am unable to run code on these samples, but the features look important.".into(),
            MalformedKind::MissingFeature => json_payload(&distinct[..distinct.len() - 1]),
            MalformedKind::OutOfRange => {
                let mut v = distinct;
                v[0].1 = 1.2;
                json_payload(&v)
            }
            MalformedKind::DuplicateScore => {
                let mut v = distinct.clone();
                if v.len() == 1 {
                    v.push(v[0].clone());
                } else {
                    v[1].1 = v[0].1;
                }
                json_payload(&v)
            }
        }
    }
}

impl ChatProvider for MockProvider {
    fn complete(&self, _system: &str, user: &str, _temperature: f64) -> Result<String, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match &self.behavior {
            MockBehavior::RfOracle => self.oracle(user),
            MockBehavior::EchoFixture { .. } => Ok(self.fixture.clone().unwrap_or_default()),
            MockBehavior::Malformed { kind } => Ok(self.malformed(*kind, user)),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Forest scores on a prompt's CSV sample, typed like the source dataset.
fn sample_forest_scores(csv: &str, ds: &Dataset, params: &ForestParams) -> Result<FeatureScores, ProviderError> {
    let kinds: HashMap<String, _> = ds.features().iter().map(|f| (f.name.clone(), f.kind)).collect();
    let options = LoadOptions {
        name: Some(ds.name().to_string()),
        kinds,
        ..LoadOptions::new(CLASS_HEADER)
    };
    let bad = |e: &dyn std::fmt::Display| ProviderError::BadPayload(format!("prompt sample: {e}"));
    let sample = load_csv_str(csv, &options).map_err(|e| bad(&e))?;
    let all = Split {
        train_indices: (0..sample.n_samples()).collect(),
        test_indices: Vec::new(),
        seed: 0,
    };
    let sample = impute_missing(&sample, &all);
    let model = fit_forest(sample.x(), sample.y(), params).map_err(|e| bad(&e))?;
    Ok(forest_feature_scores(&model, &sample))
}

/// Makes tied scores distinct without reordering: within a tie group the
/// earlier-ranked feature gets the larger bump, and bumps stay below both
/// 1e-6 and half the gap to the next higher score.
fn perturb_ties(scores: &FeatureScores) -> Vec<(String, f64)> {
    let ranked: Vec<(String, f64)> = scores.ranking.iter().map(|n| (n.clone(), scores.scores[n])).collect();
    let mut out = ranked.clone();
    let mut start = 0;
    while start < ranked.len() {
        let v = ranked[start].1;
        let end = start + ranked[start..].iter().take_while(|(_, s)| *s == v).count();
        let m = end - start;
        if m > 1 {
            let headroom = if start == 0 { 1e-6 } else { (ranked[start - 1].1 - v) / 2.0 };
            let step = headroom.min(1e-6) / m as f64;
            for (j, item) in out[start..end].iter_mut().enumerate() {
                item.1 = v + (m - 1 - j) as f64 * step;
            }
        }
        start = end;
    }
    out
}

fn oracle_payload(scores: &FeatureScores) -> String {
    let mut entries = perturb_ties(scores);
    let order: HashMap<&str, usize> = scores.scores.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    entries.sort_by_key(|(name, _)| order[name.as_str()]);
    json_payload(&entries)
}

fn json_payload(entries: &[(String, f64)]) -> String {
    let items: Vec<Value> = entries
        .iter()
        .enumerate()
        .map(|(i, (name, score))| {
            json!({
                format!("concept-{}", i + 1): name,
                "reasoning": ORACLE_REASONING,
                "score": score,
            })
        })
        .collect();
    let mut text = serde_json::to_string_pretty(&items).expect("serializable");
    text.push('\n');
    text
}
