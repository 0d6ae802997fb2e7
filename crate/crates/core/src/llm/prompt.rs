use crate::data::{Dataset, CLASS_HEADER};

use super::{LlmError, PromptKind, PromptSpec};

/// Instruction block of the hybrid prompt.
pub const HYBRID_SYSTEM_PROMPT: &str = include_str!("../../assets/hybrid_system_prompt.txt");
/// Response-format block of the hybrid prompt.
pub const HYBRID_RESPONSE_FORMAT: &str = include_str!("../../assets/hybrid_response_format.txt");
/// Heading that introduces the CSV in the hybrid prompt.
pub const HYBRID_SAMPLES_HEADING: &str = "Dataset Samples";
/// System message sent with every chat request.
pub const SYSTEM_MESSAGE: &str = include_str!("../../assets/system_message.txt");
/// Line prefix naming the feature a direct prompt asks about.
pub const DIRECT_FEATURE_MARKER: &str = "Feature: ";

const HYBRID_CONTEXT: &str = include_str!("../../assets/hybrid_context.txt");
const DIRECT_CONTEXT: &str = include_str!("../../assets/direct_context.txt");
const DIRECT_FORMAT: &str = include_str!("../../assets/direct_response_format.txt");
const DIRECT_COT: &str = include_str!("../../assets/direct_cot.txt");

const DESCRIPTIONS: [(&str, &str); 4] = [
    ("pima", include_str!("../../assets/descriptions/pima.txt")),
    ("credit-g", include_str!("../../assets/descriptions/credit-g.txt")),
    ("bank", include_str!("../../assets/descriptions/bank.txt")),
    ("give-me-some-credit", include_str!("../../assets/descriptions/give-me-some-credit.txt")),
];

fn block(text: &str) -> &str {
    text.trim_end_matches(['\n', '\r'])
}

/// Default task context for the hybrid prompt of `ds`.
pub fn default_hybrid_context(ds: &Dataset) -> String {
    block(HYBRID_CONTEXT)
        .replace("{dataset}", ds.name())
        .replace("{features}", &ds.feature_names().join(", "))
}

/// Editable text blocks of the direct prompt. `context` may mention
/// `{feature}` and `{dataset}`, which are substituted at render time.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectTemplates {
    pub description: String,
    pub examples: Option<String>,
    pub cot: Option<String>,
    pub context: String,
}

impl DirectTemplates {
    /// Built-in description for known benchmark datasets, otherwise a
    /// generic one listing the features.
    pub fn for_dataset(ds: &Dataset) -> Self {
        let key = ds.name().to_ascii_lowercase().replace('_', "-");
        let description = DESCRIPTIONS
            .iter()
            .find(|(name, _)| key == *name || (key == "gmsc" && *name == "give-me-some-credit"))
            .map(|(_, text)| block(text).to_string())
            .unwrap_or_else(|| {
                format!(
                    "The tabular dataset \"{}\" is a binary classification task with the features {}.",
                    ds.name(),
                    ds.feature_names().join(", ")
                )
            });
        Self {
            description,
            examples: None,
            cot: Some(block(DIRECT_COT).to_string()),
            context: block(DIRECT_CONTEXT).to_string(),
        }
    }
}

/// Per-feature semantic prompt: description, examples, reasoning cue and
/// task context in that order, then the feature line and response format.
/// Absent blocks are left out entirely.
pub fn build_direct_prompt(
    ds: &Dataset,
    feature: &str,
    context: &str,
    description: &str,
    examples: Option<&str>,
    cot: Option<&str>,
) -> Result<PromptSpec, LlmError> {
    if ds.feature_index(feature).is_none() {
        return Err(LlmError::UnknownFeature(feature.to_string()));
    }
    let fill = |t: &str| t.replace("{feature}", feature).replace("{dataset}", ds.name());
    let context = fill(context);
    let mut parts: Vec<String> = vec![description.to_string()];
    parts.extend(examples.map(str::to_string));
    parts.extend(cot.map(str::to_string));
    parts.push(context.clone());
    parts.push(format!("{DIRECT_FEATURE_MARKER}{feature}"));
    parts.push(fill(block(DIRECT_FORMAT)));
    let mut rendered = parts.join("\n\n");
    rendered.push('\n');
    Ok(PromptSpec {
        kind: PromptKind::Direct,
        context,
        description: Some(description.to_string()),
        examples: examples.map(str::to_string),
        cot: cot.map(str::to_string),
        sample_csv: None,
        feature: Some(feature.to_string()),
        rendered,
    })
}

/// Data-sample prompt: task context, the instruction block, the response
/// format block and the CSV sample.
pub fn build_hybrid_prompt(ds: &Dataset, sample_csv: &str, context: &str) -> Result<PromptSpec, LlmError> {
    let header = sample_csv.lines().next().ok_or(LlmError::EmptySample)?;
    if header.trim().is_empty() {
        return Err(LlmError::EmptySample);
    }
    let columns: Vec<String> = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(header.as_bytes())
        .records()
        .next()
        .and_then(Result::ok)
        .map(|r| r.iter().map(|c| c.trim().to_string()).collect())
        .unwrap_or_default();
    if !columns.iter().any(|c| c == CLASS_HEADER) {
        return Err(LlmError::MissingClassHeader);
    }
    if let Some(unknown) = columns.iter().find(|c| **c != CLASS_HEADER && ds.feature_index(c).is_none()) {
        return Err(LlmError::UnknownFeature(unknown.to_string()));
    }
    let rendered = format!(
        "{context}\n\nMain System Prompt\n\n{}\n\nFormat for Response\n\n{}\n\n{HYBRID_SAMPLES_HEADING}\n\n{}",
        block(HYBRID_SYSTEM_PROMPT),
        block(HYBRID_RESPONSE_FORMAT),
        sample_csv
    );
    Ok(PromptSpec {
        kind: PromptKind::Hybrid,
        context: context.to_string(),
        description: None,
        examples: None,
        cot: None,
        sample_csv: Some(sample_csv.to_string()),
        feature: None,
        rendered,
    })
}

/// The CSV sample embedded in a rendered hybrid prompt.
pub(crate) fn extract_sample(rendered: &str) -> Option<&str> {
    let after_format = rendered.find(block(HYBRID_RESPONSE_FORMAT))? + block(HYBRID_RESPONSE_FORMAT).len();
    let heading = format!("{HYBRID_SAMPLES_HEADING}\n\n");
    let start = rendered[after_format..].find(&heading)? + after_format + heading.len();
    Some(&rendered[start..])
}

/// The feature named by a rendered direct prompt.
pub(crate) fn extract_feature(rendered: &str) -> Option<&str> {
    rendered
        .lines()
        .rev()
        .find_map(|line| line.strip_prefix(DIRECT_FEATURE_MARKER))
        .map(str::trim)
}
