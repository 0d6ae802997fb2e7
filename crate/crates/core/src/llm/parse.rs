use serde_json::{Map, Value};

use super::{LlmScoreEntry, ValidationError};

/// The first JSON array of objects in `raw`, skipping prose, code fences
/// and arrays of other values such as `[0.0, 1.0]`.
fn first_object_array(raw: &str) -> Option<Vec<Value>> {
    for (pos, _) in raw.match_indices('[') {
        let mut stream = serde_json::Deserializer::from_str(&raw[pos..]).into_iter::<Value>();
        if let Some(Ok(Value::Array(items))) = stream.next() {
            if !items.is_empty() && items.iter().all(Value::is_object) {
                return Some(items);
            }
        }
    }
    None
}

fn concept_of(obj: &Map<String, Value>) -> Option<&str> {
    obj.iter()
        .find(|(k, _)| {
            let k = k.to_ascii_lowercase();
            k == "concept" || k.strip_prefix("concept-").is_some_and(|n| n.chars().all(|c| c.is_ascii_digit()))
        })
        .and_then(|(_, v)| v.as_str())
}

fn score_of(obj: &Map<String, Value>) -> Option<f64> {
    match obj.get("score")? {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

/// Matches a concept to an expected feature: exact, then ignoring case and
/// surrounding whitespace.
fn match_feature(concept: &str, expected: &[String]) -> Option<usize> {
    expected.iter().position(|f| f == concept).or_else(|| {
        let c = concept.trim();
        expected.iter().position(|f| f.eq_ignore_ascii_case(c))
    })
}

/// Extracts score entries for `expected` from a model response and
/// validates them. Entries come back in `expected` order; concepts that
/// name no expected feature are ignored.
pub fn parse_scores(raw: &str, expected: &[String]) -> Result<Vec<LlmScoreEntry>, ValidationError> {
    let items = first_object_array(raw).ok_or(ValidationError::NoJson)?;
    let mut slots: Vec<Option<LlmScoreEntry>> = vec![None; expected.len()];
    for item in &items {
        let obj = item.as_object().expect("checked to be objects");
        let concept = concept_of(obj).ok_or_else(|| ValidationError::Malformed(format!("no concept in {item}")))?;
        let Some(f) = match_feature(concept, expected) else {
            continue;
        };
        let score = score_of(obj).ok_or_else(|| ValidationError::Malformed(format!("no numeric score for `{concept}`")))?;
        if slots[f].is_some() {
            return Err(ValidationError::DuplicateFeature(expected[f].clone()));
        }
        let reasoning = obj.get("reasoning").and_then(Value::as_str).unwrap_or_default().to_string();
        slots[f] = Some(LlmScoreEntry {
            concept: expected[f].clone(),
            reasoning,
            score,
        });
    }
    let mut entries = Vec::with_capacity(expected.len());
    for (slot, name) in slots.into_iter().zip(expected) {
        entries.push(slot.ok_or_else(|| ValidationError::MissingFeature(name.clone()))?);
    }
    validate_entries(&entries, expected)?;
    Ok(entries)
}

/// Coverage, range and distinctness checks on entries in `expected` order.
pub fn validate_entries(entries: &[LlmScoreEntry], expected: &[String]) -> Result<(), ValidationError> {
    for name in expected {
        let count = entries.iter().filter(|e| &e.concept == name).count();
        if count == 0 {
            return Err(ValidationError::MissingFeature(name.clone()));
        }
        if count > 1 {
            return Err(ValidationError::DuplicateFeature(name.clone()));
        }
    }
    for e in entries {
        if !(0.0..=1.0).contains(&e.score) {
            return Err(ValidationError::OutOfRange {
                name: e.concept.clone(),
                value: e.score,
            });
        }
    }
    for (i, a) in entries.iter().enumerate() {
        if let Some(b) = entries[i + 1..].iter().find(|b| b.score == a.score) {
            return Err(ValidationError::DuplicateScore {
                first: a.concept.clone(),
                second: b.concept.clone(),
                score: a.score,
            });
        }
    }
    Ok(())
}
