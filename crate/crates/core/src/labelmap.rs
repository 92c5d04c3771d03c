//! Mapping free-form generated text onto sentiment labels.
//!
//! The rule is a case-insensitive substring search for the three canonical
//! terms. Exactly one distinct term present maps to that label; several
//! distinct terms map to the earliest occurrence; none maps to Neutral.
//! Substring (not whole-word) matching is deliberate so "positively"
//! matches "positive". With extended synonyms enabled, "bullish" counts as
//! a positive term and "bearish" as a negative term at lower priority than
//! the canonical terms at equal offsets.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::SentimentLabel;
use crate::error::{Error, Result};

/// Which mapping rule produced a label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MappingRule {
    SingleTerm,
    FirstOccurrenceTieBreak,
    DefaultNeutral,
}

/// The label plus the evidence that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingTrace {
    pub label: SentimentLabel,
    /// Every term occurrence in text order: (term, byte offset).
    pub matched_terms: Vec<(String, usize)>,
    pub rule_fired: MappingRule,
}

const CANONICAL_TERMS: [(&str, SentimentLabel); 3] = [
    ("negative", SentimentLabel::Negative),
    ("neutral", SentimentLabel::Neutral),
    ("positive", SentimentLabel::Positive),
];

const SYNONYM_TERMS: [(&str, SentimentLabel); 2] = [
    ("bearish", SentimentLabel::Negative),
    ("bullish", SentimentLabel::Positive),
];

fn find_all(haystack: &str, needle: &str) -> Vec<usize> {
    let mut offsets = Vec::new();
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        offsets.push(from + pos);
        from += pos + 1;
    }
    offsets
}

/// Map one generated output to a label. Total: every string maps somewhere.
pub fn map_output(raw: &str, extended_synonyms: bool) -> MappingTrace {
    let lower = raw.to_ascii_lowercase();

    // (offset, priority, term, label); canonical terms take priority 0
    let mut occurrences: Vec<(usize, u8, &str, SentimentLabel)> = Vec::new();
    for (term, label) in CANONICAL_TERMS {
        for offset in find_all(&lower, term) {
            occurrences.push((offset, 0, term, label));
        }
    }
    if extended_synonyms {
        for (term, label) in SYNONYM_TERMS {
            for offset in find_all(&lower, term) {
                occurrences.push((offset, 1, term, label));
            }
        }
    }
    occurrences.sort_by_key(|occ| (occ.0, occ.1));

    let matched_terms: Vec<(String, usize)> = occurrences
        .iter()
        .map(|(offset, _, term, _)| (term.to_string(), *offset))
        .collect();

    if occurrences.is_empty() {
        return MappingTrace {
            label: SentimentLabel::Neutral,
            matched_terms,
            rule_fired: MappingRule::DefaultNeutral,
        };
    }

    let distinct: HashSet<&str> = occurrences.iter().map(|(_, _, term, _)| *term).collect();
    let rule_fired = if distinct.len() == 1 {
        MappingRule::SingleTerm
    } else {
        MappingRule::FirstOccurrenceTieBreak
    };
    MappingTrace {
        label: occurrences[0].3,
        matched_terms,
        rule_fired,
    }
}

/// Raw model generation plus its mapped label for one sample.
///
/// Persisted as JSONL with keys `{"id","raw_output","label"}`, label
/// lowercase canonical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(rename = "id")]
    pub sample_id: String,
    pub raw_output: String,
    pub label: SentimentLabel,
}

/// Map a batch of raw outputs, preserving order. Sample ids must be distinct.
pub fn map_predictions(
    raw_outputs: &[(String, String)],
    extended_synonyms: bool,
) -> Result<Vec<Prediction>> {
    let mut seen = HashSet::with_capacity(raw_outputs.len());
    for (id, _) in raw_outputs {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateSampleId { id: id.clone() });
        }
    }
    Ok(raw_outputs
        .iter()
        .map(|(id, text)| Prediction {
            sample_id: id.clone(),
            raw_output: text.clone(),
            label: map_output(text, extended_synonyms).label,
        })
        .collect())
}

/// Serialize predictions in the persisted JSONL schema.
pub fn predictions_to_jsonl(predictions: &[Prediction]) -> String {
    let mut out = String::new();
    for p in predictions {
        out.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        out.push('\n');
    }
    out
}

pub fn save_predictions(predictions: &[Prediction], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(predictions_to_jsonl(predictions).as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Load a predictions JSONL file. Each line needs `"id"` and at least one of
/// `"raw_output"` or `"label"`. A stored label is trusted (it records what
/// the producing run computed); a bare label is synthesized into a raw
/// output so replay stays on the uniform mapper path; a bare raw output is
/// mapped here.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut predictions = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let value: serde_json::Value =
            serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let id = value
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| malformed("missing string key 'id'".to_string()))?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateSampleId { id });
        }
        let raw = value.get("raw_output").and_then(|v| v.as_str());
        let stored_label = match value.get("label") {
            Some(serde_json::Value::String(s)) => Some(
                s.parse::<SentimentLabel>()
                    .map_err(|_| malformed(format!("unknown label word '{s}'")))?,
            ),
            _ => None,
        };
        let (raw_output, label) = match (raw, stored_label) {
            (Some(raw), Some(label)) => (raw.to_string(), label),
            (Some(raw), None) => (raw.to_string(), map_output(raw, false).label),
            (None, Some(label)) => (label.as_str().to_string(), label),
            (None, None) => {
                return Err(malformed("need 'raw_output' or 'label'".to_string()));
            }
        };
        predictions.push(Prediction {
            sample_id: id,
            raw_output,
            label,
        });
    }
    Ok(predictions)
}
