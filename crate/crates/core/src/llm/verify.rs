//! Verification of raw model output: JSON parsing, per-field type coercion,
//! and the word-overlap hallucination filter.

use std::collections::BTreeSet;
use std::ops::Range;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::schema::{ExtractionSchema, FieldType};
use crate::record::RecordValue;
use crate::text::parse_number;

/// The topic block a record was extracted from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRef {
    pub topic_label: String,
    pub turn_range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedRecord {
    pub schema_name: String,
    pub field_name: String,
    pub value: RecordValue,
    pub field_type: FieldType,
    pub coerced: bool,
    /// Position of the source object in the model's output array.
    pub record_index: usize,
    pub block: Option<BlockRef>,
}

fn word_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[\p{L}\p{N}]+").expect("word regex"))
}

/// Lowercase letter/digit runs.
pub fn overlap_words(text: &str) -> BTreeSet<String> {
    word_re().find_iter(text).map(|m| m.as_str().to_lowercase()).collect()
}

/// True when `value` shares at least one word with the block.
pub fn has_overlap(value: &str, block_words: &BTreeSet<String>) -> bool {
    word_re().find_iter(value).any(|m| block_words.contains(&m.as_str().to_lowercase()))
}

/// Pulls a JSON array out of raw output, tolerating code fences or prose
/// around it. A lone object counts as a one-element array.
pub fn parse_raw(raw: &str) -> Option<Vec<Value>> {
    let direct = serde_json::from_str::<Value>(raw.trim()).ok();
    let v = direct.or_else(|| {
        let (a, b) = (raw.find('[')?, raw.rfind(']')?);
        (a < b).then(|| serde_json::from_str(&raw[a..=b]).ok()).flatten()
    });
    let v = v.or_else(|| {
        let (a, b) = (raw.find('{')?, raw.rfind('}')?);
        (a < b).then(|| serde_json::from_str(&raw[a..=b]).ok()).flatten()
    })?;
    match v {
        Value::Array(items) => Some(items),
        Value::Object(_) => Some(vec![v]),
        _ => None,
    }
}

/// Coerces one JSON value to the field type. Returns the typed values and
/// whether a conversion was needed; `None` when the value cannot be coerced.
pub fn coerce(v: &Value, ty: FieldType) -> Option<(Vec<RecordValue>, bool)> {
    match ty {
        FieldType::Boolean => match v {
            Value::Bool(b) => Some((vec![RecordValue::Bool(*b)], false)),
            Value::String(s) => match s.trim().to_lowercase().as_str() {
                "true" | "yes" => Some((vec![RecordValue::Bool(true)], true)),
                "false" | "no" => Some((vec![RecordValue::Bool(false)], true)),
                _ => None,
            },
            _ => None,
        },
        FieldType::Integer | FieldType::Number => {
            let (n, coerced) = match v {
                Value::Number(n) => (n.as_f64()?, ty == FieldType::Integer && !(n.is_i64() || n.is_u64())),
                Value::String(s) => (parse_number(s.trim())?, true),
                _ => return None,
            };
            if !n.is_finite() || (ty == FieldType::Integer && n.fract() != 0.0) {
                return None;
            }
            Some((vec![RecordValue::Number(n)], coerced))
        }
        FieldType::String => match v {
            Value::String(s) => Some((vec![RecordValue::Text(s.clone())], false)),
            Value::Number(n) => Some((vec![RecordValue::Text(n.to_string())], true)),
            _ => None,
        },
        FieldType::StringList => match v {
            Value::Array(items) => {
                let texts: Option<Vec<RecordValue>> =
                    items.iter().map(|i| i.as_str().map(|s| RecordValue::Text(s.to_string()))).collect();
                Some((texts?, false))
            }
            Value::String(s) => Some((vec![RecordValue::Text(s.clone())], true)),
            _ => None,
        },
    }
}

/// Parses, types and filters one model response. Malformed output yields an
/// empty list and a warning.
pub fn verify_output(raw: &str, s: &ExtractionSchema, block_text: &str) -> Vec<ValidatedRecord> {
    let Some(items) = parse_raw(raw) else {
        log::warn!("{}: unparseable model output ({} bytes)", s.name, raw.len());
        return Vec::new();
    };
    let block_words = overlap_words(block_text);
    let mut out = Vec::new();
    for (idx, item) in items.iter().enumerate() {
        let Some(obj) = item.as_object() else {
            log::warn!("{}: output element {idx} is not an object", s.name);
            continue;
        };
        for (key, v) in obj {
            let Some(field) = s.field(key) else {
                log::debug!("{}: dropping unknown field `{key}`", s.name);
                continue;
            };
            if v.is_null() {
                continue;
            }
            let Some((values, coerced)) = coerce(v, field.field_type) else {
                log::info!("{}.{key}: discarding non-coercible value {v}", s.name);
                continue;
            };
            for value in values {
                if let RecordValue::Text(t) = &value {
                    if t.trim().is_empty() {
                        continue;
                    }
                    if !has_overlap(t, &block_words) {
                        log::info!("{}.{key}: discarding `{t}` (no word overlap with block)", s.name);
                        continue;
                    }
                }
                out.push(ValidatedRecord {
                    schema_name: s.name.clone(),
                    field_name: key.clone(),
                    value,
                    field_type: field.field_type,
                    coerced,
                    record_index: idx,
                    block: None,
                });
            }
        }
    }
    out
}
