//! Grounded output records shared by both backends and the evaluator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ontology::ValueType;
use crate::rules::Span;
use crate::text::{format_number, parse_number};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Ns,
    Llm,
}

impl Backend {
    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Ns => "ns",
            Backend::Llm => "llm",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl RecordValue {
    pub fn value_type(&self) -> ValueType {
        match self {
            RecordValue::Bool(_) => ValueType::Boolean,
            RecordValue::Number(_) => ValueType::Quantitative,
            RecordValue::Text(_) => ValueType::Categorical,
        }
    }

    /// Canonical comparison form: integers without a fraction, text
    /// lowercased with collapsed whitespace.
    pub fn canonical(&self) -> String {
        match self {
            RecordValue::Bool(b) => b.to_string(),
            RecordValue::Number(n) => format_number(*n),
            RecordValue::Text(s) => s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase(),
        }
    }

    /// Reads a value written as text, as found in gold files.
    pub fn parse_typed(s: &str, ty: ValueType) -> Option<RecordValue> {
        let t = s.trim();
        match ty {
            ValueType::Boolean => match t.to_lowercase().as_str() {
                "true" | "yes" => Some(RecordValue::Bool(true)),
                "false" | "no" => Some(RecordValue::Bool(false)),
                _ => None,
            },
            ValueType::Quantitative => parse_number(t).map(RecordValue::Number),
            ValueType::Categorical => (!t.is_empty()).then(|| RecordValue::Text(t.to_string())),
        }
    }
}

impl fmt::Display for RecordValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordValue::Bool(b) => write!(f, "{b}"),
            RecordValue::Number(n) => f.write_str(&format_number(*n)),
            RecordValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedRecord {
    pub grounding: String,
    pub grounding_id: String,
    pub value: RecordValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// Source spans (identifier and value for the NS backend).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Span>,
    /// Turn range [start, end) of the topic block (LLM backend).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_turns: Option<(usize, usize)>,
    pub backend: Backend,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}
