//! Rule-based extraction of standalone fragments (identifiers and values).

pub mod annotation;
pub mod extract;
pub mod grammar;
pub mod kb;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use annotation::{Annotator, AnnotationError, FileAnnotator, LexicalAnnotator, SentenceAnnotation};
pub use extract::extract_fragments;
pub use grammar::{compile_rules, Rule, RuleError, RuleSet};
pub use kb::{KbError, KnowledgeBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentKind {
    Identifier,
    QuantitativeValue,
    CategoricalValue,
    BooleanValue,
    CompoundValue,
}

impl FragmentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FragmentKind::Identifier => "identifier",
            FragmentKind::QuantitativeValue => "quantitative_value",
            FragmentKind::CategoricalValue => "categorical_value",
            FragmentKind::BooleanValue => "boolean_value",
            FragmentKind::CompoundValue => "compound_value",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "identifier" => FragmentKind::Identifier,
            "quantitative_value" => FragmentKind::QuantitativeValue,
            "categorical_value" => FragmentKind::CategoricalValue,
            "boolean_value" => FragmentKind::BooleanValue,
            "compound_value" => FragmentKind::CompoundValue,
            _ => return None,
        })
    }

    pub fn is_value(self) -> bool {
        self != FragmentKind::Identifier
    }
}

/// Byte range inside one turn's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub turn: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn overlaps(&self, other: &Span) -> bool {
        self.turn == other.turn && self.start < other.end && other.start < self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub label: String,
    pub kind: FragmentKind,
    pub text: String,
    pub span: Span,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_value: Option<f64>,
    /// Identifier category for identifiers; value category for categorical
    /// and compound values; `boolean` for booleans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    /// Producing rule, or the built-in scanner name.
    pub source: String,
}

impl Fragment {
    pub fn boolean_value(&self) -> Option<bool> {
        match self.fields.get("value").map(String::as_str) {
            Some("true") => Some(true),
            Some("false") => Some(false),
            _ => None,
        }
    }

    /// Checks the kind-specific payload requirements.
    pub fn is_well_formed(&self) -> bool {
        match self.kind {
            FragmentKind::QuantitativeValue => self.numeric_value.is_some(),
            FragmentKind::CompoundValue => self.numeric_value.is_some() && self.category.is_some(),
            FragmentKind::BooleanValue => self.boolean_value().is_some(),
            FragmentKind::CategoricalValue | FragmentKind::Identifier => true,
        }
    }
}
