//! Extraction schemas loaded from TOML.
//!
//! ```toml
//! [[schema]]
//! name = "TotalFinishingPigsEvent"
//! description = "Information about the total finishing pigs in the farm."
//! topic_labels = ["pig_inventory"]
//!
//! [[schema.fields]]
//! name = "total_finishing_pigs"
//! type = "integer"
//! optional = true
//! guideline = "total number of finishing pigs in the farm. Integer type outputs expected."
//!
//! [schema.example]
//! input = "And so you're finishing how many total pigs a year? 6,670."
//! output = [{ total_finishing_pigs = 6670 }]
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{read_to_string, ConfigError};
use crate::transcript::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldType {
    Integer,
    Number,
    Boolean,
    String,
    StringList,
}

impl FieldType {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldType::Integer => "integer",
            FieldType::Number => "number",
            FieldType::Boolean => "boolean",
            FieldType::String => "string",
            FieldType::StringList => "string_list",
        }
    }

    /// Whether a JSON value already has this type, without coercion.
    pub fn accepts(self, v: &Value) -> bool {
        match self {
            FieldType::Integer => v.is_i64() || v.is_u64(),
            FieldType::Number => v.is_number(),
            FieldType::Boolean => v.is_boolean(),
            FieldType::String => v.is_string(),
            FieldType::StringList => v.as_array().is_some_and(|a| a.iter().all(Value::is_string)),
        }
    }

    fn json_schema(self) -> Value {
        match self {
            FieldType::StringList => json!({"type": "array", "items": {"type": "string"}}),
            other => json!({"type": other.as_str()}),
        }
    }
}

impl fmt::Display for FieldType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaField {
    pub name: String,
    #[serde(rename = "type")]
    pub field_type: FieldType,
    #[serde(default = "default_optional")]
    pub optional: bool,
    #[serde(default)]
    pub guideline: String,
}

fn default_optional() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkedExample {
    pub input: String,
    pub output: Vec<Map<String, Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractionSchema {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Empty means the schema applies to every block.
    #[serde(default)]
    pub topic_labels: BTreeSet<String>,
    /// Empty means every domain.
    #[serde(default)]
    pub domains: BTreeSet<Domain>,
    pub fields: Vec<SchemaField>,
    pub example: WorkedExample,
}

impl ExtractionSchema {
    pub fn field(&self, name: &str) -> Option<&SchemaField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.name.trim().is_empty() {
            return Err("schema with an empty name".into());
        }
        let mut seen = BTreeSet::new();
        for f in &self.fields {
            if f.name.trim().is_empty() {
                return Err(format!("{}: empty field name", self.name));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(format!("{}: duplicate field `{}`", self.name, f.name));
            }
        }
        if self.fields.is_empty() {
            return Err(format!("{}: no fields", self.name));
        }
        for (i, rec) in self.example.output.iter().enumerate() {
            for (k, v) in rec {
                let field = self.field(k).ok_or_else(|| format!("{}: example record {} uses unknown field `{k}`", self.name, i + 1))?;
                if !field.field_type.accepts(v) {
                    return Err(format!("{}: example value for `{k}` is not {}", self.name, field.field_type));
                }
            }
        }
        Ok(())
    }

    pub fn applies_to(&self, topic_label: &str, domain: Domain) -> bool {
        (self.topic_labels.is_empty() || self.topic_labels.contains(topic_label)) && self.applies_to_domain(domain)
    }

    pub fn applies_to_domain(&self, domain: Domain) -> bool {
        self.domains.is_empty() || domain == Domain::Unknown || self.domains.contains(&domain)
    }

    /// JSON-schema-like description used for the prompt's schema slot.
    pub fn render_schema(&self) -> String {
        let mut props = Map::new();
        for f in &self.fields {
            let mut p = f.field_type.json_schema();
            if !f.guideline.is_empty() {
                p["description"] = Value::String(f.guideline.clone());
            }
            props.insert(f.name.clone(), p);
        }
        let required: Vec<&str> = self.fields.iter().filter(|f| !f.optional).map(|f| f.name.as_str()).collect();
        json!({
            "title": self.name,
            "description": self.description,
            "type": "object",
            "properties": props,
            "required": required,
        })
        .to_string()
    }

    /// The worked example for the prompt's example slot.
    pub fn render_example(&self) -> String {
        let output = serde_json::to_string(&self.example.output).expect("example serializes");
        format!("From a statement like \"{}\", the extracted information should be:\n{}", self.example.input, output)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(default)]
    schema: Vec<ExtractionSchema>,
}

/// Parses a TOML document with one or more `[[schema]]` tables.
pub fn parse_schemas(content: &str, source: &str) -> Result<Vec<ExtractionSchema>, ConfigError> {
    let file: SchemaFile = toml::from_str(content).map_err(|e| ConfigError::invalid(source, e.to_string()))?;
    let mut names = BTreeSet::new();
    for s in &file.schema {
        s.validate().map_err(|e| ConfigError::invalid(source, e))?;
        if !names.insert(s.name.clone()) {
            return Err(ConfigError::invalid(source, format!("duplicate schema `{}`", s.name)));
        }
    }
    Ok(file.schema)
}

pub fn load_schemas(path: &Path) -> Result<Vec<ExtractionSchema>, ConfigError> {
    parse_schemas(&read_to_string(path)?, &path.display().to_string())
}
