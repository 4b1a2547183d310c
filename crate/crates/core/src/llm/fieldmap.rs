//! Static mapping from schema fields to ontology nodes.

use std::collections::BTreeMap;
use std::path::Path;

use super::schema::{ExtractionSchema, FieldType};
use super::verify::ValidatedRecord;
use crate::error::{delimited_rows, read_to_string, ConfigError};
use crate::ontology::{Ontology, ValueType};
use crate::record::{Backend, GroundedRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMapRow {
    pub schema: String,
    pub field: String,
    pub node_id: String,
    pub unit: Option<String>,
    pub line: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FieldMap {
    source: String,
    rows: BTreeMap<(String, String), FieldMapRow>,
}

pub fn value_type_of(ty: FieldType) -> ValueType {
    match ty {
        FieldType::Integer | FieldType::Number => ValueType::Quantitative,
        FieldType::Boolean => ValueType::Boolean,
        FieldType::String | FieldType::StringList => ValueType::Categorical,
    }
}

impl FieldMap {
    /// Parses `schema,field,node_id,unit` rows; a header row with those
    /// names is skipped.
    pub fn parse(content: &str, source: &str) -> Result<Self, ConfigError> {
        let mut rows = BTreeMap::new();
        for (i, (line, f)) in delimited_rows(content, source)?.into_iter().enumerate() {
            if i == 0 && f.first().is_some_and(|h| h.eq_ignore_ascii_case("schema")) {
                continue;
            }
            if !(3..=4).contains(&f.len()) || f[..3].iter().any(String::is_empty) {
                return Err(ConfigError::line(source, line, "expected `schema,field,node_id,unit`"));
            }
            let unit = f.get(3).filter(|u| !u.is_empty()).map(|u| u.to_lowercase());
            let row = FieldMapRow { schema: f[0].clone(), field: f[1].clone(), node_id: f[2].clone(), unit, line };
            if let Some(prev) = rows.insert((f[0].clone(), f[1].clone()), row) {
                return Err(ConfigError::line(
                    source,
                    line,
                    format!("{}.{} already mapped on line {}", prev.schema, prev.field, prev.line),
                ));
            }
        }
        Ok(FieldMap { source: source.to_string(), rows })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        FieldMap::parse(&read_to_string(path)?, &path.display().to_string())
    }

    pub fn get(&self, schema: &str, field: &str) -> Option<&FieldMapRow> {
        self.rows.get(&(schema.to_string(), field.to_string()))
    }

    pub fn rows(&self) -> impl Iterator<Item = &FieldMapRow> {
        self.rows.values()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Every problem against the ontology and schemas, one message each.
    pub fn check(&self, o: &Ontology, schemas: &[ExtractionSchema]) -> Vec<String> {
        let mut out = Vec::new();
        for r in self.rows.values() {
            let at = format!("{}:{}", self.source, r.line);
            let Some(node) = o.get(&r.node_id) else {
                out.push(format!("{at}: row {}.{} maps to unknown node `{}`", r.schema, r.field, r.node_id));
                continue;
            };
            let Some(schema) = schemas.iter().find(|s| s.name == r.schema) else {
                out.push(format!("{at}: unknown schema `{}`", r.schema));
                continue;
            };
            let Some(field) = schema.field(&r.field) else {
                out.push(format!("{at}: schema `{}` has no field `{}`", r.schema, r.field));
                continue;
            };
            let vt = value_type_of(field.field_type);
            if vt != node.value_type {
                out.push(format!(
                    "{at}: {}.{} is {} but node `{}` is {}",
                    r.schema, r.field, field.field_type, r.node_id, node.value_type
                ));
            }
        }
        out
    }
}

/// Turns validated records into grounded records via the field map. Records
/// without a row, or whose value type disagrees with the node, are dropped.
pub fn map_fields(records: &[ValidatedRecord], fm: &FieldMap, o: &Ontology) -> Vec<GroundedRecord> {
    let mut out = Vec::new();
    for r in records {
        let Some(row) = fm.get(&r.schema_name, &r.field_name) else {
            log::info!("unmapped field {}.{} dropped", r.schema_name, r.field_name);
            continue;
        };
        let Some(node) = o.get(&row.node_id) else {
            log::warn!("{}.{} maps to missing node `{}`", r.schema_name, r.field_name, row.node_id);
            continue;
        };
        if r.value.value_type() != node.value_type {
            log::warn!("{}.{}: {} value does not fit {} node `{}`", r.schema_name, r.field_name, r.value.value_type(), node.value_type, node.node_id);
            continue;
        }
        out.push(GroundedRecord {
            grounding: node.name.clone(),
            grounding_id: node.node_id.clone(),
            value: r.value.clone(),
            unit: row.unit.clone(),
            provenance: Vec::new(),
            block_turns: r.block.as_ref().map(|b| (b.turn_range.start, b.turn_range.end)),
            backend: Backend::Llm,
            score: None,
        });
    }
    out
}
