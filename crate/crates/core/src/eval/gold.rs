//! Gold records: `interview_id,node_id,value,unit,variant_group,essential`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{delimited_rows, read_to_string, ConfigError};
use crate::ontology::Ontology;
use crate::record::RecordValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub interview_id: String,
    pub node_id: String,
    pub value: RecordValue,
    pub unit: Option<String>,
    pub variant_group: Option<String>,
    pub essential: bool,
}

impl GoldRecord {
    pub fn new(interview_id: &str, node_id: &str, value: RecordValue) -> Self {
        GoldRecord {
            interview_id: interview_id.into(),
            node_id: node_id.into(),
            value,
            unit: None,
            variant_group: None,
            essential: true,
        }
    }

    pub fn with_unit(mut self, unit: &str) -> Self {
        self.unit = Some(unit.to_lowercase());
        self
    }

    pub fn in_group(mut self, group: &str) -> Self {
        self.variant_group = Some(group.into());
        self
    }

    pub fn non_essential(mut self) -> Self {
        self.essential = false;
        self
    }

    /// Identity of a gold record: two rows with the same key are duplicates.
    pub fn key(&self) -> (String, String, String, String) {
        (
            self.interview_id.clone(),
            self.node_id.clone(),
            self.value.canonical(),
            self.unit.clone().unwrap_or_default(),
        )
    }
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.trim().to_lowercase().as_str() {
        "" | "true" | "yes" | "1" | "y" => Some(true),
        "false" | "no" | "0" | "n" => Some(false),
        _ => None,
    }
}

/// Checks record-set invariants for one or more interviews: no duplicate
/// records, and variant-group members share node and essentiality.
pub fn validate_gold(records: &[GoldRecord]) -> Result<(), String> {
    let mut keys = BTreeSet::new();
    let mut groups: BTreeMap<(&str, &str), (&str, bool)> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if !keys.insert(r.key()) {
            return Err(format!("record {} duplicates an earlier gold record ({} {} = {})", i + 1, r.interview_id, r.node_id, r.value));
        }
        if let Some(g) = &r.variant_group {
            let first = groups.entry((&r.interview_id, g)).or_insert((&r.node_id, r.essential));
            if first.0 != r.node_id {
                return Err(format!("variant group `{g}` mixes nodes `{}` and `{}`", first.0, r.node_id));
            }
            if first.1 != r.essential {
                return Err(format!("variant group `{g}` mixes essential and non-essential members"));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldSet {
    by_interview: BTreeMap<String, Vec<GoldRecord>>,
}

impl GoldSet {
    pub fn new(records: Vec<GoldRecord>) -> Result<Self, String> {
        validate_gold(&records)?;
        let mut by_interview: BTreeMap<String, Vec<GoldRecord>> = BTreeMap::new();
        for r in records {
            by_interview.entry(r.interview_id.clone()).or_default().push(r);
        }
        Ok(GoldSet { by_interview })
    }

    /// Values are typed by the ontology node of each row.
    pub fn parse(content: &str, source: &str, o: &Ontology) -> Result<Self, ConfigError> {
        let mut records = Vec::new();
        for (i, (line, f)) in delimited_rows(content, source)?.into_iter().enumerate() {
            if i == 0 && f.first().is_some_and(|h| h == "interview_id") {
                continue;
            }
            if !(3..=6).contains(&f.len()) {
                return Err(ConfigError::line(source, line, "expected `interview_id,node_id,value,unit,variant_group,essential`"));
            }
            let node = o
                .get(&f[1])
                .ok_or_else(|| ConfigError::line(source, line, format!("unknown node `{}`", f[1])))?;
            let value = RecordValue::parse_typed(&f[2], node.value_type)
                .ok_or_else(|| ConfigError::line(source, line, format!("`{}` is not a {} value", f[2], node.value_type)))?;
            let opt = |k: usize| f.get(k).filter(|s| !s.is_empty()).cloned();
            let essential = parse_flag(f.get(5).map_or("", String::as_str))
                .ok_or_else(|| ConfigError::line(source, line, format!("bad essential flag `{}`", f[5])))?;
            records.push(GoldRecord {
                interview_id: f[0].clone(),
                node_id: f[1].clone(),
                value,
                unit: opt(3).map(|u| u.to_lowercase()),
                variant_group: opt(4),
                essential,
            });
        }
        GoldSet::new(records).map_err(|e| ConfigError::invalid(source, e))
    }

    pub fn load(path: &Path, o: &Ontology) -> Result<Self, ConfigError> {
        GoldSet::parse(&read_to_string(path)?, &path.display().to_string(), o)
    }

    pub fn for_interview(&self, id: &str) -> &[GoldRecord] {
        self.by_interview.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn interviews(&self) -> impl Iterator<Item = &str> {
        self.by_interview.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_interview.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_interview.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onto() -> Ontology {
        Ontology::parse("crop, crop grown, categorical,\nbarn_capacity, barn capacity, quantitative, head\n", "o").unwrap()
    }

    #[test]
    fn parses_typed_rows() {
        let g = GoldSet::parse(
            "interview_id,node_id,value,unit,variant_group,essential\nc1,crop,wheat,,g1,true\nc1,crop,winter wheat,,g1,true\nc1,barn_capacity,\"1,200\",Head,,no\n",
            "gold",
            &onto(),
        )
        .unwrap();
        let rs = g.for_interview("c1");
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[2].value, RecordValue::Number(1200.0));
        assert_eq!(rs[2].unit.as_deref(), Some("head"));
        assert!(!rs[2].essential);
        assert!(g.for_interview("zz").is_empty());
    }

    #[test]
    fn rejects_bad_rows() {
        let o = onto();
        assert!(GoldSet::parse("c1,crop,wheat\nc1,crop,Wheat\n", "g", &o).is_err());
        assert!(GoldSet::parse("c1,barn_capacity,lots\n", "g", &o).is_err());
        assert!(GoldSet::parse("c1,nope,1\n", "g", &o).is_err());
        assert!(GoldSet::parse("c1,crop,wheat,,g\nc1,barn_capacity,3,,g\n", "g", &o).is_err());
    }
}
