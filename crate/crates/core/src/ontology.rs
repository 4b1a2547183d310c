//! The target ontology: nodes with a value type, expected units or
//! categorical values, and aliases.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{delimited_rows, read_to_string, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Quantitative,
    Categorical,
    Boolean,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Quantitative => "quantitative",
            ValueType::Categorical => "categorical",
            ValueType::Boolean => "boolean",
        })
    }
}

impl FromStr for ValueType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "quantitative" => Ok(ValueType::Quantitative),
            "categorical" => Ok(ValueType::Categorical),
            "boolean" => Ok(ValueType::Boolean),
            other => Err(format!("unknown value type `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntologyNode {
    pub node_id: String,
    pub name: String,
    pub aliases: Vec<String>,
    pub value_type: ValueType,
    /// Units (quantitative nodes) or accepted categories/values; lowercase.
    pub expected_units: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ontology {
    nodes: Vec<OntologyNode>,
    by_id: BTreeMap<String, usize>,
}

impl Ontology {
    pub fn new(nodes: Vec<OntologyNode>) -> Result<Self, ConfigError> {
        let mut by_id = BTreeMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n.node_id.trim().is_empty() || n.name.trim().is_empty() {
                return Err(ConfigError::invalid("ontology", format!("node {} has an empty id or name", i + 1)));
            }
            if by_id.insert(n.node_id.clone(), i).is_some() {
                return Err(ConfigError::invalid("ontology", format!("duplicate node id `{}`", n.node_id)));
            }
        }
        Ok(Ontology { nodes, by_id })
    }

    /// Parses `node_id, name, value_type, expected_units(;), aliases(;)`.
    pub fn parse(content: &str, source: &str) -> Result<Self, ConfigError> {
        let split = |s: Option<&String>| -> Vec<String> {
            s.map(|s| s.split(';').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()).unwrap_or_default()
        };
        let mut nodes = Vec::new();
        let mut seen = BTreeSet::new();
        for (line, f) in delimited_rows(content, source)? {
            if !(3..=5).contains(&f.len()) {
                return Err(ConfigError::line(source, line, "expected `node_id, name, value_type, expected_units, aliases`"));
            }
            let value_type = f[2].parse().map_err(|e: String| ConfigError::line(source, line, e))?;
            if f[0].is_empty() || f[1].is_empty() {
                return Err(ConfigError::line(source, line, "empty node id or name"));
            }
            if !seen.insert(f[0].clone()) {
                return Err(ConfigError::line(source, line, format!("duplicate node id `{}`", f[0])));
            }
            nodes.push(OntologyNode {
                node_id: f[0].clone(),
                name: f[1].clone(),
                value_type,
                expected_units: split(f.get(3)).into_iter().map(|u| u.to_lowercase()).collect(),
                aliases: split(f.get(4)),
            });
        }
        Ontology::new(nodes)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Ontology::parse(&read_to_string(path)?, &path.display().to_string())
    }

    pub fn nodes(&self) -> &[OntologyNode] {
        &self.nodes
    }

    pub fn get(&self, node_id: &str) -> Option<&OntologyNode> {
        self.by_id.get(node_id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, node_id: &str) -> bool {
        self.by_id.contains_key(node_id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.node_id.as_str())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
