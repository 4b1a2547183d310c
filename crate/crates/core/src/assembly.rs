//! Links value fragments to identifier fragments across speaker turns.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{plain_lines, read_to_string, ConfigError};
use crate::rules::{Fragment, FragmentKind};

pub const DEFAULT_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssemblyConfig {
    pub default_window: usize,
    pub per_identifier_window: BTreeMap<String, usize>,
    pub unitless_allowlist: BTreeSet<String>,
    /// identifier category -> unit or value-category names it accepts
    pub compatibility: BTreeMap<String, BTreeSet<String>>,
}

impl Default for AssemblyConfig {
    fn default() -> Self {
        AssemblyConfig {
            default_window: DEFAULT_WINDOW,
            per_identifier_window: BTreeMap::new(),
            unitless_allowlist: BTreeSet::new(),
            compatibility: BTreeMap::new(),
        }
    }
}

impl AssemblyConfig {
    /// Parses `key: value` lines:
    ///
    /// ```text
    /// default_window: 3
    /// window: barn_capacity 4
    /// unitless_allowlist: employees, farm_count
    /// compatible: barn_capacity head
    /// ```
    pub fn parse(content: &str, source: &str) -> Result<Self, ConfigError> {
        let mut cfg = AssemblyConfig::default();
        let window = |s: &str, line: usize| -> Result<usize, ConfigError> {
            match s.trim().parse::<usize>() {
                Ok(w) if w >= 1 => Ok(w),
                _ => Err(ConfigError::line(source, line, format!("window must be an integer >= 1, found `{}`", s.trim()))),
            }
        };
        for (line, l) in plain_lines(content) {
            let (key, value) = l
                .split_once(':')
                .ok_or_else(|| ConfigError::line(source, line, format!("expected `key: value`, found `{l}`")))?;
            let value = value.trim();
            match key.trim() {
                "default_window" => cfg.default_window = window(value, line)?,
                "window" => {
                    let (cat, w) = value
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| ConfigError::line(source, line, "expected `window: <category> <turns>`"))?;
                    cfg.per_identifier_window.insert(cat.to_string(), window(w, line)?);
                }
                "unitless_allowlist" => {
                    cfg.unitless_allowlist.extend(value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string));
                }
                "compatible" => {
                    let parts: Vec<&str> = value.split_whitespace().collect();
                    if parts.len() != 2 {
                        return Err(ConfigError::line(source, line, "expected `compatible: <identifier_category> <unit_or_category>`"));
                    }
                    cfg.compatibility.entry(parts[0].to_string()).or_default().insert(parts[1].to_string());
                }
                other => return Err(ConfigError::line(source, line, format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        AssemblyConfig::parse(&read_to_string(path)?, &path.display().to_string())
    }

    /// Problems with categories unknown to the ontology.
    pub fn check_categories<'a>(&self, known: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        let known: BTreeSet<&str> = known.into_iter().collect();
        let mut out = Vec::new();
        for c in &self.unitless_allowlist {
            if !known.contains(c.as_str()) {
                out.push(format!("unitless_allowlist names unknown category `{c}`"));
            }
        }
        for c in self.per_identifier_window.keys() {
            if !known.contains(c.as_str()) {
                out.push(format!("window names unknown category `{c}`"));
            }
        }
        for c in self.compatibility.keys() {
            if !known.contains(c.as_str()) {
                out.push(format!("compatible names unknown category `{c}`"));
            }
        }
        out
    }

    /// Adds unit pairings declared in a knowledge base.
    pub fn with_unit_pairings(mut self, pairs: &BTreeMap<String, BTreeSet<String>>) -> Self {
        for (unit, ids) in pairs {
            for id in ids {
                self.compatibility.entry(id.clone()).or_default().insert(unit.clone());
            }
        }
        self
    }

    pub fn window_for(&self, category: &str) -> usize {
        self.per_identifier_window.get(category).copied().unwrap_or(self.default_window)
    }

    fn accepts(&self, category: &str) -> Option<&BTreeSet<String>> {
        self.compatibility.get(category)
    }

    /// Whether an identifier of `category` may take `value`.
    pub fn compatible(&self, category: &str, value: &Fragment) -> bool {
        let keys = value_keys(value);
        if keys.is_empty() {
            return value.kind == FragmentKind::QuantitativeValue && self.unitless_allowlist.contains(category);
        }
        self.accepts(category).is_some_and(|set| keys.iter().any(|k| set.contains(*k)))
    }

    /// Size of a category's compatibility set; smaller is more specific.
    pub fn specificity(&self, category: &str) -> usize {
        self.accepts(category).map_or(0, BTreeSet::len)
    }
}

/// Names a value offers for compatibility checks: its unit, then category.
fn value_keys(v: &Fragment) -> Vec<&str> {
    match v.kind {
        FragmentKind::BooleanValue => vec!["boolean"],
        _ => v.unit.iter().chain(v.category.iter()).map(String::as_str).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Windowed,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifierValuePair {
    pub identifier: Fragment,
    pub value: Fragment,
    pub link_kind: LinkKind,
    pub distance: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembly {
    pub pairs: Vec<IdentifierValuePair>,
    pub residual: Vec<Fragment>,
}

/// Drops identifiers overlapping a longer (or equally long, earlier)
/// identifier of any label, so each phrase is one candidate.
pub fn merge_identifiers(fragments: &[Fragment]) -> Vec<Fragment> {
    let mut ids: Vec<usize> = (0..fragments.len()).filter(|&i| fragments[i].kind == FragmentKind::Identifier).collect();
    ids.sort_by_key(|&i| {
        let f = &fragments[i];
        (f.span.turn, Reverse(f.span.len()), f.span.start, f.category.is_none(), f.label.clone())
    });
    let mut kept: BTreeSet<usize> = BTreeSet::new();
    for i in ids {
        if !kept.iter().any(|&k| fragments[k].span.overlaps(&fragments[i].span)) {
            kept.insert(i);
        }
    }
    fragments
        .iter()
        .enumerate()
        .filter(|(i, f)| f.kind != FragmentKind::Identifier || kept.contains(i))
        .map(|(_, f)| f.clone())
        .collect()
}

/// Links each value to the nearest compatible identifier at or before it,
/// within that identifier's window. Ties on distance go to the identifier
/// with the smaller compatibility set, then the later one.
pub fn assemble(fragments: &[Fragment], cfg: &AssemblyConfig) -> Assembly {
    let ids: Vec<(&Fragment, &str)> = fragments
        .iter()
        .filter(|f| f.kind == FragmentKind::Identifier)
        .filter_map(|f| f.category.as_deref().map(|c| (f, c)))
        .collect();
    let mut out = Assembly::default();
    for v in fragments.iter().filter(|f| f.kind.is_value()) {
        let best = ids
            .iter()
            .filter(|(id, _)| {
                id.span.turn < v.span.turn || (id.span.turn == v.span.turn && id.span.end <= v.span.start)
            })
            .filter_map(|&(id, cat)| {
                let d = v.span.turn - id.span.turn;
                (d <= cfg.window_for(cat) && cfg.compatible(cat, v)).then_some((d, cfg.specificity(cat), Reverse(id.span.start), cat, id))
            })
            .min_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
        match best {
            Some((d, _, _, _, id)) => out.pairs.push(IdentifierValuePair {
                identifier: id.clone(),
                value: v.clone(),
                link_kind: LinkKind::Windowed,
                distance: d,
            }),
            None => out.residual.push(v.clone()),
        }
    }
    out
}

/// Assigns residual values whose category (or, lacking one, unit) is
/// accepted by exactly one identifier category.
pub fn fallback_assign(residual: &[Fragment], cfg: &AssemblyConfig) -> Vec<IdentifierValuePair> {
    let mut out = Vec::new();
    for v in residual {
        let Some(key) = (match v.kind {
            FragmentKind::BooleanValue => None,
            _ => v.category.as_deref().or(v.unit.as_deref()),
        }) else {
            continue;
        };
        let candidates: Vec<&String> = cfg.compatibility.iter().filter(|(_, set)| set.contains(key)).map(|(c, _)| c).collect();
        if let [only] = candidates.as_slice() {
            out.push(IdentifierValuePair {
                identifier: synthesized_identifier(only, v),
                value: v.clone(),
                link_kind: LinkKind::Fallback,
                distance: 0,
            });
        }
    }
    out
}

fn synthesized_identifier(category: &str, v: &Fragment) -> Fragment {
    Fragment {
        label: "Synthesized".into(),
        kind: FragmentKind::Identifier,
        text: category.replace('_', " "),
        span: v.span,
        fields: BTreeMap::new(),
        unit: None,
        numeric_value: None,
        category: Some(category.to_string()),
        source: "fallback".into(),
    }
}

/// Windowed pass followed by the fallback pass over its residue.
pub fn assemble_with_fallback(fragments: &[Fragment], cfg: &AssemblyConfig) -> Vec<IdentifierValuePair> {
    let merged = merge_identifiers(fragments);
    let a = assemble(&merged, cfg);
    let mut pairs = a.pairs;
    pairs.extend(fallback_assign(&a.residual, cfg));
    pairs.sort_by(|x, y| (x.value.span, &x.value.label).cmp(&(y.value.span, &y.value.label)));
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::Span;

    pub(crate) fn ident(turn: usize, text: &str, cat: &str) -> Fragment {
        Fragment {
            label: "GenericEntity".into(),
            kind: FragmentKind::Identifier,
            text: text.into(),
            span: Span { turn, start: 0, end: text.len() },
            fields: BTreeMap::new(),
            unit: None,
            numeric_value: None,
            category: Some(cat.into()),
            source: "test".into(),
        }
    }

    pub(crate) fn value(turn: usize, start: usize, n: f64, unit: Option<&str>, cat: Option<&str>) -> Fragment {
        Fragment {
            label: "Quantity".into(),
            kind: if cat.is_some() { FragmentKind::CompoundValue } else { FragmentKind::QuantitativeValue },
            text: format!("{n}"),
            span: Span { turn, start, end: start + 4 },
            fields: BTreeMap::new(),
            unit: unit.map(str::to_string),
            numeric_value: Some(n),
            category: cat.map(str::to_string),
            source: "test".into(),
        }
    }

    fn cfg() -> AssemblyConfig {
        AssemblyConfig::parse(
            "default_window: 3\nunitless_allowlist: employees\ncompatible: barn_capacity barn_type\ncompatible: barn_capacity head\ncompatible: manure_storage storage_type\ncompatible: protein_percent percent\ncompatible: butterfat_percent percent\n",
            "cfg",
        )
        .unwrap()
    }

    #[test]
    fn nursery_links_three_turns_later() {
        let frags = vec![ident(0, "capacity of those barns", "barn_capacity"), value(3, 5, 1200.0, Some("nursery"), Some("barn_type"))];
        let a = assemble(&frags, &cfg());
        assert_eq!(a.pairs.len(), 1);
        assert_eq!(a.pairs[0].distance, 3);
        assert_eq!(a.pairs[0].link_kind, LinkKind::Windowed);
        let mut narrow = cfg();
        narrow.default_window = 2;
        assert!(assemble(&frags, &narrow).pairs.is_empty());
    }

    #[test]
    fn nursery_does_not_link_to_manure_storage() {
        let frags = vec![ident(2, "manure storage", "manure_storage"), value(3, 0, 1200.0, Some("nursery"), Some("barn_type"))];
        let a = assemble(&frags, &cfg());
        assert!(a.pairs.is_empty());
        assert_eq!(a.residual.len(), 1);
    }

    #[test]
    fn bare_numbers_need_the_allowlist() {
        let frags = vec![ident(0, "employees", "employees"), value(1, 0, 3.0, None, None)];
        assert_eq!(assemble(&frags, &cfg()).pairs.len(), 1);
        let frags = vec![ident(0, "barn capacity", "barn_capacity"), value(1, 0, 3.0, None, None)];
        assert!(assemble(&frags, &cfg()).pairs.is_empty());
    }

    #[test]
    fn protein_and_butterfat_without_units_stay_unlinked() {
        let frags = vec![
            ident(0, "protein", "protein_percent"),
            ident(0, "butterfat", "butterfat_percent"),
            value(1, 0, 4.0, None, None),
            value(1, 6, 3.0, None, None),
        ];
        let a = assemble(&frags, &cfg());
        assert!(a.pairs.is_empty());
        assert!(fallback_assign(&a.residual, &cfg()).is_empty());
    }

    #[test]
    fn fallback_requires_a_unique_identifier() {
        let farrowing = value(0, 0, 10.0, Some("farrowing"), Some("barn_type"));
        let pairs = fallback_assign(std::slice::from_ref(&farrowing), &cfg());
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].identifier.text, "barn capacity");
        assert_eq!(pairs[0].link_kind, LinkKind::Fallback);
        assert!(fallback_assign(&[], &cfg()).is_empty());

        // hand-built map: "barn_type" is accepted by two identifier categories
        let ambiguous = AssemblyConfig::parse(
            "compatible: barn_capacity barn_type\ncompatible: barn_count barn_type\ncompatible: manure_storage storage_type\n",
            "amb",
        )
        .unwrap();
        assert!(fallback_assign(&[farrowing], &ambiguous).is_empty());
    }

    #[test]
    fn identifiers_link_many_values() {
        let frags = vec![
            ident(0, "capacity of those barns", "barn_capacity"),
            value(1, 0, 4300.0, Some("farrowing"), Some("barn_type")),
            value(1, 20, 1200.0, Some("nursery"), Some("barn_type")),
        ];
        let a = assemble(&frags, &cfg());
        assert_eq!(a.pairs.len(), 2);
    }

    #[test]
    fn config_errors() {
        assert!(AssemblyConfig::parse("default_window: 0\n", "c").is_err());
        assert!(AssemblyConfig::parse("window: barn_capacity\n", "c").is_err());
        assert!(AssemblyConfig::parse("colour: red\n", "c").is_err());
        let c = cfg();
        assert_eq!(c.check_categories(["barn_capacity", "manure_storage", "protein_percent", "butterfat_percent"]), ["unitless_allowlist names unknown category `employees`"]);
    }
}
