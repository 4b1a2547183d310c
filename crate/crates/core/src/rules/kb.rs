//! Domain knowledge bases: value categories, units, and identifier cue
//! phrases, each with surface forms matched on stemmed lowercase words.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::error::{delimited_rows, read_to_string, ConfigError};
use crate::text::{lower_words, stem};
use crate::transcript::Domain;

#[derive(Debug, Error)]
pub enum KbError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("surface form `{surface}` maps to both {first} and {second}")]
    Conflict { surface: String, first: String, second: String },
    #[error("empty surface form for {0}")]
    EmptySurface(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Entry {
    Category(String),
    Unit(String),
    Identifier(String),
}

impl Entry {
    fn describe(&self) -> String {
        match self {
            Entry::Category(c) => format!("category `{c}`"),
            Entry::Unit(u) => format!("unit `{u}`"),
            Entry::Identifier(i) => format!("identifier `{i}`"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnitEntry {
    pub surface_forms: BTreeSet<String>,
    pub compatible: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    pub domain: Option<Domain>,
    pub categories: BTreeMap<String, BTreeSet<String>>,
    pub units: BTreeMap<String, UnitEntry>,
    pub identifiers: BTreeMap<String, BTreeSet<String>>,
    index: HashMap<Vec<String>, Entry>,
    max_len: usize,
}

const STOPWORDS: &[&str] = &["of", "the", "a", "an", "those", "these", "that", "this", "in", "on", "for", "per", "your", "our", "my"];

pub fn content_words(text: &str) -> Vec<String> {
    lower_words(text).into_iter().filter(|w| !STOPWORDS.contains(&w.as_str())).map(|w| stem(&w)).collect()
}

fn key(surface: &str) -> Vec<String> {
    lower_words(surface).iter().map(|w| stem(w)).collect()
}

impl KnowledgeBase {
    pub fn new(domain: Option<Domain>) -> Self {
        KnowledgeBase { domain, ..Default::default() }
    }

    fn index_surface(&mut self, surface: &str, entry: Entry) -> Result<(), KbError> {
        let k = key(surface);
        if k.is_empty() {
            return Err(KbError::EmptySurface(entry.describe()));
        }
        if let Some(prev) = self.index.get(&k) {
            if *prev != entry {
                return Err(KbError::Conflict { surface: surface.to_string(), first: prev.describe(), second: entry.describe() });
            }
            return Ok(());
        }
        self.max_len = self.max_len.max(k.len());
        self.index.insert(k, entry);
        Ok(())
    }

    pub fn add_category(&mut self, category: &str, surface: &str) -> Result<(), KbError> {
        self.index_surface(surface, Entry::Category(category.to_string()))?;
        self.categories.entry(category.to_string()).or_default().insert(surface.to_lowercase());
        Ok(())
    }

    pub fn add_unit<'a>(
        &mut self,
        unit: &str,
        surface: &str,
        compatible: impl IntoIterator<Item = &'a str>,
    ) -> Result<(), KbError> {
        self.index_surface(surface, Entry::Unit(unit.to_string()))?;
        let e = self.units.entry(unit.to_string()).or_default();
        e.surface_forms.insert(surface.to_lowercase());
        e.compatible.extend(compatible.into_iter().map(str::to_string));
        Ok(())
    }

    pub fn add_identifier(&mut self, category: &str, surface: &str) -> Result<(), KbError> {
        self.index_surface(surface, Entry::Identifier(category.to_string()))?;
        self.identifiers.entry(category.to_string()).or_default().insert(surface.to_lowercase());
        Ok(())
    }

    /// Loads any of the three delimited files; absent paths are skipped.
    pub fn load(
        domain: Option<Domain>,
        categories: Option<&Path>,
        units: Option<&Path>,
        identifiers: Option<&Path>,
    ) -> Result<Self, KbError> {
        let mut kb = KnowledgeBase::new(domain);
        if let Some(p) = categories {
            kb.add_category_rows(&read_to_string(p)?, &p.display().to_string())?;
        }
        if let Some(p) = units {
            kb.add_unit_rows(&read_to_string(p)?, &p.display().to_string())?;
        }
        if let Some(p) = identifiers {
            kb.add_identifier_rows(&read_to_string(p)?, &p.display().to_string())?;
        }
        Ok(kb)
    }

    pub fn add_category_rows(&mut self, content: &str, source: &str) -> Result<(), KbError> {
        for (line, f) in delimited_rows(content, source)? {
            if f.len() != 2 || f[0].is_empty() || f[1].is_empty() {
                return Err(ConfigError::line(source, line, "expected `category, surface_form`").into());
            }
            self.add_category(&f[0], &f[1])?;
        }
        Ok(())
    }

    pub fn add_unit_rows(&mut self, content: &str, source: &str) -> Result<(), KbError> {
        for (line, f) in delimited_rows(content, source)? {
            if !(2..=3).contains(&f.len()) || f[0].is_empty() || f[1].is_empty() {
                return Err(ConfigError::line(source, line, "expected `unit, surface_form, compatible;categories`").into());
            }
            let compat: Vec<&str> = f.get(2).map(|c| c.split(';').map(str::trim).filter(|s| !s.is_empty()).collect()).unwrap_or_default();
            self.add_unit(&f[0], &f[1], compat)?;
        }
        Ok(())
    }

    pub fn add_identifier_rows(&mut self, content: &str, source: &str) -> Result<(), KbError> {
        for (line, f) in delimited_rows(content, source)? {
            if f.len() != 2 || f[0].is_empty() || f[1].is_empty() {
                return Err(ConfigError::line(source, line, "expected `identifier_category, surface_form`").into());
            }
            self.add_identifier(&f[0], &f[1])?;
        }
        Ok(())
    }

    /// Union of several knowledge bases; the first definition of a surface
    /// form wins.
    pub fn merged<'a>(kbs: impl IntoIterator<Item = &'a KnowledgeBase>) -> Self {
        let mut out = KnowledgeBase::new(None);
        for kb in kbs {
            for (c, forms) in &kb.categories {
                for s in forms {
                    let _ = out.add_category(c, s);
                }
            }
            for (u, e) in &kb.units {
                for s in &e.surface_forms {
                    let _ = out.add_unit(u, s, e.compatible.iter().map(String::as_str));
                }
            }
            for (i, forms) in &kb.identifiers {
                for s in forms {
                    let _ = out.add_identifier(i, s);
                }
            }
        }
        out
    }

    /// Longest surface form starting at `words[i]`, as (word count, entry).
    /// `words` must already be lowercased.
    pub fn longest_at(&self, words: &[String], i: usize) -> Option<(usize, &Entry)> {
        let max = self.max_len.min(words.len().saturating_sub(i));
        (1..=max).rev().find_map(|n| {
            let k: Vec<String> = words[i..i + n].iter().map(|w| stem(w)).collect();
            self.index.get(&k).map(|e| (n, e))
        })
    }

    pub fn category_of(&self, surface: &str) -> Option<&str> {
        match self.index.get(&key(surface)) {
            Some(Entry::Category(c)) => Some(c),
            _ => None,
        }
    }

    pub fn unit_of(&self, surface: &str) -> Option<&str> {
        match self.index.get(&key(surface)) {
            Some(Entry::Unit(u)) => Some(u),
            _ => None,
        }
    }

    /// Identifier category whose cue phrases share the most content words
    /// with `text`; ties go to the higher covered fraction, then the name.
    pub fn identifier_category(&self, text: &str) -> Option<&str> {
        let words: BTreeSet<String> = content_words(text).into_iter().collect();
        let mut best: Option<(usize, u64, &str)> = None;
        for (cat, forms) in &self.identifiers {
            for f in forms {
                let cue = content_words(f);
                if cue.is_empty() {
                    continue;
                }
                let hits = cue.iter().filter(|w| words.contains(*w)).count();
                if hits == 0 {
                    continue;
                }
                let frac = (hits as u64 * 1_000_000) / cue.len() as u64;
                let cand = (hits, frac, cat.as_str());
                let better = match best {
                    None => true,
                    Some(b) => (cand.0, cand.1) > (b.0, b.1) || ((cand.0, cand.1) == (b.0, b.1) && cand.2 < b.2),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        best.map(|b| b.2)
    }

    /// Identifier categories each unit name pairs with.
    pub fn unit_compatibility(&self) -> BTreeMap<String, BTreeSet<String>> {
        self.units.iter().map(|(u, e)| (u.clone(), e.compatible.clone())).collect()
    }
}
