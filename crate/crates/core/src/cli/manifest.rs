//! Run manifest (TOML). Relative paths resolve against the manifest's
//! directory.
//!
//! ```toml
//! [resources]
//! ontology = "ontology.csv"
//! rules = ["rules/common.yml"]
//! keywords = "keywords.csv"
//!
//! [[resources.kb]]
//! domain = "pork"
//! categories = "kb/pork_categories.csv"
//!
//! [[interview]]
//! id = "pork_01"
//! path = "transcripts/pork_01.jsonl"
//! domain = "pork"
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::eval::BootstrapUnit;
use crate::grounding::GroundingConfig;
use crate::transcript::Domain;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbPaths {
    pub domain: Option<Domain>,
    pub categories: Option<PathBuf>,
    pub units: Option<PathBuf>,
    pub identifiers: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourcePaths {
    pub ontology: PathBuf,
    pub remap: Option<PathBuf>,
    pub phrases: Option<PathBuf>,
    pub fillers: Option<PathBuf>,
    pub grades: Option<PathBuf>,
    pub markers: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    #[serde(default)]
    pub rules: Vec<PathBuf>,
    #[serde(default)]
    pub kb: Vec<KbPaths>,
    pub assembly: Option<PathBuf>,
    /// Directory of `<interview_id>.jsonl` annotation files; the built-in
    /// lexical annotator is used when absent.
    pub annotations: Option<PathBuf>,
    pub schemas: Option<PathBuf>,
    pub field_map: Option<PathBuf>,
    pub gold: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChatKind {
    Replay,
    Http,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChatSection {
    pub kind: ChatKind,
    pub endpoint: Option<String>,
    pub model: String,
    pub replay: Option<PathBuf>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_secs: u64,
    pub max_parallel_requests: usize,
}

impl Default for ChatSection {
    fn default() -> Self {
        ChatSection {
            kind: ChatKind::Replay,
            endpoint: None,
            model: "local".into(),
            replay: None,
            temperature: 0.0,
            max_tokens: 8192,
            timeout_secs: 120,
            max_parallel_requests: 4,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub resamples: usize,
    pub level: f64,
    pub unit: BootstrapUnit,
    pub overlap_threshold: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { resamples: 10_000, level: 95.0, unit: BootstrapUnit::Interview, overlap_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterviewEntry {
    pub id: String,
    pub path: PathBuf,
    pub domain: Option<Domain>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub resources: ResourcePaths,
    #[serde(default)]
    pub grounding: GroundingConfig,
    #[serde(default)]
    pub chat: ChatSection,
    #[serde(default)]
    pub evaluation: EvalSection,
    #[serde(default)]
    pub interview: Vec<InterviewEntry>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

fn resolve_opt(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(p) = p {
        resolve(base, p);
    }
}

impl Manifest {
    pub fn parse(content: &str, base: &Path) -> Result<Manifest, String> {
        let mut m: Manifest = toml::from_str(content).map_err(|e| e.to_string())?;
        let r = &mut m.resources;
        resolve(base, &mut r.ontology);
        for p in [
            &mut r.remap,
            &mut r.phrases,
            &mut r.fillers,
            &mut r.grades,
            &mut r.markers,
            &mut r.keywords,
            &mut r.assembly,
            &mut r.annotations,
            &mut r.schemas,
            &mut r.field_map,
            &mut r.gold,
        ] {
            resolve_opt(base, p);
        }
        r.rules.iter_mut().for_each(|p| resolve(base, p));
        for kb in &mut r.kb {
            for p in [&mut kb.categories, &mut kb.units, &mut kb.identifiers] {
                resolve_opt(base, p);
            }
        }
        resolve_opt(base, &mut m.chat.replay);
        m.interview.iter_mut().for_each(|i| resolve(base, &mut i.path));
        Ok(m)
    }
}
