//! Maps identifier-value pairs onto ontology nodes by mixing embedding
//! similarity with content-word overlap.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::IdentifierValuePair;
use crate::ontology::{Ontology, OntologyNode, ValueType};
use crate::record::{Backend, GroundedRecord, RecordValue};
use crate::rules::{Fragment, FragmentKind};
use crate::text::{lower_words, stem};

#[derive(Debug, Error)]
pub enum GroundingError {
    #[error("cannot embed empty text")]
    EmptyText,
    #[error("embedding dimension must be at least 16, got {0}")]
    Dimension(usize),
    #[error("embedder request failed: {0}")]
    External(String),
    #[error("invalid grounding config: {0}")]
    Config(String),
}

pub trait Embedder: Send + Sync {
    /// Unit-norm embedding of `text`.
    fn embed(&self, text: &str) -> Result<Vec<f64>, GroundingError>;
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, GroundingError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(GroundingError::EmptyText);
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Character trigrams of the lowercased text, hashed into `dim` buckets.
pub fn hashed_ngram_embed(text: &str, dim: usize) -> Result<Vec<f64>, GroundingError> {
    if dim < 16 {
        return Err(GroundingError::Dimension(dim));
    }
    let chars: Vec<char> = text.trim().to_lowercase().chars().collect();
    if chars.is_empty() {
        return Err(GroundingError::EmptyText);
    }
    let mut v = vec![0.0; dim];
    let grams: Vec<String> = if chars.len() < 3 {
        vec![chars.iter().collect()]
    } else {
        chars.windows(3).map(|w| w.iter().collect()).collect()
    };
    for g in grams {
        v[(fnv1a(g.as_bytes()) % dim as u64) as usize] += 1.0;
    }
    normalize(v)
}

#[derive(Debug, Clone)]
pub struct HashedNgramEmbedder {
    pub dim: usize,
}

impl Embedder for HashedNgramEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GroundingError> {
        hashed_ngram_embed(text, self.dim)
    }
}

/// Vector provider behind a local HTTP endpoint: POST `{"input": text}`,
/// reply `{"embedding": [..]}`.
pub struct ExternalEmbedder {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl ExternalEmbedder {
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, GroundingError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GroundingError::External(e.to_string()))?;
        Ok(ExternalEmbedder { endpoint: endpoint.to_string(), client })
    }
}

#[derive(Deserialize)]
struct EmbeddingReply {
    embedding: Vec<f64>,
}

impl Embedder for ExternalEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, GroundingError> {
        if text.trim().is_empty() {
            return Err(GroundingError::EmptyText);
        }
        let reply: EmbeddingReply = self
            .client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "input": text }))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| GroundingError::External(e.to_string()))?;
        normalize(reply.embedding)
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(0.0, 1.0)
}

const OVERLAP_STOPWORDS: &[&str] = &["of", "those", "the", "a", "an"];

fn overlap_words(s: &str) -> Vec<String> {
    lower_words(s).into_iter().filter(|w| !OVERLAP_STOPWORDS.contains(&w.as_str())).map(|w| stem(&w)).collect()
}

/// Shared content words (as a multiset) over the shorter side's count.
pub fn string_overlap(a: &str, b: &str) -> f64 {
    let wa = overlap_words(a);
    let wb = overlap_words(b);
    if wa.is_empty() || wb.is_empty() {
        return 0.0;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for w in &wb {
        *counts.entry(w).or_default() += 1;
    }
    let mut shared = 0;
    for w in &wa {
        if let Some(c) = counts.get_mut(w.as_str()).filter(|c| **c > 0) {
            *c -= 1;
            shared += 1;
        }
    }
    shared as f64 / wa.len().min(wb.len()) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EmbedderKind {
    HashedNgram { dim: usize },
    External { endpoint: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundingConfig {
    pub embed_weight: f64,
    pub accept_threshold: f64,
    pub embedder: EmbedderKind,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig { embed_weight: 0.5, accept_threshold: 0.5, embedder: EmbedderKind::HashedNgram { dim: 256 } }
    }
}

impl GroundingConfig {
    pub fn string_weight(&self) -> f64 {
        1.0 - self.embed_weight
    }

    pub fn validate(&self) -> Result<(), GroundingError> {
        if !(0.0..=1.0).contains(&self.embed_weight) {
            return Err(GroundingError::Config(format!("embed_weight {} outside [0, 1]", self.embed_weight)));
        }
        if !(0.0..=1.0).contains(&self.accept_threshold) {
            return Err(GroundingError::Config(format!("accept_threshold {} outside [0, 1]", self.accept_threshold)));
        }
        if let EmbedderKind::HashedNgram { dim } = self.embedder {
            if dim < 16 {
                return Err(GroundingError::Dimension(dim));
            }
        }
        Ok(())
    }

    pub fn build_embedder(&self) -> Result<Box<dyn Embedder>, GroundingError> {
        self.validate()?;
        Ok(match &self.embedder {
            EmbedderKind::HashedNgram { dim } => Box::new(HashedNgramEmbedder { dim: *dim }),
            EmbedderKind::External { endpoint } => Box::new(ExternalEmbedder::new(endpoint, Duration::from_secs(30))?),
        })
    }
}

/// Typed record value carried by a value fragment.
pub fn fragment_value(f: &Fragment) -> Option<RecordValue> {
    match f.kind {
        FragmentKind::QuantitativeValue | FragmentKind::CompoundValue => f.numeric_value.map(RecordValue::Number),
        FragmentKind::CategoricalValue => Some(RecordValue::Text(f.text.clone())),
        FragmentKind::BooleanValue => f.boolean_value().map(RecordValue::Bool),
        FragmentKind::Identifier => None,
    }
}

/// Hard gate applied before scoring: value type must match, and a node
/// listing expected units or values must list this value's.
pub fn compatible(node: &OntologyNode, value: &Fragment) -> bool {
    let Some(v) = fragment_value(value) else { return false };
    if v.value_type() != node.value_type {
        return false;
    }
    if node.expected_units.is_empty() {
        return true;
    }
    let has = |s: &str| node.expected_units.contains(&s.to_lowercase());
    let by_category = value.category.as_deref().is_some_and(has);
    match node.value_type {
        ValueType::Quantitative => value.unit.as_deref().is_some_and(has) || by_category,
        ValueType::Categorical => has(&value.text) || has(&stem(&value.text)) || by_category,
        ValueType::Boolean => true,
    }
}

struct NodeEntry {
    /// Name followed by aliases, each with its embedding.
    labels: Vec<(String, Vec<f64>)>,
}

pub struct Grounder {
    ontology: Ontology,
    cfg: GroundingConfig,
    embedder: Box<dyn Embedder>,
    entries: Vec<NodeEntry>,
}

/// Score of one node for a query, with the overlap of its best label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeScore {
    pub score: f64,
    pub overlap: f64,
}

impl Grounder {
    pub fn new(ontology: Ontology, cfg: GroundingConfig, embedder: Box<dyn Embedder>) -> Result<Self, GroundingError> {
        cfg.validate()?;
        let mut entries = Vec::with_capacity(ontology.len());
        for n in ontology.nodes() {
            let mut labels = Vec::new();
            for l in std::iter::once(&n.name).chain(&n.aliases) {
                labels.push((l.clone(), embedder.embed(l)?));
            }
            entries.push(NodeEntry { labels });
        }
        Ok(Grounder { ontology, cfg, embedder, entries })
    }

    pub fn with_default_embedder(ontology: Ontology, cfg: GroundingConfig) -> Result<Self, GroundingError> {
        let e = cfg.build_embedder()?;
        Grounder::new(ontology, cfg, e)
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn config(&self) -> &GroundingConfig {
        &self.cfg
    }

    /// Best-label score of every node for `text`, in ontology order.
    pub fn node_scores(&self, text: &str) -> Result<Vec<NodeScore>, GroundingError> {
        let q = self.embedder.embed(text)?;
        let norm_q = text.trim().to_lowercase();
        let we = self.cfg.embed_weight;
        Ok(self
            .entries
            .iter()
            .map(|e| {
                e.labels
                    .iter()
                    .map(|(label, vec)| {
                        let cos = if label.trim().to_lowercase() == norm_q { 1.0 } else { cosine(&q, vec) };
                        let ov = string_overlap(text, label);
                        let score = if cos == 1.0 && ov == 1.0 { 1.0 } else { (we * cos + (1.0 - we) * ov).min(1.0) };
                        NodeScore { score, overlap: ov }
                    })
                    .fold(NodeScore { score: 0.0, overlap: 0.0 }, |best, s| {
                        if (s.score, s.overlap) > (best.score, best.overlap) { s } else { best }
                    })
            })
            .collect())
    }

    /// Grounds a pair, or returns `None` when no compatible node reaches
    /// the threshold.
    pub fn ground(&self, p: &IdentifierValuePair) -> Result<Option<GroundedRecord>, GroundingError> {
        let scores = self.node_scores(&p.identifier.text)?;
        let best = self
            .ontology
            .nodes()
            .iter()
            .zip(&scores)
            .filter(|(n, s)| s.score >= self.cfg.accept_threshold && compatible(n, &p.value))
            .max_by(|(na, a), (nb, b)| {
                a.score
                    .total_cmp(&b.score)
                    .then(a.overlap.total_cmp(&b.overlap))
                    .then_with(|| nb.node_id.cmp(&na.node_id))
            });
        let Some((node, s)) = best else {
            log::debug!("no node for `{}` = `{}`", p.identifier.text, p.value.text);
            return Ok(None);
        };
        let value = fragment_value(&p.value).expect("gate admits only typed values");
        Ok(Some(GroundedRecord {
            grounding: node.name.clone(),
            grounding_id: node.node_id.clone(),
            unit: match value {
                RecordValue::Number(_) => p.value.unit.clone(),
                _ => None,
            },
            value,
            provenance: vec![p.identifier.span, p.value.span],
            block_turns: None,
            backend: Backend::Ns,
            score: Some(s.score),
        }))
    }

    /// Grounds every pair, dropping no-matches; output order follows input.
    pub fn ground_all(&self, pairs: &[IdentifierValuePair]) -> Result<Vec<GroundedRecord>, GroundingError> {
        let mut out = Vec::new();
        for p in pairs {
            out.extend(self.ground(p)?);
        }
        Ok(out)
    }
}
