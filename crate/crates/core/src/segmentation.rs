//! Coarse domain segmentation from interviewer section markers and
//! fine-grained topic blocks from a curated keyword map.

use std::collections::HashSet;
use std::ops::Range;
use std::path::Path;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

use crate::error::{delimited_rows, plain_lines, read_to_string, ConfigError};
use crate::text::at_word_boundary;
use crate::transcript::{Domain, Transcript};

pub const PREAMBLE: &str = "preamble";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainSegment {
    pub domain: Domain,
    pub turn_range: Range<usize>,
    pub marker_turn: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicBlock {
    pub topic_label: String,
    pub turn_range: Range<usize>,
    pub trigger_keyword: Option<String>,
}

/// A section-marker template such as `section {*} is about {domain}`.
///
/// `{domain}` captures the domain word; `{*}` matches any single word. Other
/// text matches literally, case-insensitively, with flexible whitespace.
#[derive(Debug, Clone)]
pub struct MarkerTemplate {
    source: String,
    regex: Regex,
}

impl MarkerTemplate {
    pub fn new(template: &str) -> Result<Self, ConfigError> {
        let slots = template.matches("{domain}").count();
        if slots != 1 {
            return Err(ConfigError::invalid(
                "marker template",
                format!("`{template}` must contain exactly one {{domain}} slot, found {slots}"),
            ));
        }
        let mut pattern = String::from(r"\b");
        for (i, word) in template.split_whitespace().enumerate() {
            if i > 0 {
                pattern.push_str(r"\s+");
            }
            pattern.push_str(&match word {
                "{domain}" => r"(?P<domain>[\p{L}]+)".to_string(),
                "{*}" => r"[\p{L}\p{N}]+".to_string(),
                w => regex::escape(w),
            });
        }
        pattern.push_str(r"\b");
        let regex = RegexBuilder::new(&pattern)
            .case_insensitive(true)
            .build()
            .map_err(|e| ConfigError::invalid("marker template", e.to_string()))?;
        Ok(MarkerTemplate { source: template.to_string(), regex })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Domain named by the first match in `text`, if the template matches.
    /// A match whose slot word is not a known domain yields `Unknown`.
    pub fn match_domain(&self, text: &str) -> Option<Domain> {
        let caps = self.regex.captures(text)?;
        Some(Domain::from_word(&caps["domain"]).unwrap_or(Domain::Unknown))
    }

    pub fn load_all(path: &Path) -> Result<Vec<Self>, ConfigError> {
        let content = read_to_string(path)?;
        plain_lines(&content)
            .into_iter()
            .map(|(line, l)| {
                MarkerTemplate::new(&l).map_err(|e| ConfigError::line(path.display().to_string(), line, e.to_string()))
            })
            .collect()
    }
}

pub fn default_markers() -> Vec<MarkerTemplate> {
    vec![MarkerTemplate::new("section {*} is about {domain}").expect("default marker")]
}

/// Starts a new segment at every turn matching a marker. Turns before the
/// first marker form an `unknown` segment; unknown segments take the
/// transcript's domain hint when it has one.
pub fn segment_by_markers(t: &Transcript, markers: &[MarkerTemplate]) -> Vec<DomainSegment> {
    let n = t.turns.len();
    let mut starts: Vec<(usize, Domain)> = Vec::new();
    for (i, turn) in t.turns.iter().enumerate() {
        if let Some(d) = markers.iter().find_map(|m| m.match_domain(&turn.text)) {
            starts.push((i, d));
        }
    }
    let backfill = |d: Domain| match (d, t.domain_hint) {
        (Domain::Unknown, Some(h)) => h,
        (d, _) => d,
    };
    let mut segments = Vec::with_capacity(starts.len() + 1);
    let first = starts.first().map_or(n, |s| s.0);
    if first > 0 || n == 0 {
        segments.push(DomainSegment { domain: backfill(Domain::Unknown), turn_range: 0..first, marker_turn: None });
    }
    for (k, &(start, domain)) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(n, |s| s.0);
        segments.push(DomainSegment { domain: backfill(domain), turn_range: start..end, marker_turn: Some(start) });
    }
    segments
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordEntry {
    pub keyword: String,
    pub topic_label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeywordMap {
    entries: Vec<KeywordEntry>,
}

impl KeywordMap {
    pub fn new(entries: Vec<KeywordEntry>) -> Result<Self, ConfigError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if e.keyword.trim().is_empty() {
                return Err(ConfigError::invalid("keyword map", "empty keyword"));
            }
            if e.topic_label.trim().is_empty() {
                return Err(ConfigError::invalid("keyword map", format!("keyword `{}` has an empty topic label", e.keyword)));
            }
            if !seen.insert(e.keyword.to_lowercase()) {
                return Err(ConfigError::invalid("keyword map", format!("duplicate keyword `{}`", e.keyword)));
            }
        }
        let entries = entries
            .into_iter()
            .map(|e| KeywordEntry { keyword: e.keyword.trim().to_lowercase(), topic_label: e.topic_label.trim().to_string() })
            .collect();
        Ok(KeywordMap { entries })
    }

    pub fn from_pairs<I, K, L>(pairs: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, L)>,
        K: Into<String>,
        L: Into<String>,
    {
        Self::new(pairs.into_iter().map(|(k, l)| KeywordEntry { keyword: k.into(), topic_label: l.into() }).collect())
    }

    pub fn entries(&self) -> &[KeywordEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.topic_label.as_str())
    }

    /// Rows are `keyword, topic_label`.
    pub fn parse(content: &str, source_name: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (line, fields) in delimited_rows(content, source_name)? {
            if fields.len() != 2 {
                return Err(ConfigError::line(source_name, line, "expected `keyword, topic_label`"));
            }
            entries.push(KeywordEntry { keyword: fields[0].clone(), topic_label: fields[1].clone() });
        }
        KeywordMap::new(entries).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::invalid(source_name, message),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&read_to_string(path)?, &path.display().to_string())
    }

    /// The leftmost keyword occurring at word boundaries in `text`; at the same
    /// position the longer keyword wins, then map order.
    pub fn first_trigger(&self, text: &str) -> Option<&KeywordEntry> {
        let lower = text.to_lowercase();
        // lowercasing can change byte lengths outside ASCII; fall back to the
        // original text for boundary checks only when lengths agree
        let hay = if lower.len() == text.len() { lower.as_str() } else { text };
        let mut best: Option<(usize, usize, usize)> = None;
        for (idx, e) in self.entries.iter().enumerate() {
            let mut from = 0;
            while let Some(pos) = hay[from..].find(e.keyword.as_str()).map(|p| p + from) {
                let end = pos + e.keyword.len();
                if at_word_boundary(hay, pos, end) {
                    let cand = (pos, usize::MAX - e.keyword.len(), idx);
                    if best.is_none_or(|b| cand < b) {
                        best = Some(cand);
                    }
                    break;
                }
                from = pos + hay[pos..].chars().next().map_or(1, char::len_utf8);
            }
        }
        best.map(|(_, _, idx)| &self.entries[idx])
    }
}

/// Splits a segment into topic blocks. A turn containing a keyword opens a new
/// block for that keyword's topic unless the current block already has that
/// topic; turns before the first trigger form a `preamble` block.
pub fn fine_segment(seg: &DomainSegment, t: &Transcript, km: &KeywordMap) -> Vec<TopicBlock> {
    let range = seg.turn_range.clone();
    let mut blocks: Vec<TopicBlock> = Vec::new();
    for i in range.clone() {
        let trigger = km.first_trigger(&t.turns[i].text);
        match (trigger, blocks.last_mut()) {
            (Some(e), Some(cur)) if cur.topic_label == e.topic_label => cur.turn_range.end = i + 1,
            (Some(e), _) => blocks.push(TopicBlock {
                topic_label: e.topic_label.clone(),
                turn_range: i..i + 1,
                trigger_keyword: Some(e.keyword.clone()),
            }),
            (None, Some(cur)) => cur.turn_range.end = i + 1,
            (None, None) => blocks.push(TopicBlock {
                topic_label: PREAMBLE.to_string(),
                turn_range: i..i + 1,
                trigger_keyword: None,
            }),
        }
    }
    if blocks.is_empty() {
        blocks.push(TopicBlock { topic_label: PREAMBLE.to_string(), turn_range: range, trigger_keyword: None });
    }
    blocks
}
