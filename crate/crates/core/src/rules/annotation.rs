//! Sentence-level linguistic annotations: tokens, POS and NER tags, and a
//! dependency tree encoded per token as (relative governor offset, relation).

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::parse_number;
use crate::transcript::Transcript;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("annotation file {0} not found")]
    MissingFile(PathBuf),
    #[error("reading {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{source_name}:{line}: {message}")]
    Malformed { source_name: String, line: usize, message: String },
    #[error("sentence {sentence}: {message}")]
    Invalid { sentence: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub turn: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepEdge {
    pub dependent: usize,
    /// `None` marks the root.
    pub governor: Option<usize>,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceAnnotation {
    pub tokens: Vec<String>,
    pub pos_tags: Vec<String>,
    pub ner_tags: Vec<String>,
    /// One edge per token, indexed by dependent.
    pub dep_edges: Vec<DepEdge>,
    pub span: SentenceSpan,
    /// Byte ranges of each token inside the turn text.
    pub token_spans: Vec<(usize, usize)>,
}

impl SentenceAnnotation {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn governor(&self, token: usize) -> Option<usize> {
        self.dep_edges[token].governor
    }

    pub fn relation(&self, token: usize) -> &str {
        &self.dep_edges[token].relation
    }

    /// Dependents of `token` with their relation, in token order.
    pub fn children(&self, token: usize) -> impl Iterator<Item = (usize, &str)> {
        self.dep_edges
            .iter()
            .filter(move |e| e.governor == Some(token))
            .map(|e| (e.dependent, e.relation.as_str()))
    }

    /// Checks parallel-list lengths, governor ranges and that the edges form
    /// a single-rooted tree.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.tokens.len();
        if self.pos_tags.len() != n || self.ner_tags.len() != n || self.dep_edges.len() != n {
            return Err(format!(
                "length mismatch: {n} tokens, {} POS tags, {} NER tags, {} edges",
                self.pos_tags.len(),
                self.ner_tags.len(),
                self.dep_edges.len()
            ));
        }
        if !self.token_spans.is_empty() && self.token_spans.len() != n {
            return Err(format!("{} token spans for {n} tokens", self.token_spans.len()));
        }
        let mut roots = 0;
        for (i, e) in self.dep_edges.iter().enumerate() {
            if e.dependent != i {
                return Err(format!("edge {i} names dependent {}", e.dependent));
            }
            match e.governor {
                None => roots += 1,
                Some(g) if g >= n => return Err(format!("token {i} has governor {g} outside 0..{n}")),
                Some(g) if g == i => return Err(format!("token {i} governs itself")),
                Some(_) => {}
            }
        }
        if n > 0 && roots != 1 {
            return Err(format!("expected exactly one root, found {roots}"));
        }
        for start in 0..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(g) = self.dep_edges[cur].governor {
                cur = g;
                steps += 1;
                if steps > n {
                    return Err(format!("cycle through token {start}"));
                }
            }
        }
        Ok(())
    }

    /// Locates each token in the turn text, left to right within the
    /// sentence span.
    pub fn align(&mut self, turn_text: &str) -> Result<(), String> {
        let SentenceSpan { start, end, .. } = self.span;
        if start > end || end > turn_text.len() || !turn_text.is_char_boundary(start) || !turn_text.is_char_boundary(end) {
            return Err(format!("sentence span {start}..{end} outside turn text of {} bytes", turn_text.len()));
        }
        let mut cursor = start;
        let mut spans = Vec::with_capacity(self.tokens.len());
        for tok in &self.tokens {
            let pos = turn_text[cursor..end]
                .find(tok.as_str())
                .ok_or_else(|| format!("token `{tok}` not found in turn text after byte {cursor}"))?;
            let s = cursor + pos;
            spans.push((s, s + tok.len()));
            cursor = s + tok.len();
        }
        self.token_spans = spans;
        Ok(())
    }
}

/// Anything that turns a transcript into sentence annotations.
pub trait Annotator: Send + Sync {
    fn annotate(&self, t: &Transcript) -> Result<Vec<SentenceAnnotation>, AnnotationError>;
}

/// On-disk record: one JSON object per sentence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub turn: usize,
    pub start: usize,
    pub end: usize,
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    pub ner: Vec<String>,
    /// Governor position relative to the token; 0 marks the root.
    pub heads: Vec<i64>,
    pub deprels: Vec<String>,
}

impl AnnotationRecord {
    pub fn into_annotation(self) -> Result<SentenceAnnotation, String> {
        let n = self.tokens.len();
        if self.heads.len() != n || self.deprels.len() != n {
            return Err(format!(
                "length mismatch: {n} tokens, {} heads, {} relations",
                self.heads.len(),
                self.deprels.len()
            ));
        }
        let mut dep_edges = Vec::with_capacity(n);
        for (i, (&h, rel)) in self.heads.iter().zip(self.deprels).enumerate() {
            let governor = if h == 0 {
                None
            } else {
                let g = i as i64 + h;
                if g < 0 || g >= n as i64 {
                    return Err(format!("token {i} has governor {g} outside 0..{n}"));
                }
                Some(g as usize)
            };
            dep_edges.push(DepEdge { dependent: i, governor, relation: rel });
        }
        Ok(SentenceAnnotation {
            tokens: self.tokens,
            pos_tags: self.pos,
            ner_tags: self.ner,
            dep_edges,
            span: SentenceSpan { turn: self.turn, start: self.start, end: self.end },
            token_spans: Vec::new(),
        })
    }

    pub fn from_annotation(a: &SentenceAnnotation) -> Self {
        AnnotationRecord {
            turn: a.span.turn,
            start: a.span.start,
            end: a.span.end,
            tokens: a.tokens.clone(),
            pos: a.pos_tags.clone(),
            ner: a.ner_tags.clone(),
            heads: a
                .dep_edges
                .iter()
                .map(|e| e.governor.map_or(0, |g| g as i64 - e.dependent as i64))
                .collect(),
            deprels: a.dep_edges.iter().map(|e| e.relation.clone()).collect(),
        }
    }
}

/// Parses annotation records and validates them against the transcript.
pub fn parse_annotations(
    content: &str,
    source_name: &str,
    t: &Transcript,
) -> Result<Vec<SentenceAnnotation>, AnnotationError> {
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| AnnotationError::Malformed { source_name: source_name.to_string(), line: i + 1, message };
        let rec: AnnotationRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        let mut anno = rec.into_annotation().map_err(malformed)?;
        anno.validate().map_err(malformed)?;
        let turn = t
            .turns
            .get(anno.span.turn)
            .ok_or_else(|| malformed(format!("turn {} outside transcript of {} turns", anno.span.turn, t.turns.len())))?;
        anno.align(&turn.text).map_err(malformed)?;
        out.push(anno);
    }
    check_spans(&out)?;
    Ok(out)
}

fn check_spans(annos: &[SentenceAnnotation]) -> Result<(), AnnotationError> {
    for (i, w) in annos.windows(2).enumerate() {
        let (a, b) = (&w[0].span, &w[1].span);
        if (b.turn, b.start) < (a.turn, a.end) {
            return Err(AnnotationError::Invalid { sentence: i + 1, message: "sentence spans overlap or are out of order".into() });
        }
    }
    Ok(())
}

/// Loads pre-computed annotations from `<dir>/<interview_id>.jsonl`.
#[derive(Debug, Clone)]
pub struct FileAnnotator {
    dir: PathBuf,
}

impl FileAnnotator {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        FileAnnotator { dir: dir.into() }
    }

    pub fn path_for(&self, interview_id: &str) -> PathBuf {
        self.dir.join(format!("{interview_id}.jsonl"))
    }
}

impl Annotator for FileAnnotator {
    fn annotate(&self, t: &Transcript) -> Result<Vec<SentenceAnnotation>, AnnotationError> {
        let path = self.path_for(&t.interview_id);
        if !path.exists() {
            return Err(AnnotationError::MissingFile(path));
        }
        let content = std::fs::read_to_string(&path)
            .map_err(|e| AnnotationError::Io { path: path.clone(), message: e.to_string() })?;
        parse_annotations(&content, &path.display().to_string(), t)
    }
}

/// Serializes annotations in the file provider's format.
pub fn write_annotations(path: &Path, annos: &[SentenceAnnotation]) -> std::io::Result<()> {
    let mut out = String::new();
    for a in annos {
        out.push_str(&serde_json::to_string(&AnnotationRecord::from_annotation(a)).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)
}

// ---------------------------------------------------------------------------
// built-in lexical annotator

/// A deterministic, dictionary-driven annotator: sentence splitting on
/// terminal punctuation, a closed-class POS lexicon, and a shallow parse that
/// chunks noun phrases and attaches `X <prep> Y` as `nmod_<prep>`.
#[derive(Debug, Clone, Default)]
pub struct LexicalAnnotator;

fn token_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?\b|[\p{L}\p{N}]+(?:['’.\-][\p{L}\p{N}]+)*|[^\s\p{L}\p{N}]")
            .expect("token regex")
    })
}

fn lexicon() -> &'static HashMap<&'static str, &'static str> {
    static LEX: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    LEX.get_or_init(|| {
        let groups: &[(&str, &str)] = &[
            ("DT", "the a an this that these those each every some any no all both"),
            ("PRP$", "my our your their his her its"),
            ("PRP", "i we you they he she it me us them"),
            ("IN", "of in on at for with from about by to into over under per than as through after before during around"),
            ("CC", "and or but"),
            ("WP", "what which who whom"),
            ("WRB", "how when where why"),
            ("MD", "can could will would should may might must"),
            ("VB", "is are was were be been am do does did have has had got get go going run runs raise raised plant planted grow grew use used keep kept think know say said sell sold buy bought put apply applied"),
            ("RB", "not also just really very so then there here too maybe probably usually mostly"),
            ("UH", "yes yeah yep yup no nope okay ok um uh well right sure"),
            ("JJ", "many much few several total other big small new old main"),
        ];
        let mut m = HashMap::new();
        for (tag, words) in groups {
            for w in words.split_whitespace() {
                m.entry(w).or_insert(*tag);
            }
        }
        m
    })
}

fn pos_tag(tok: &str) -> &'static str {
    let lower = tok.to_lowercase();
    if parse_number(tok).is_some() {
        return "CD";
    }
    if let Some(tag) = lexicon().get(lower.as_str()) {
        return tag;
    }
    let first = tok.chars().next().unwrap_or(' ');
    if !first.is_alphanumeric() {
        return if tok == "%" { "NN" } else { "." };
    }
    if tok.contains('\'') || tok.contains('’') {
        return "VB";
    }
    if lower.len() > 3 && lower.ends_with('s') && !lower.ends_with("ss") {
        "NNS"
    } else {
        "NN"
    }
}

fn sentence_ranges(text: &str) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if matches!(bytes[i], b'.' | b'?' | b'!') {
            let mut j = i + 1;
            while j < bytes.len() && matches!(bytes[j], b'.' | b'?' | b'!') {
                j += 1;
            }
            // an ellipsis marks a pause in speech, not a sentence end
            let ellipsis = bytes[i] == b'.' && j - i > 1;
            if !ellipsis && (j == bytes.len() || bytes[j].is_ascii_whitespace()) {
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                out.push((start, j));
                start = j;
                i = j;
                continue;
            }
            i = j;
            continue;
        }
        i += 1;
    }
    if start < text.len() {
        out.push((start, text.len()));
    }
    out
}

fn is_np_tag(tag: &str) -> bool {
    matches!(tag, "DT" | "PRP$" | "JJ" | "CD" | "NN" | "NNS")
}

/// Shallow dependency parse over tagged tokens.
pub(crate) fn shallow_parse(tokens: &[String], tags: &[&str]) -> Vec<DepEdge> {
    let n = tokens.len();
    let mut gov: Vec<Option<usize>> = vec![None; n];
    let mut rel: Vec<String> = vec![String::new(); n];
    let mut attached = vec![false; n];

    // noun-phrase chunks: (start, end, head)
    let mut chunks: Vec<(usize, usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if is_np_tag(tags[i]) {
            let s = i;
            while i < n && is_np_tag(tags[i]) {
                i += 1;
            }
            let head = (s..i).rev().find(|&k| tags[k].starts_with("NN")).unwrap_or(i - 1);
            for k in s..i {
                if k != head {
                    gov[k] = Some(head);
                    rel[k] = match tags[k] {
                        "DT" | "PRP$" => "det",
                        "JJ" => "amod",
                        "CD" => "nummod",
                        _ => "compound",
                    }
                    .to_string();
                    attached[k] = true;
                }
            }
            chunks.push((s, i, head));
        } else {
            i += 1;
        }
    }
    let chunk_at_start = |pos: usize| chunks.iter().find(|c| c.0 == pos).copied();
    let chunk_at_end = |pos: usize| chunks.iter().find(|c| c.1 == pos).copied();

    // X <prep> Y
    for p in 0..n {
        if tags[p] != "IN" || p == 0 {
            continue;
        }
        if let (Some(left), Some(right)) = (chunk_at_end(p), chunk_at_start(p + 1)) {
            let prep = tokens[p].to_lowercase();
            gov[right.2] = Some(left.2);
            rel[right.2] = format!("nmod_{prep}");
            attached[right.2] = true;
            gov[p] = Some(right.2);
            rel[p] = "case".into();
            attached[p] = true;
        }
    }

    let root = (0..n)
        .find(|&k| matches!(tags[k], "VB" | "MD"))
        .or_else(|| chunks.first().map(|c| c.2))
        .unwrap_or(0);
    attached[root] = true;
    gov[root] = None;
    rel[root] = "root".into();
    for k in 0..n {
        if attached[k] {
            continue;
        }
        gov[k] = Some(root);
        rel[k] = if tags[k] == "." {
            "punct".into()
        } else if chunks.iter().any(|c| c.2 == k) {
            if k < root { "nsubj".into() } else { "obj".into() }
        } else if tags[k] == "IN" {
            "case".into()
        } else {
            "dep".into()
        };
    }
    (0..n).map(|k| DepEdge { dependent: k, governor: gov[k], relation: rel[k].clone() }).collect()
}

impl LexicalAnnotator {
    pub fn annotate_text(&self, turn: usize, text: &str) -> Vec<SentenceAnnotation> {
        let mut out = Vec::new();
        for (s, e) in sentence_ranges(text) {
            let found: Vec<(usize, usize)> =
                token_regex().find_iter(&text[s..e]).map(|m| (s + m.start(), s + m.end())).collect();
            if found.is_empty() {
                continue;
            }
            let tokens: Vec<String> = found.iter().map(|&(a, b)| text[a..b].to_string()).collect();
            let tags: Vec<&str> = tokens.iter().map(|t| pos_tag(t)).collect();
            let dep_edges = shallow_parse(&tokens, &tags);
            out.push(SentenceAnnotation {
                ner_tags: tags.iter().map(|t| if *t == "CD" { "NUMBER".into() } else { "O".into() }).collect(),
                pos_tags: tags.iter().map(|t| t.to_string()).collect(),
                tokens,
                dep_edges,
                span: SentenceSpan { turn, start: s, end: e },
                token_spans: found,
            });
        }
        out
    }
}

impl Annotator for LexicalAnnotator {
    fn annotate(&self, t: &Transcript) -> Result<Vec<SentenceAnnotation>, AnnotationError> {
        Ok(t.turns.iter().enumerate().flat_map(|(i, turn)| self.annotate_text(i, &turn.text)).collect())
    }
}
