//! Transcript correction: domain-term remapping, spoken-number repair,
//! hyphenation of fixed phrases and filler removal.
//!
//! Every operation works turn by turn and records each substitution in a
//! [`CorrectionLog`]. Log offsets are byte positions in the turn text as it
//! stood when the substitution was made, so replaying the log entries in order
//! against the original transcript reproduces the corrected text.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{delimited_rows, plain_lines, read_to_string, ConfigError};
use crate::text::{is_bare_numeral, lower_words, number_word_value, words, WordSpan};
use crate::transcript::{Domain, SpeakerTurn, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrectionKind {
    Remap,
    Number,
    Hyphen,
    Filler,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionEntry {
    pub kind: CorrectionKind,
    pub turn_index: usize,
    pub offset: usize,
    pub original: String,
    pub replacement: String,
    /// Candidate that a guard rejected; the text was left unchanged.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub skipped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionLog {
    pub entries: Vec<CorrectionEntry>,
}

impl CorrectionLog {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn applied(&self) -> impl Iterator<Item = &CorrectionEntry> {
        self.entries.iter().filter(|e| !e.skipped)
    }

    pub fn extend(&mut self, other: CorrectionLog) {
        self.entries.extend(other.entries);
    }

    /// Re-applies the logged substitutions to `original`'s turn texts.
    /// Returns `None` if an entry does not match the text it claims to replace.
    pub fn replay(&self, original: &Transcript) -> Option<Vec<String>> {
        let mut texts: Vec<String> = original.turns.iter().map(|t| t.text.clone()).collect();
        for e in self.applied() {
            let text = texts.get_mut(e.turn_index)?;
            let end = e.offset.checked_add(e.original.len())?;
            if text.get(e.offset..end)? != e.original {
                return None;
            }
            text.replace_range(e.offset..end, &e.replacement);
        }
        Some(texts)
    }
}

struct Edit {
    start: usize,
    end: usize,
    replacement: String,
    skipped: bool,
}

impl Edit {
    fn new(start: usize, end: usize, replacement: impl Into<String>) -> Self {
        Edit { start, end, replacement: replacement.into(), skipped: false }
    }
}

fn char_index(text: &str, byte: usize) -> usize {
    text[..byte].chars().count()
}

/// Applies non-overlapping edits to one turn, shifting tag offsets.
fn apply_edits(
    turn: &SpeakerTurn,
    turn_index: usize,
    kind: CorrectionKind,
    mut edits: Vec<Edit>,
) -> (SpeakerTurn, Vec<CorrectionEntry>) {
    if edits.is_empty() {
        return (turn.clone(), Vec::new());
    }
    edits.sort_by_key(|e| e.start);
    let src = &turn.text;
    let mut out = String::with_capacity(src.len());
    let mut log = Vec::with_capacity(edits.len());
    // (old char start, old char end, new char start, new char len)
    let mut shifts: Vec<(usize, usize, usize, usize)> = Vec::new();
    let mut cursor = 0;
    for e in edits {
        debug_assert!(e.start >= cursor, "overlapping edits");
        out.push_str(&src[cursor..e.start]);
        let original = src[e.start..e.end].to_string();
        log.push(CorrectionEntry {
            kind,
            turn_index,
            offset: out.len(),
            original: original.clone(),
            replacement: e.replacement.clone(),
            skipped: e.skipped,
        });
        if e.skipped {
            out.push_str(&original);
        } else {
            let new_start = out.chars().count();
            shifts.push((
                char_index(src, e.start),
                char_index(src, e.end),
                new_start,
                e.replacement.chars().count(),
            ));
            out.push_str(&e.replacement);
        }
        cursor = e.end;
    }
    out.push_str(&src[cursor..]);

    let tags = turn
        .tags
        .iter()
        .map(|tag| {
            let mut delta: isize = 0;
            let mut offset = None;
            for &(s, e, ns, nl) in &shifts {
                if e <= tag.offset {
                    delta += nl as isize - (e - s) as isize;
                } else if s < tag.offset {
                    offset = Some(ns + (tag.offset - s).min(nl));
                    break;
                } else {
                    break;
                }
            }
            let offset = offset.unwrap_or((tag.offset as isize + delta) as usize);
            crate::transcript::AtmosphericTag { name: tag.name.clone(), offset }
        })
        .collect();
    (SpeakerTurn { speaker: turn.speaker.clone(), start: turn.start, text: out, tags }, log)
}

fn map_turns<F>(t: &Transcript, kind: CorrectionKind, mut edits_for: F) -> (Transcript, CorrectionLog)
where
    F: FnMut(&str) -> Vec<Edit>,
{
    let mut log = CorrectionLog::default();
    let turns = t
        .turns
        .iter()
        .enumerate()
        .map(|(i, turn)| {
            let edits = edits_for(&turn.text);
            let (new_turn, entries) = apply_edits(turn, i, kind, edits);
            log.entries.extend(entries);
            new_turn
        })
        .collect();
    (Transcript { interview_id: t.interview_id.clone(), domain_hint: t.domain_hint, turns }, log)
}

fn only_whitespace_between(text: &str, a: &WordSpan, b: &WordSpan) -> bool {
    let gap = &text[a.end..b.start];
    !gap.is_empty() && gap.chars().all(char::is_whitespace)
}

/// Tries to match `pattern` (lowercase words) at word `i`.
fn phrase_at(text: &str, spans: &[WordSpan], i: usize, pattern: &[String]) -> bool {
    if pattern.is_empty() || i + pattern.len() > spans.len() {
        return false;
    }
    pattern.iter().enumerate().all(|(k, p)| {
        let w = &spans[i + k];
        text[w.start..w.end].to_lowercase() == *p
            && (k == 0 || only_whitespace_between(text, &spans[i + k - 1], w))
    })
}

// ---------------------------------------------------------------------------
// term remapping

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RemapEntry {
    pub pattern: Vec<String>,
    pub replacement: String,
    pub domain_scope: Option<Domain>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RemapTable {
    entries: Vec<RemapEntry>,
}

impl RemapTable {
    pub fn new(entries: Vec<RemapEntry>) -> Result<Self, ConfigError> {
        let mut seen = HashSet::new();
        for e in &entries {
            let shown = e.pattern.join(" ");
            if e.pattern.is_empty() {
                return Err(ConfigError::invalid("remap table", "empty pattern"));
            }
            if !seen.insert((e.pattern.clone(), e.domain_scope)) {
                return Err(ConfigError::invalid("remap table", format!("duplicate pattern `{shown}`")));
            }
            if e.replacement.contains('\n') || e.replacement.contains('\r') {
                return Err(ConfigError::invalid("remap table", format!("replacement for `{shown}` contains a newline")));
            }
        }
        // a replacement that itself matches a pattern would make remapping
        // non-idempotent
        for e in &entries {
            let rep = lower_words(&e.replacement);
            for other in &entries {
                if rep.windows(other.pattern.len()).any(|w| w == other.pattern.as_slice()) {
                    return Err(ConfigError::invalid(
                        "remap table",
                        format!("replacement `{}` re-triggers pattern `{}`", e.replacement, other.pattern.join(" ")),
                    ));
                }
            }
        }
        let mut entries = entries;
        // longest pattern first; ties in file order
        entries.sort_by_key(|e| std::cmp::Reverse(e.pattern.len()));
        Ok(RemapTable { entries })
    }

    pub fn entries(&self) -> &[RemapEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Rows are `pattern, replacement[, domain]`.
    pub fn parse(content: &str, source_name: &str) -> Result<Self, ConfigError> {
        let mut entries = Vec::new();
        for (line, fields) in delimited_rows(content, source_name)? {
            if fields.len() < 2 || fields.len() > 3 {
                return Err(ConfigError::line(source_name, line, "expected `pattern, replacement[, domain]`"));
            }
            let domain_scope = match fields.get(2).filter(|s| !s.is_empty()) {
                Some(d) => Some(d.parse::<Domain>().map_err(|m| ConfigError::line(source_name, line, m))?),
                None => None,
            };
            let pattern: Vec<String> = fields[0].split_whitespace().map(str::to_lowercase).collect();
            entries.push(RemapEntry { pattern, replacement: fields[1].clone(), domain_scope });
        }
        RemapTable::new(entries).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::invalid(source_name, message),
            other => other,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&read_to_string(path)?, &path.display().to_string())
    }
}

/// Longest-match-first, case-insensitive, whole-word replacement of
/// mistranscribed terms. Scoped entries apply only when the transcript's
/// domain hint matches.
pub fn apply_term_remap(t: &Transcript, table: &RemapTable) -> (Transcript, CorrectionLog) {
    let active: Vec<&RemapEntry> = table
        .entries
        .iter()
        .filter(|e| e.domain_scope.is_none() || e.domain_scope == t.domain_hint)
        .collect();
    map_turns(t, CorrectionKind::Remap, |text| {
        let spans = words(text);
        let mut edits = Vec::new();
        let mut i = 0;
        while i < spans.len() {
            match active.iter().find(|e| phrase_at(text, &spans, i, &e.pattern)) {
                Some(e) => {
                    let last = &spans[i + e.pattern.len() - 1];
                    edits.push(Edit::new(spans[i].start, last.end, e.replacement.clone()));
                    i += e.pattern.len();
                }
                None => i += 1,
            }
        }
        edits
    })
}

// ---------------------------------------------------------------------------
// spoken numbers

/// Known fertilizer grades, stored hyphen-joined ("18-46-0").
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GradeList {
    grades: BTreeSet<String>,
}

impl GradeList {
    pub fn new<I, S>(grades: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for g in grades {
            let g = g.as_ref().trim();
            let parts: Vec<&str> = g.split(['-', ' ']).filter(|p| !p.is_empty()).collect();
            if parts.len() != 3 || !parts.iter().all(|p| is_bare_numeral(p)) {
                return Err(ConfigError::invalid("grades list", format!("`{g}` is not a three-part numeric grade")));
            }
            set.insert(parts.join("-"));
        }
        Ok(GradeList { grades: set })
    }

    pub fn contains(&self, a: &str, b: &str, c: &str) -> bool {
        self.grades.contains(&format!("{a}-{b}-{c}"))
    }

    pub fn len(&self) -> usize {
        self.grades.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grades.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let content = read_to_string(path)?;
        let lines = plain_lines(&content);
        GradeList::new(lines.iter().map(|(_, l)| l.as_str())).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::invalid(path.display().to_string(), message),
            other => other,
        })
    }
}

/// A whitespace-delimited token with trailing punctuation split off.
#[derive(Debug)]
struct Token<'a> {
    start: usize,
    /// End of the token without trailing punctuation.
    core_end: usize,
    core: &'a str,
    has_trailing: bool,
}

fn tokens<'a>(text: &'a str) -> Vec<Token<'a>> {
    let mut out = Vec::new();
    let mut start = None;
    let push = |out: &mut Vec<Token<'a>>, s: usize, e: usize| {
        let raw = &text[s..e];
        let core = raw.trim_end_matches(['.', ',', '!', '?', ';', ':']);
        out.push(Token { start: s, core_end: s + core.len(), core, has_trailing: core.len() < raw.len() });
    };
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                push(&mut out, s, i);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        push(&mut out, s, text.len());
    }
    out
}

fn small_number(core: &str) -> Option<u64> {
    if is_bare_numeral(core) && core.len() <= 2 {
        return core.parse().ok();
    }
    number_word_value(core).filter(|v| *v > 0)
}

/// `<N> hundred` → N×100.
fn hundreds_edits(text: &str) -> Vec<Edit> {
    let toks = tokens(text);
    let mut edits = Vec::new();
    let mut i = 0;
    while i + 1 < toks.len() {
        let (a, b) = (&toks[i], &toks[i + 1]);
        let next_is_thousand = toks
            .get(i + 2)
            .is_some_and(|c| !b.has_trailing && c.core.eq_ignore_ascii_case("thousand"));
        if let Some(n) = small_number(a.core).filter(|n| *n > 0) {
            if !a.has_trailing && b.core.eq_ignore_ascii_case("hundred") && !next_is_thousand {
                edits.push(Edit::new(a.start, b.core_end, (n * 100).to_string()));
                i += 2;
                continue;
            }
        }
        i += 1;
    }
    edits
}

/// `<d> <dd>` → `<ddd>` under the conservative guards; ambiguous candidates
/// are logged as skipped.
fn merge_edits(text: &str, grades: &GradeList) -> Vec<Edit> {
    let toks = tokens(text);
    let pure = |i: usize| toks.get(i).filter(|t| is_bare_numeral(t.core));
    let in_grade = |i: usize| {
        // token i belongs to a known grade triple starting at i-2, i-1 or i
        (i.saturating_sub(2)..=i).any(|s| {
            s + 2 < toks.len()
                && (s..s + 2).all(|k| !toks[k].has_trailing)
                && (s..=s + 2).all(|k| is_bare_numeral(toks[k].core))
                && grades.contains(toks[s].core, toks[s + 1].core, toks[s + 2].core)
        })
    };
    let mut edits = Vec::new();
    let mut i = 0;
    while i + 1 < toks.len() {
        let (a, b) = (&toks[i], &toks[i + 1]);
        let a_small = is_bare_numeral(a.core) && (1..=2).contains(&a.core.len());
        if a_small && !a.has_trailing && pure(i + 1).is_some() && b.core.len() == 2 && !in_grade(i) && !in_grade(i + 1) {
            let next_hyphenated =
                !b.has_trailing && toks.get(i + 2).is_some_and(|c| c.core.contains('-'));
            let mut e = Edit::new(a.start, b.core_end, format!("{}{}", a.core, b.core));
            if next_hyphenated {
                e.skipped = true;
            }
            edits.push(e);
            i += 2;
            continue;
        }
        // "2 20-head" / "two 20-head": could be one number or two; leave it
        let a_spoken = a_small || number_word_value(a.core).is_some_and(|v| (1..10).contains(&v));
        let b_compound = b.core.split_once('-').is_some_and(|(n, rest)| {
            is_bare_numeral(n) && n.len() == 2 && !rest.is_empty()
        });
        if a_spoken && !a.has_trailing && b_compound {
            let (n, rest) = b.core.split_once('-').unwrap();
            let mut e = Edit::new(a.start, b.core_end, format!("{}{n}-{rest}", a.core));
            e.skipped = true;
            edits.push(e);
            i += 2;
            continue;
        }
        i += 1;
    }
    edits
}

/// Space-separated grade triples found in the grade list → hyphen-joined.
fn grade_edits(text: &str, grades: &GradeList) -> Vec<Edit> {
    let toks = tokens(text);
    let mut edits = Vec::new();
    let mut i = 0;
    while i + 2 < toks.len() {
        let tri = &toks[i..i + 3];
        if tri.iter().all(|t| is_bare_numeral(t.core))
            && !tri[0].has_trailing
            && !tri[1].has_trailing
            && grades.contains(tri[0].core, tri[1].core, tri[2].core)
        {
            edits.push(Edit::new(
                tri[0].start,
                tri[2].core_end,
                format!("{}-{}-{}", tri[0].core, tri[1].core, tri[2].core),
            ));
            i += 3;
        } else {
            i += 1;
        }
    }
    edits
}

/// Repairs numbers the recognizer split apart: "12 hundred" → "1200",
/// "2 40" → "240", "18 46 0" → "18-46-0" (listed grades only).
pub fn normalize_numbers(t: &Transcript, grades: &GradeList) -> (Transcript, CorrectionLog) {
    let (t1, mut log) = map_turns(t, CorrectionKind::Number, hundreds_edits);
    let (t2, log2) = map_turns(&t1, CorrectionKind::Number, |text| merge_edits(text, grades));
    let (t3, log3) = map_turns(&t2, CorrectionKind::Number, |text| grade_edits(text, grades));
    log.extend(log2);
    log.extend(log3);
    (t3, log)
}

// ---------------------------------------------------------------------------
// hyphenation

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhraseList {
    phrases: Vec<Vec<String>>,
}

impl PhraseList {
    pub fn new<I, S>(phrases: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut out: Vec<Vec<String>> = Vec::new();
        for p in phrases {
            let ws: Vec<String> = p.as_ref().split_whitespace().map(str::to_lowercase).collect();
            if ws.len() < 2 {
                return Err(ConfigError::invalid("phrase list", format!("`{}` has fewer than two words", p.as_ref())));
            }
            if !out.contains(&ws) {
                out.push(ws);
            }
        }
        out.sort_by_key(|p| std::cmp::Reverse(p.len()));
        Ok(PhraseList { phrases: out })
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let content = read_to_string(path)?;
        PhraseList::new(plain_lines(&content).into_iter().map(|(_, l)| l)).map_err(|e| match e {
            ConfigError::Invalid { message, .. } => ConfigError::invalid(path.display().to_string(), message),
            other => other,
        })
    }
}

/// Joins listed word sequences with hyphens, leftmost-longest.
pub fn hyphenate_terms(t: &Transcript, phrases: &PhraseList) -> (Transcript, CorrectionLog) {
    map_turns(t, CorrectionKind::Hyphen, |text| {
        let spans = words(text);
        let mut edits = Vec::new();
        let mut i = 0;
        while i < spans.len() {
            match phrases.phrases.iter().find(|p| phrase_at(text, &spans, i, p)) {
                Some(p) => {
                    let joined: Vec<&str> = spans[i..i + p.len()].iter().map(|w| &text[w.start..w.end]).collect();
                    edits.push(Edit::new(spans[i].start, spans[i + p.len() - 1].end, joined.join("-")));
                    i += p.len();
                }
                None => i += 1,
            }
        }
        edits
    })
}

// ---------------------------------------------------------------------------
// fillers

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FillerList {
    words: BTreeSet<String>,
}

impl FillerList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        FillerList { words: words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).filter(|w| !w.is_empty()).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let content = read_to_string(path)?;
        Ok(FillerList::new(plain_lines(&content).into_iter().map(|(_, l)| l)))
    }
}

/// Drops filler words together with a directly following comma, taking one
/// adjacent whitespace run along so no double spaces remain.
pub fn remove_fillers(t: &Transcript, fillers: &FillerList) -> (Transcript, CorrectionLog) {
    map_turns(t, CorrectionKind::Filler, |text| {
        let mut edits: Vec<Edit> = Vec::new();
        for w in words(text) {
            if !fillers.words.contains(&text[w.start..w.end].to_lowercase()) {
                continue;
            }
            let mut end = w.end;
            if text[end..].starts_with(',') {
                end += 1;
            }
            let trailing_ws = text[end..].len() - text[end..].trim_start().len();
            let mut start = w.start;
            let floor = edits.last().map_or(0, |e| e.end);
            if trailing_ws > 0 {
                end += trailing_ws;
            } else {
                let leading_ws = text[..start].len() - text[..start].trim_end().len();
                if start - leading_ws >= floor {
                    start -= leading_ws;
                }
            }
            if start < floor {
                continue;
            }
            edits.push(Edit::new(start, end, ""));
        }
        edits
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct PreprocessConfig {
    pub remap: RemapTable,
    pub phrases: PhraseList,
    pub fillers: FillerList,
    pub grades: GradeList,
}

/// remap → numbers → hyphenation → fillers, with a merged log.
pub fn preprocess_pipeline(t: &Transcript, cfg: &PreprocessConfig) -> (Transcript, CorrectionLog) {
    let (t, mut log) = apply_term_remap(t, &cfg.remap);
    let (t, l) = normalize_numbers(&t, &cfg.grades);
    log.extend(l);
    let (t, l) = hyphenate_terms(&t, &cfg.phrases);
    log.extend(l);
    let (t, l) = remove_fillers(&t, &cfg.fillers);
    log.extend(l);
    (t, log)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Transcript {
        Transcript {
            interview_id: "t".into(),
            domain_hint: Some(Domain::Pork),
            turns: vec![SpeakerTurn::new("Speaker 2", 0.0, text)],
        }
    }

    fn remap(rows: &str) -> RemapTable {
        RemapTable::parse(rows, "test").unwrap()
    }

    fn grades() -> GradeList {
        GradeList::new(["18-46-0", "11-52-0", "10-10-10"]).unwrap()
    }

    #[test]
    fn remaps_souths_to_sows() {
        let (t, log) = apply_term_remap(&one("About 2000 Souths."), &remap("Souths, sows\n"));
        assert_eq!(t.turns[0].text, "About 2000 sows.");
        assert_eq!(log.entries.len(), 1);
        assert_eq!(log.entries[0].original, "Souths");
    }

    #[test]
    fn empty_remap_is_identity() {
        let src = one("nothing to see");
        let (t, log) = apply_term_remap(&src, &RemapTable::default());
        assert_eq!(t, src);
        assert!(log.is_empty());
    }

    #[test]
    fn remap_is_whole_word() {
        let src = Transcript {
            interview_id: "t".into(),
            domain_hint: None,
            turns: vec![
                SpeakerTurn::new("A", 0.0, "We have 4300 faring."),
                SpeakerTurn::new("B", 1.0, "The fairing-edge and faring-edge stay."),
            ],
        };
        let (t, log) = apply_term_remap(&src, &remap("faring, farrowing\n"));
        assert_eq!(t.turns[0].text, "We have 4300 farrowing.");
        assert_eq!(t.turns[1].text, "The fairing-edge and faring-edge stay.");
        assert_eq!(log.entries.len(), 1);
    }

    #[test]
    fn remap_prefers_longest_and_respects_scope() {
        let table = remap("sal, sows, pork\nsal lot, sale lot\nsos, sows, dairy\n");
        let (t, _) = apply_term_remap(&one("the sal lot and a sal and SOS"), &table);
        assert_eq!(t.turns[0].text, "the sale lot and a sows and SOS");
    }

    #[test]
    fn remap_rejects_duplicates_and_self_triggering() {
        assert!(RemapTable::parse("a, b\nA, c\n", "x").is_err());
        assert!(RemapTable::parse("sow, sows\nsows, sow\n", "x").is_err());
        assert!(RemapTable::parse("a, b, pork\na, c, dairy\n", "x").is_ok());
    }

    fn numbers(text: &str) -> String {
        normalize_numbers(&one(text), &grades()).0.turns[0].text.clone()
    }

    #[test]
    fn appendix_number_cases() {
        assert_eq!(numbers("2 40"), "240");
        assert_eq!(numbers("12 hundred"), "1200");
        assert_eq!(numbers("18 46 0"), "18-46-0");
        assert_eq!(numbers("We have two 20-head barns"), "We have two 20-head barns");
    }

    #[test]
    fn hyphenated_guard_is_logged_as_skipped() {
        let (t, log) = normalize_numbers(&one("We have two 20-head barns and 2 20-head pens"), &grades());
        assert_eq!(t.turns[0].text, "We have two 20-head barns and 2 20-head pens");
        assert_eq!(log.entries.len(), 2);
        assert!(log.entries.iter().all(|e| e.skipped));
    }

    #[test]
    fn merge_guard_on_following_hyphenated_token() {
        let (t, log) = normalize_numbers(&one("about 2 40 20-head pens"), &grades());
        assert_eq!(t.turns[0].text, "about 2 40 20-head pens");
        assert!(log.entries[0].skipped);
    }

    #[test]
    fn spurious_repeat_is_kept() {
        assert_eq!(numbers("We have 4 4300 faring"), "We have 4 4300 faring");
    }

    #[test]
    fn number_words_and_punctuation() {
        assert_eq!(numbers("Twelve hundred head."), "1200 head.");
        assert_eq!(numbers("It was 2, 40 maybe"), "It was 2, 40 maybe");
        assert_eq!(numbers("about 2 40."), "about 240.");
        assert_eq!(numbers("13 hundred thousand"), "13 hundred thousand");
        assert_eq!(numbers("unlisted 12 34 5"), "unlisted 1234 5");
    }

    #[test]
    fn hyphenates_farrow_to_finish() {
        let pl = PhraseList::new(["farrow to finish"]).unwrap();
        let (t, _) = hyphenate_terms(&one("We run a Farrow to finish operation"), &pl);
        assert_eq!(t.turns[0].text, "We run a Farrow-to-finish operation");
    }

    #[test]
    fn hyphenation_leftmost_longest() {
        let pl = PhraseList::new(["finish barn", "farrow to finish"]).unwrap();
        let (t, log) = hyphenate_terms(&one("a farrow to finish barn"), &pl);
        assert_eq!(t.turns[0].text, "a farrow-to-finish barn");
        assert_eq!(log.entries.len(), 1);
        let (t, _) = hyphenate_terms(&one("the finish barn"), &pl);
        assert_eq!(t.turns[0].text, "the finish-barn");
    }

    #[test]
    fn phrase_list_needs_two_words() {
        assert!(PhraseList::new(["barn"]).is_err());
        let src = one("a farrow to finish barn");
        assert_eq!(hyphenate_terms(&src, &PhraseList::default()).0, src);
    }

    #[test]
    fn removes_fillers() {
        let fl = FillerList::new(["um", "uh"]);
        let (t, _) = remove_fillers(&one("Um, yeah."), &fl);
        assert_eq!(t.turns[0].text, "yeah.");
        let (t, _) = remove_fillers(&one("an umbrella, um, for the rain um"), &fl);
        assert_eq!(t.turns[0].text, "an umbrella, for the rain");
        let src = one("plain words");
        assert_eq!(remove_fillers(&src, &fl).0, src);
    }

    #[test]
    fn figure_one_turn_through_pipeline() {
        let cfg = PreprocessConfig {
            remap: remap("faring, farrowing\nSouths, sows\n"),
            phrases: PhraseList::new(["farrow to finish"]).unwrap(),
            fillers: FillerList::new(["um", "uh"]),
            grades: grades(),
        };
        let (t, log) = preprocess_pipeline(&one("4 4300 faring... and then 1200 nursery"), &cfg);
        assert_eq!(t.turns[0].text, "4 4300 farrowing... and then 1200 nursery");
        assert_eq!(log.applied().count(), 1);
    }

    #[test]
    fn filler_then_numbers_order() {
        let cfg = PreprocessConfig { fillers: FillerList::new(["um"]), grades: grades(), ..Default::default() };
        let (t, _) = preprocess_pipeline(&one("um 12 hundred"), &cfg);
        assert_eq!(t.turns[0].text, "1200");
    }

    #[test]
    fn empty_config_is_identity() {
        let src = one("Um, 1200 Souths, farrow to finish.");
        let (t, log) = preprocess_pipeline(&src, &PreprocessConfig::default());
        assert_eq!(t, src);
        assert!(log.applied().next().is_none());
    }

    #[test]
    fn tags_shift_with_edits() {
        let mut src = one("Um, yeah .");
        src.turns[0].tags.push(crate::transcript::AtmosphericTag { name: "affirmative".into(), offset: 9 });
        let (t, _) = remove_fillers(&src, &FillerList::new(["um"]));
        assert_eq!(t.turns[0].text, "yeah .");
        assert_eq!(t.turns[0].tags[0].offset, 5);
        assert_eq!(t.turns[0].text_with_tags(), "yeah <affirmative>.");
    }

    #[test]
    fn log_replay_reproduces_output() {
        let cfg = PreprocessConfig {
            remap: remap("faring, farrowing\nSouths, sows\n"),
            phrases: PhraseList::new(["farrow to finish"]).unwrap(),
            fillers: FillerList::new(["um", "uh"]),
            grades: grades(),
        };
        let src = one("Um, we have 12 hundred Souths, uh, farrow to finish and 2 40 faring, 18 46 0 too");
        let (t, log) = preprocess_pipeline(&src, &cfg);
        assert_eq!(t.turns[0].text, "we have 1200 sows, farrow-to-finish and 240 farrowing, 18-46-0 too");
        assert_eq!(log.replay(&src).unwrap(), vec![t.turns[0].text.clone()]);
    }
}
