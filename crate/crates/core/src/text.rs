//! Small text utilities shared across stages.

use std::sync::OnceLock;

use regex::Regex;

/// Byte range of a word inside some text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WordSpan {
    pub start: usize,
    pub end: usize,
}

fn word_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?\b|[\p{L}\p{N}]+(?:['’.\-][\p{L}\p{N}]+)*")
            .expect("word regex")
    })
}

/// Words are maximal letter/digit runs, joined across internal apostrophes,
/// hyphens and decimal points, plus comma-grouped numerals ("6,670").
pub fn words(text: &str) -> Vec<WordSpan> {
    word_regex().find_iter(text).map(|m| WordSpan { start: m.start(), end: m.end() }).collect()
}

/// Lowercase word strings of `text`.
pub fn lower_words(text: &str) -> Vec<String> {
    words(text).into_iter().map(|w| text[w.start..w.end].to_lowercase()).collect()
}

/// True when `text[start..end]` is bounded by non-word characters.
pub fn at_word_boundary(text: &str, start: usize, end: usize) -> bool {
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    let before_ok = text[..start].chars().next_back().is_none_or(|c| !is_word(c));
    let after_ok = text[end..].chars().next().is_none_or(|c| !is_word(c));
    before_ok && after_ok
}

/// Singular/plural folding: strips one trailing `s` from words longer than
/// three characters, leaving `-ss` endings alone.
pub fn stem(word: &str) -> String {
    let w = word.to_lowercase();
    if w.chars().count() > 3 && w.ends_with('s') && !w.ends_with("ss") {
        w[..w.len() - 1].to_string()
    } else {
        w
    }
}

const UNITS: [&str; 20] = [
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten", "eleven",
    "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen",
];
const TENS: [&str; 8] = ["twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"];

/// Value of a spelled-out number below one hundred ("three", "forty-two").
pub fn number_word_value(word: &str) -> Option<u64> {
    let w = word.to_lowercase();
    if let Some(i) = UNITS.iter().position(|u| *u == w) {
        return Some(i as u64);
    }
    if let Some(i) = TENS.iter().position(|t| *t == w) {
        return Some(20 + 10 * i as u64);
    }
    let (tens, unit) = w.split_once('-')?;
    let t = TENS.iter().position(|x| *x == tens)?;
    let u = UNITS[1..10].iter().position(|x| *x == unit)?;
    Some(20 + 10 * t as u64 + u as u64 + 1)
}

pub fn is_bare_numeral(word: &str) -> bool {
    !word.is_empty() && word.bytes().all(|b| b.is_ascii_digit())
}

/// Parses a numeral, accepting digit-group commas ("6,670") and a decimal
/// part; spelled-out numbers below one hundred are accepted too.
pub fn parse_number(word: &str) -> Option<f64> {
    let w = word.trim();
    if w.is_empty() {
        return None;
    }
    if let Some(v) = number_word_value(w) {
        return Some(v as f64);
    }
    let cleaned: String = if w.contains(',') {
        let (int, frac) = match w.split_once('.') {
            Some((i, f)) => (i, Some(f)),
            None => (w, None),
        };
        let groups: Vec<&str> = int.split(',').collect();
        let head = groups[0];
        let well_formed = !head.is_empty()
            && head.len() <= 3
            && groups[1..].iter().all(|g| g.len() == 3)
            && groups.iter().all(|g| g.bytes().all(|b| b.is_ascii_digit()));
        if !well_formed {
            return None;
        }
        let mut s = groups.concat();
        if let Some(f) = frac {
            s.push('.');
            s.push_str(f);
        }
        s
    } else {
        w.to_string()
    };
    let valid = cleaned.bytes().all(|b| b.is_ascii_digit() || b == b'.')
        && cleaned.bytes().filter(|b| *b == b'.').count() <= 1
        && cleaned.bytes().any(|b| b.is_ascii_digit())
        && !cleaned.starts_with('.')
        && !cleaned.ends_with('.');
    if !valid {
        return None;
    }
    cleaned.parse().ok()
}

/// Canonical text for a number: integers print without a fractional part.
pub fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        let s = format!("{v}");
        s
    }
}
