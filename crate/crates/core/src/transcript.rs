//! Diarized transcript model and the line-delimited interchange format.
//!
//! Each line of a transcript document is a JSON object with `speaker`,
//! `start` (seconds from the start of the recording) and `text`. Atmospheric
//! tags such as `<laugh>` appear inline in `text`; parsing lifts them out into
//! [`AtmosphericTag`] records keyed by character offset so the remaining text
//! is exactly what was spoken.

use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TranscriptError {
    #[error("transcript is not valid UTF-8: {0}")]
    Encoding(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("transcript contains no speaker turns")]
    Empty,
    #[error("turn {turn}: start time {start} is earlier than the previous turn ({previous})")]
    NonMonotonic { turn: usize, start: f64, previous: f64 },
    #[error("turn {turn}: start time {start} is negative or not finite")]
    BadTimestamp { turn: usize, start: f64 },
    #[error("turn index {index} out of range for a transcript of {len} turns")]
    TurnOutOfRange { index: usize, len: usize },
}

/// Farm subdomain an interview (or a segment of one) covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Pork,
    Crop,
    Dairy,
    Unknown,
}

impl Domain {
    pub const KNOWN: [Domain; 3] = [Domain::Pork, Domain::Crop, Domain::Dairy];

    pub fn as_str(&self) -> &'static str {
        match self {
            Domain::Pork => "pork",
            Domain::Crop => "crop",
            Domain::Dairy => "dairy",
            Domain::Unknown => "unknown",
        }
    }

    /// Maps a spoken domain word ("dairy", "crops", "hogs") onto a domain.
    pub fn from_word(word: &str) -> Option<Domain> {
        match word.to_lowercase().as_str() {
            "pork" | "pig" | "pigs" | "hog" | "hogs" | "swine" => Some(Domain::Pork),
            "crop" | "crops" | "cropping" | "grain" | "grains" => Some(Domain::Crop),
            "dairy" | "milk" | "cows" | "cattle" => Some(Domain::Dairy),
            _ => None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "pork" => Ok(Domain::Pork),
            "crop" => Ok(Domain::Crop),
            "dairy" => Ok(Domain::Dairy),
            "unknown" => Ok(Domain::Unknown),
            other => Err(format!("unknown domain `{other}`")),
        }
    }
}

/// A non-speech annotation inserted by the recognizer, anchored at a
/// character offset into the cleaned turn text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtmosphericTag {
    pub name: String,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerTurn {
    pub speaker: String,
    /// Seconds since the recording started.
    pub start: f64,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<AtmosphericTag>,
}

impl SpeakerTurn {
    pub fn new(speaker: impl Into<String>, start: f64, text: impl Into<String>) -> Self {
        SpeakerTurn { speaker: speaker.into(), start, text: text.into(), tags: Vec::new() }
    }

    /// Turn text with its atmospheric tags re-inserted as `<name>` markers.
    pub fn text_with_tags(&self) -> String {
        let mut out = String::with_capacity(self.text.len() + self.tags.len() * 8);
        let mut tags = self.tags.iter().peekable();
        for (ci, ch) in self.text.chars().enumerate() {
            while let Some(tag) = tags.next_if(|t| t.offset <= ci) {
                out.push('<');
                out.push_str(&tag.name);
                out.push('>');
            }
            out.push(ch);
        }
        for tag in tags {
            out.push('<');
            out.push_str(&tag.name);
            out.push('>');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub interview_id: String,
    pub domain_hint: Option<Domain>,
    pub turns: Vec<SpeakerTurn>,
}

#[derive(Deserialize)]
struct TurnRecord {
    speaker: String,
    start: f64,
    text: String,
}

#[derive(Serialize)]
struct TurnRecordOut<'a> {
    speaker: &'a str,
    start: f64,
    text: &'a str,
}

fn tag_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<([^<>\s]+)>").expect("tag regex"))
}

/// Splits inline `<tag>` markers out of `raw`, returning the cleaned text and
/// the tags anchored at character offsets into it.
pub fn lift_tags(raw: &str) -> (String, Vec<AtmosphericTag>) {
    let mut text = String::with_capacity(raw.len());
    let mut tags = Vec::new();
    let mut last = 0;
    let mut chars = 0;
    for caps in tag_regex().captures_iter(raw) {
        let m = caps.get(0).unwrap();
        let before = &raw[last..m.start()];
        chars += before.chars().count();
        text.push_str(before);
        tags.push(AtmosphericTag { name: caps[1].to_string(), offset: chars });
        last = m.end();
    }
    text.push_str(&raw[last..]);
    (text, tags)
}

impl Transcript {
    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn word_count(&self) -> usize {
        self.turns.iter().map(|t| t.text.split_whitespace().count()).sum()
    }

    /// Checks the ordering and offset invariants of an already-built transcript.
    pub fn validate(&self) -> Result<(), TranscriptError> {
        if self.turns.is_empty() {
            return Err(TranscriptError::Empty);
        }
        let mut previous = 0.0f64;
        for (i, turn) in self.turns.iter().enumerate() {
            if !turn.start.is_finite() || turn.start < 0.0 {
                return Err(TranscriptError::BadTimestamp { turn: i, start: turn.start });
            }
            if turn.start < previous {
                return Err(TranscriptError::NonMonotonic { turn: i, start: turn.start, previous });
            }
            previous = turn.start;
            let len = turn.text.chars().count();
            if let Some(tag) = turn.tags.iter().find(|t| t.offset > len) {
                return Err(TranscriptError::Malformed {
                    line: i + 1,
                    message: format!("tag `{}` offset {} beyond text length {len}", tag.name, tag.offset),
                });
            }
        }
        Ok(())
    }

    /// Serializes back to the interchange format, re-inserting tags inline.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for turn in &self.turns {
            let text = turn.text_with_tags();
            let rec = TurnRecordOut { speaker: &turn.speaker, start: turn.start, text: &text };
            out.push_str(&serde_json::to_string(&rec).expect("turn serializes"));
            out.push('\n');
        }
        out
    }
}

/// Parses a transcript document. Blank lines are ignored.
pub fn parse_transcript(
    raw: &[u8],
    interview_id: &str,
    domain_hint: Option<Domain>,
) -> Result<Transcript, TranscriptError> {
    let doc = std::str::from_utf8(raw).map_err(|e| TranscriptError::Encoding(e.to_string()))?;
    let mut turns = Vec::new();
    for (lineno, line) in doc.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: TurnRecord = serde_json::from_str(line)
            .map_err(|e| TranscriptError::Malformed { line: lineno + 1, message: e.to_string() })?;
        let (text, tags) = lift_tags(&rec.text);
        turns.push(SpeakerTurn { speaker: rec.speaker, start: rec.start, text, tags });
    }
    let transcript = Transcript { interview_id: interview_id.to_string(), domain_hint, turns };
    transcript.validate()?;
    Ok(transcript)
}

/// Up to `before + 1 + after` turns around `center`, clipped at the ends.
pub fn turn_window(
    transcript: &Transcript,
    center: usize,
    before: usize,
    after: usize,
) -> Result<&[SpeakerTurn], TranscriptError> {
    let len = transcript.turns.len();
    if center >= len {
        return Err(TranscriptError::TurnOutOfRange { index: center, len });
    }
    let lo = center.saturating_sub(before);
    let hi = center.saturating_add(after).saturating_add(1).min(len);
    Ok(&transcript.turns[lo..hi])
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG1: &str = concat!(
        r#"{"speaker":"Speaker 1","start":605.0,"text":"What's the capacity of those barns?"}"#,
        "\n",
        r#"{"speaker":"Speaker 2","start":608.5,"text":"We have 4 4300 faring... and then 1200 nursery."}"#,
        "\n",
        r#"{"speaker":"Speaker 2","start":615.2,"text":"And about 2000 Souths <affirmative>."}"#,
        "\n"
    );

    #[test]
    fn parses_figure_one_dialogue() {
        let t = parse_transcript(FIG1.as_bytes(), "fig1", Some(Domain::Pork)).unwrap();
        assert_eq!(t.turns.len(), 3);
        assert!(t.turns[1].text.contains("4 4300 faring"));
        assert_eq!(t.turns[2].tags, vec![AtmosphericTag { name: "affirmative".into(), offset: 22 }]);
    }

    #[test]
    fn lifts_tag_with_hand_counted_offset() {
        let (text, tags) = lift_tags("Uh, yeah <affirmative>.");
        assert_eq!(text, "Uh, yeah .");
        assert_eq!(tags, vec![AtmosphericTag { name: "affirmative".into(), offset: 9 }]);
    }

    #[test]
    fn empty_document_is_rejected() {
        assert_eq!(parse_transcript(b"\n\n", "x", None), Err(TranscriptError::Empty));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let doc = "{\"speaker\":\"A\",\"start\":0,\"text\":\"hi\"}\nnot json\n";
        match parse_transcript(doc.as_bytes(), "x", None) {
            Err(TranscriptError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_monotonic_timestamps_name_the_turn() {
        let doc = concat!(
            r#"{"speaker":"A","start":5,"text":"a"}"#, "\n",
            r#"{"speaker":"B","start":9,"text":"b"}"#, "\n",
            r#"{"speaker":"A","start":7,"text":"c"}"#, "\n"
        );
        match parse_transcript(doc.as_bytes(), "x", None) {
            Err(TranscriptError::NonMonotonic { turn, .. }) => assert_eq!(turn, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn invalid_utf8_is_an_encoding_error() {
        assert!(matches!(parse_transcript(&[0xff, 0xfe], "x", None), Err(TranscriptError::Encoding(_))));
    }

    fn ten_turns() -> Transcript {
        Transcript {
            interview_id: "t".into(),
            domain_hint: None,
            turns: (0..10).map(|i| SpeakerTurn::new("S", i as f64, format!("turn {i}"))).collect(),
        }
    }

    #[test]
    fn window_clips_at_start() {
        let t = ten_turns();
        assert_eq!(turn_window(&t, 0, 3, 0).unwrap().len(), 1);
    }

    #[test]
    fn window_in_the_middle() {
        let t = ten_turns();
        let w = turn_window(&t, 5, 2, 1).unwrap();
        let texts: Vec<_> = w.iter().map(|x| x.text.as_str()).collect();
        assert_eq!(texts, ["turn 3", "turn 4", "turn 5", "turn 6"]);
    }

    #[test]
    fn window_reaches_the_question_in_figure_one() {
        let t = parse_transcript(FIG1.as_bytes(), "fig1", None).unwrap();
        let center = t.turns.iter().position(|x| x.text.contains("1200 nursery")).unwrap();
        let w = turn_window(&t, center, 3, 0).unwrap();
        assert!(w.iter().any(|x| x.text.contains("capacity of those barns")));
    }

    #[test]
    fn window_rejects_bad_center() {
        let t = ten_turns();
        assert!(matches!(turn_window(&t, 10, 1, 1), Err(TranscriptError::TurnOutOfRange { .. })));
    }

    #[test]
    fn tags_at_end_of_text_survive_serialization() {
        let (text, tags) = lift_tags("ok <laugh>");
        let turn = SpeakerTurn { speaker: "A".into(), start: 0.0, text, tags };
        assert_eq!(turn.text_with_tags(), "ok <laugh>");
    }
}
