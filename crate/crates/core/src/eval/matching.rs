//! Exact-match scoring in total and core modes.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::gold::GoldRecord;
use crate::record::GroundedRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Total,
    Core,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::Total, Mode::Core];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Total => "total",
            Mode::Core => "core",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    /// Gold record matched by a prediction.
    Hit { gold: usize, pred: usize },
    /// Prediction with no gold counterpart.
    Spurious { pred: usize },
    /// Gold record nobody predicted.
    Missed { gold: usize },
    /// Unmatched gold record whose variant group was matched elsewhere.
    Excused { gold: usize },
    /// Correct prediction outside the scored set (core mode only).
    Ignored { pred: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Counts { tp, fp, fn_ }
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl std::iter::Sum for Counts {
    fn sum<I: Iterator<Item = Counts>>(iter: I) -> Counts {
        iter.fold(Counts::default(), |a, b| a + b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub mode: Mode,
    pub counts: Counts,
    pub detail: Vec<Outcome>,
}

fn unit_eq(a: Option<&str>, b: Option<&str>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x.eq_ignore_ascii_case(y),
        _ => false,
    }
}

pub fn record_matches(p: &GroundedRecord, g: &GoldRecord) -> bool {
    p.grounding_id == g.node_id && p.value.canonical() == g.value.canonical() && unit_eq(p.unit.as_deref(), g.unit.as_deref())
}

/// Greedy assignment: gold records in input order each take the first
/// unused matching prediction. Returns `pred -> gold` links.
fn assign(pred: &[GroundedRecord], gold: &[GoldRecord]) -> Vec<Option<usize>> {
    let mut taken = vec![None; pred.len()];
    for (gi, g) in gold.iter().enumerate() {
        if let Some(pi) = (0..pred.len()).find(|&pi| taken[pi].is_none() && record_matches(&pred[pi], g)) {
            taken[pi] = Some(gi);
        }
    }
    taken
}

/// Scoring unit of a gold record: its variant group, or itself.
fn unit_of(g: &GoldRecord, idx: usize) -> (bool, String) {
    match &g.variant_group {
        Some(v) => (true, v.clone()),
        None => (false, idx.to_string()),
    }
}

pub fn match_records(pred: &[GroundedRecord], gold: &[GoldRecord], mode: Mode) -> MatchResult {
    let links = assign(pred, gold);
    let mut gold_hit = vec![None; gold.len()];
    for (pi, l) in links.iter().enumerate() {
        if let Some(gi) = l {
            gold_hit[*gi] = Some(pi);
        }
    }
    let matched_units: BTreeSet<(bool, String)> =
        gold.iter().enumerate().filter(|(gi, _)| gold_hit[*gi].is_some()).map(|(gi, g)| unit_of(g, gi)).collect();

    let mut detail = Vec::new();
    let mut counts = Counts::default();
    match mode {
        Mode::Total => {
            for (gi, g) in gold.iter().enumerate() {
                match gold_hit[gi] {
                    Some(pi) => {
                        counts.tp += 1;
                        detail.push(Outcome::Hit { gold: gi, pred: pi });
                    }
                    None if g.variant_group.is_some() && matched_units.contains(&unit_of(g, gi)) => {
                        detail.push(Outcome::Excused { gold: gi })
                    }
                    None => {
                        counts.fn_ += 1;
                        detail.push(Outcome::Missed { gold: gi });
                    }
                }
            }
        }
        Mode::Core => {
            let mut credited = BTreeSet::new();
            let mut missed = BTreeSet::new();
            for (gi, g) in gold.iter().enumerate() {
                let unit = unit_of(g, gi);
                match gold_hit[gi] {
                    Some(pi) if g.essential && credited.insert(unit.clone()) => {
                        counts.tp += 1;
                        detail.push(Outcome::Hit { gold: gi, pred: pi });
                    }
                    Some(pi) => detail.push(Outcome::Ignored { pred: pi }),
                    None if !g.essential => {}
                    None if matched_units.contains(&unit) => detail.push(Outcome::Excused { gold: gi }),
                    None => {
                        if missed.insert(unit) {
                            counts.fn_ += 1;
                        }
                        detail.push(Outcome::Missed { gold: gi });
                    }
                }
            }
        }
    }
    for (pi, l) in links.iter().enumerate() {
        if l.is_none() {
            counts.fp += 1;
            detail.push(Outcome::Spurious { pred: pi });
        }
    }
    MatchResult { mode, counts, detail }
}

/// Precision, recall and F1 in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub mode: Mode,
}

pub fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

impl Metrics {
    /// With neither gold nor predictions the score is a vacuous 100.
    pub fn from_counts(c: Counts, mode: Mode) -> Metrics {
        let (precision, recall) = if c.tp + c.fp + c.fn_ == 0 {
            log::debug!("{mode}: no gold and no predictions; scoring 100");
            (100.0, 100.0)
        } else {
            let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { 100.0 * a as f64 / b as f64 };
            (ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn_))
        };
        Metrics { precision, recall, f1: harmonic(precision, recall), tp: c.tp, fp: c.fp, fn_: c.fn_, mode }
    }

    pub fn counts(&self) -> Counts {
        Counts::new(self.tp, self.fp, self.fn_)
    }
}

pub fn score(pred: &[GroundedRecord], gold: &[GoldRecord], mode: Mode) -> Metrics {
    Metrics::from_counts(match_records(pred, gold, mode).counts, mode)
}
