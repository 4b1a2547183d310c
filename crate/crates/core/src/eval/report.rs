//! Per-backend reports (macro-averaged per domain) and the side-by-side
//! backend comparison table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci, BootstrapConfig, ConfidenceInterval};
use super::gold::GoldSet;
use super::matching::{match_records, Counts, Metrics, Mode};
use super::EvalError;
use crate::record::{Backend, GroundedRecord};
use crate::transcript::Domain;

pub const AVERAGE: &str = "Average";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapUnit {
    /// Resample whole interviews; the statistic is the macro average.
    Interview,
    /// Resample individual tp/fp/fn outcomes; the statistic is pooled.
    Item,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub bootstrap: BootstrapConfig,
    pub unit: BootstrapUnit,
    pub overlap_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { bootstrap: BootstrapConfig::default(), unit: BootstrapUnit::Interview, overlap_threshold: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Precision,
    Recall,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Precision, Metric::Recall, Metric::F1];

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            Metric::Precision => m.precision,
            Metric::Recall => m.recall,
            Metric::F1 => m.f1,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Metric::Precision => "P",
            Metric::Recall => "R",
            Metric::F1 => "F1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterviewScore {
    pub interview_id: String,
    pub domain: Domain,
    pub total: Metrics,
    pub core: Metrics,
}

impl InterviewScore {
    pub fn metrics(&self, mode: Mode) -> &Metrics {
        match mode {
            Mode::Total => &self.total,
            Mode::Core => &self.core,
        }
    }
}

/// Averaged scores; F1 is the mean of F1 values, not recombined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ci: BTreeMap<Metric, ConfidenceInterval>,
}

impl MacroScore {
    pub fn new(precision: f64, recall: f64, f1: f64) -> Self {
        MacroScore { precision, recall, f1, ci: BTreeMap::new() }
    }

    pub fn get(&self, m: Metric) -> f64 {
        match m {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub total: MacroScore,
    pub core: MacroScore,
}

impl ReportRow {
    pub fn score(&self, mode: Mode) -> &MacroScore {
        match mode {
            Mode::Total => &self.total,
            Mode::Core => &self.core,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub backend: Backend,
    pub interviews: Vec<InterviewScore>,
    /// One row per domain present, then the average of the domain rows.
    pub rows: Vec<ReportRow>,
}

pub fn domain_label(d: Domain) -> String {
    let s = d.as_str();
    s[..1].to_uppercase() + &s[1..]
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean over domains of the per-domain mean.
fn domain_macro(scores: &[&InterviewScore], f: impl Fn(&InterviewScore) -> f64) -> f64 {
    let mut by: BTreeMap<Domain, Vec<f64>> = BTreeMap::new();
    for s in scores {
        by.entry(s.domain).or_default().push(f(s));
    }
    mean(by.values().map(|v| mean(v.iter().copied())))
}

/// Splits counts into unit outcomes for item-level resampling.
fn explode(c: Counts) -> impl Iterator<Item = Counts> {
    std::iter::repeat_n(Counts::new(1, 0, 0), c.tp)
        .chain(std::iter::repeat_n(Counts::new(0, 1, 0), c.fp))
        .chain(std::iter::repeat_n(Counts::new(0, 0, 1), c.fn_))
}

fn row_for(scores: &[&InterviewScore], label: String, cfg: &EvalConfig, with_ci: bool) -> Result<ReportRow, EvalError> {
    let mode_score = |mode: Mode| -> Result<MacroScore, EvalError> {
        let val = |m: Metric| domain_macro(scores, |s| m.of(s.metrics(mode)));
        let mut out = MacroScore::new(val(Metric::Precision), val(Metric::Recall), val(Metric::F1));
        if with_ci {
            for m in Metric::ALL {
                let ci = match cfg.unit {
                    BootstrapUnit::Interview => {
                        bootstrap_ci(scores, |xs: &[&&InterviewScore]| domain_macro(&xs.iter().map(|s| **s).collect::<Vec<_>>(), |s| m.of(s.metrics(mode))), &cfg.bootstrap)?
                    }
                    BootstrapUnit::Item => {
                        let items: Vec<Counts> = scores.iter().flat_map(|s| explode(s.metrics(mode).counts())).collect();
                        if items.is_empty() {
                            continue;
                        }
                        bootstrap_ci(&items, |xs: &[&Counts]| m.of(&Metrics::from_counts(xs.iter().map(|c| **c).sum(), mode)), &cfg.bootstrap)?
                    }
                };
                out.ci.insert(m, ci);
            }
        }
        Ok(out)
    };
    Ok(ReportRow { label, total: mode_score(Mode::Total)?, core: mode_score(Mode::Core)? })
}

/// One prediction set per interview, with its domain.
pub struct InterviewRun<'a> {
    pub interview_id: &'a str,
    pub domain: Domain,
    pub records: &'a [GroundedRecord],
}

pub fn score_interviews(runs: &[InterviewRun<'_>], gold: &GoldSet) -> Vec<InterviewScore> {
    runs.iter()
        .map(|r| {
            let g = gold.for_interview(r.interview_id);
            let m = |mode| Metrics::from_counts(match_records(r.records, g, mode).counts, mode);
            InterviewScore { interview_id: r.interview_id.to_string(), domain: r.domain, total: m(Mode::Total), core: m(Mode::Core) }
        })
        .collect()
}

/// Scores each interview, then builds domain rows and their average. Pass
/// `with_ci = false` to skip the bootstrap.
pub fn evaluate(backend: Backend, runs: &[InterviewRun<'_>], gold: &GoldSet, cfg: &EvalConfig, with_ci: bool) -> Result<EvalReport, EvalError> {
    let mut ids = BTreeSet::new();
    for r in runs {
        if !ids.insert(r.interview_id) {
            return Err(EvalError::InterviewMismatch(format!("interview `{}` scored twice", r.interview_id)));
        }
    }
    for g in gold.interviews() {
        if !ids.contains(g) {
            log::warn!("gold interview `{g}` was not run");
        }
    }
    let interviews = score_interviews(runs, gold);
    let domains: BTreeSet<Domain> = interviews.iter().map(|s| s.domain).collect();
    let mut rows = Vec::new();
    for d in &domains {
        let scores: Vec<&InterviewScore> = interviews.iter().filter(|s| s.domain == *d).collect();
        rows.push(row_for(&scores, domain_label(*d), cfg, with_ci)?);
    }
    if !interviews.is_empty() {
        let all: Vec<&InterviewScore> = interviews.iter().collect();
        let mut avg = row_for(&all, AVERAGE.to_string(), cfg, with_ci)?;
        // point values are the plain mean of the domain rows
        for mode in Mode::ALL {
            let n = rows.len() as f64;
            let s = match mode {
                Mode::Total => &mut avg.total,
                Mode::Core => &mut avg.core,
            };
            s.precision = rows.iter().map(|r| r.score(mode).precision).sum::<f64>() / n;
            s.recall = rows.iter().map(|r| r.score(mode).recall).sum::<f64>() / n;
            s.f1 = rows.iter().map(|r| r.score(mode).f1).sum::<f64>() / n;
        }
        rows.push(avg);
    }
    Ok(EvalReport { backend, interviews, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mode: Mode,
    pub metric: Metric,
    pub values: [f64; 2],
    pub bold: Option<Backend>,
    pub overlap: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub backends: [Backend; 2],
    pub rows: Vec<ComparisonRow>,
    pub notes: Vec<String>,
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Lays two backends' rows side by side. Matching row labels are required;
/// the higher value of each cell (at one decimal) is bolded.
pub fn layout_comparison(
    backends: [Backend; 2],
    rows: [&[ReportRow]; 2],
    overlap_threshold: f64,
) -> Result<ComparisonTable, EvalError> {
    let labels = |rs: &[ReportRow]| rs.iter().map(|r| r.label.clone()).collect::<Vec<_>>();
    if labels(rows[0]) != labels(rows[1]) {
        return Err(EvalError::InterviewMismatch(format!("row sets differ: {:?} vs {:?}", labels(rows[0]), labels(rows[1]))));
    }
    let mut out_rows = Vec::new();
    let mut notes = Vec::new();
    for (a, b) in rows[0].iter().zip(rows[1]) {
        let mut cells = Vec::new();
        for mode in Mode::ALL {
            for metric in Metric::ALL {
                let (sa, sb) = (a.score(mode), b.score(mode));
                let values = [sa.get(metric), sb.get(metric)];
                let (ra, rb) = (round1(values[0]), round1(values[1]));
                let bold = if ra > rb {
                    Some(backends[0])
                } else if rb > ra {
                    Some(backends[1])
                } else {
                    None
                };
                let overlap = match (sa.ci.get(&metric), sb.ci.get(&metric)) {
                    (Some(x), Some(y)) => Some(x.overlap_fraction(y)),
                    _ => None,
                };
                let significant = overlap.is_some_and(|o| o < overlap_threshold) && bold.is_some();
                if significant {
                    notes.push(format!(
                        "{} {} {}: {} higher, intervals overlap {:.0}%",
                        a.label,
                        mode,
                        metric.short(),
                        bold.expect("significant implies a winner"),
                        100.0 * overlap.unwrap_or(0.0)
                    ));
                }
                cells.push(Cell { mode, metric, values, bold, overlap, significant });
            }
        }
        out_rows.push(ComparisonRow { label: a.label.clone(), cells });
    }
    if notes.is_empty() {
        notes.push("no significant difference".to_string());
    }
    Ok(ComparisonTable { backends, rows: out_rows, notes })
}

/// Compares the NS and LLM reports; both must cover the same interviews.
pub fn compare_backends(reports: &BTreeMap<Backend, EvalReport>, overlap_threshold: f64) -> Result<ComparisonTable, EvalError> {
    let (Some(ns), Some(llm)) = (reports.get(&Backend::Ns), reports.get(&Backend::Llm)) else {
        return Err(EvalError::InterviewMismatch("comparison needs both ns and llm reports".into()));
    };
    let ids = |r: &EvalReport| r.interviews.iter().map(|s| s.interview_id.clone()).collect::<BTreeSet<_>>();
    if ids(ns) != ids(llm) {
        return Err(EvalError::InterviewMismatch(format!("ns covers {:?}, llm covers {:?}", ids(ns), ids(llm))));
    }
    layout_comparison([Backend::Ns, Backend::Llm], [&ns.rows, &llm.rows], overlap_threshold)
}

impl ComparisonTable {
    pub fn cell(&self, label: &str, mode: Mode, metric: Metric) -> Option<&Cell> {
        self.rows.iter().find(|r| r.label == label)?.cells.iter().find(|c| c.mode == mode && c.metric == metric)
    }

    pub fn render(&self) -> String {
        let mut s = String::from("| Domain | System | Total P | Total R | Total F1 | Core P | Core R | Core F1 |\n");
        s.push_str("|---|---|---:|---:|---:|---:|---:|---:|\n");
        for row in &self.rows {
            for (k, b) in self.backends.iter().enumerate() {
                let _ = write!(s, "| {} | {} |", row.label, b.as_str().to_uppercase());
                for c in &row.cells {
                    let v = format!("{:.1}", c.values[k]);
                    if c.bold == Some(*b) {
                        let _ = write!(s, " **{v}** |");
                    } else {
                        let _ = write!(s, " {v} |");
                    }
                }
                s.push('\n');
            }
        }
        s.push('\n');
        for n in &self.notes {
            let _ = writeln!(s, "- {n}");
        }
        s
    }
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut s = format!("# {} evaluation\n\n| Interview | Domain | Mode | TP | FP | FN | P | R | F1 |\n|---|---|---|---:|---:|---:|---:|---:|---:|\n", self.backend.as_str().to_uppercase());
        for i in &self.interviews {
            for m in [&i.total, &i.core] {
                let _ = writeln!(
                    s,
                    "| {} | {} | {} | {} | {} | {} | {:.1} | {:.1} | {:.1} |",
                    i.interview_id, i.domain.as_str(), m.mode, m.tp, m.fp, m.fn_, m.precision, m.recall, m.f1
                );
            }
        }
        s.push_str("\n| Row | Mode | P | R | F1 | 95% CI (F1) |\n|---|---|---:|---:|---:|---|\n");
        for r in &self.rows {
            for mode in Mode::ALL {
                let sc = r.score(mode);
                let ci = sc.ci.get(&Metric::F1).map_or(String::from("-"), |c| format!("[{:.1}, {:.1}]", c.lower, c.upper));
                let _ = writeln!(s, "| {} | {} | {:.1} | {:.1} | {:.1} | {} |", r.label, mode, sc.precision, sc.recall, sc.f1, ci);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::gold::GoldRecord;
    use crate::record::RecordValue;

    fn rec(node: &str, v: f64, backend: Backend) -> GroundedRecord {
        GroundedRecord {
            grounding: node.into(),
            grounding_id: node.into(),
            value: RecordValue::Number(v),
            unit: None,
            provenance: vec![],
            block_turns: None,
            backend,
            score: None,
        }
    }

    fn gold() -> GoldSet {
        GoldSet::new(vec![
            GoldRecord::new("p1", "a", RecordValue::Number(1.0)),
            GoldRecord::new("p1", "b", RecordValue::Number(2.0)),
            GoldRecord::new("c1", "a", RecordValue::Number(3.0)),
        ])
        .unwrap()
    }

    #[test]
    fn macro_rows_average_interviews_then_domains() {
        let p1 = [rec("a", 1.0, Backend::Ns)];
        let c1 = [rec("a", 3.0, Backend::Ns), rec("z", 0.0, Backend::Ns)];
        let runs = [
            InterviewRun { interview_id: "p1", domain: Domain::Pork, records: &p1 },
            InterviewRun { interview_id: "c1", domain: Domain::Crop, records: &c1 },
        ];
        let r = evaluate(Backend::Ns, &runs, &gold(), &EvalConfig::default(), false).unwrap();
        let labels: Vec<&str> = r.rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["Pork", "Crop", AVERAGE]);
        assert_eq!((r.rows[0].total.precision, r.rows[0].total.recall), (100.0, 50.0));
        assert_eq!((r.rows[1].total.precision, r.rows[1].total.recall), (50.0, 100.0));
        assert!((r.rows[2].total.f1 - (r.rows[0].total.f1 + r.rows[1].total.f1) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_reports_have_no_bold() {
        let p1 = [rec("a", 1.0, Backend::Ns)];
        let runs = [InterviewRun { interview_id: "p1", domain: Domain::Pork, records: &p1 }];
        let cfg = EvalConfig { bootstrap: BootstrapConfig { resamples: 200, ..Default::default() }, ..Default::default() };
        let ns = evaluate(Backend::Ns, &runs, &gold(), &cfg, true).unwrap();
        let mut llm = ns.clone();
        llm.backend = Backend::Llm;
        let reports = BTreeMap::from([(Backend::Ns, ns), (Backend::Llm, llm)]);
        let t = compare_backends(&reports, 0.5).unwrap();
        assert!(t.rows.iter().flat_map(|r| &r.cells).all(|c| c.bold.is_none() && !c.significant));
        assert_eq!(t.notes, ["no significant difference"]);
    }

    #[test]
    fn disjoint_intervals_are_flagged() {
        let ci = |l: f64, u: f64| ConfidenceInterval { lower: l, upper: u, point: (l + u) / 2.0, level: 95.0, resamples: 10 };
        let row = |v: f64, c: ConfidenceInterval| {
            let mut s = MacroScore::new(v, v, v);
            s.ci = Metric::ALL.iter().map(|m| (*m, c)).collect();
            ReportRow { label: "Pork".into(), total: s.clone(), core: s }
        };
        let a = [row(40.0, ci(35.0, 45.0))];
        let b = [row(70.0, ci(65.0, 75.0))];
        let t = layout_comparison([Backend::Ns, Backend::Llm], [&a, &b], 0.5).unwrap();
        let c = t.cell("Pork", Mode::Total, Metric::F1).unwrap();
        assert!(c.significant);
        assert_eq!(c.bold, Some(Backend::Llm));
        assert!(t.render().contains("**70.0**"));
    }

    #[test]
    fn mismatched_interviews_rejected() {
        let p1 = [rec("a", 1.0, Backend::Ns)];
        let ns = evaluate(Backend::Ns, &[InterviewRun { interview_id: "p1", domain: Domain::Pork, records: &p1 }], &gold(), &EvalConfig::default(), false).unwrap();
        let llm = evaluate(Backend::Llm, &[InterviewRun { interview_id: "c1", domain: Domain::Pork, records: &p1 }], &gold(), &EvalConfig::default(), false).unwrap();
        let reports = BTreeMap::from([(Backend::Ns, ns), (Backend::Llm, llm)]);
        assert!(compare_backends(&reports, 0.5).is_err());
    }
}
