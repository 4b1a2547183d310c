//! Batch run: per-interview processing on a worker pool, then evaluation.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::load::{load_resources, Diagnostic, Resources};
use super::manifest::Manifest;
use super::{BackendChoice, RunConfig};
use crate::eval::{compare_backends, evaluate, BootstrapConfig, EvalConfig, InterviewRun};
use crate::llm::run_llm_pipeline;
use crate::ns::run_ns_pipeline;
use crate::preprocess::preprocess_pipeline;
use crate::record::{Backend, GroundedRecord};
use crate::segmentation::{fine_segment, segment_by_markers};
use crate::timing::{StageTimer, TimingReport};
use crate::transcript::{Domain, Transcript};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid configuration:\n{}", .0.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<Diagnostic>),
    #[error("cannot write output: {0}")]
    Output(String),
    #[error("evaluation failed: {0}")]
    Eval(String),
    #[error("every interview failed")]
    AllFailed,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct InterviewSummary {
    pub interview_id: String,
    pub domain: Option<Domain>,
    pub ns_records: Option<usize>,
    pub llm_records: Option<usize>,
    pub llm_failures: usize,
    pub corrections: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RunSummary {
    pub interviews: Vec<InterviewSummary>,
    pub failed: usize,
    pub evaluated: bool,
}

struct InterviewResult {
    summary: InterviewSummary,
    domain: Domain,
    ns: Option<Vec<GroundedRecord>>,
    llm: Option<Vec<GroundedRecord>>,
    timer: StageTimer,
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| e.to_string())?;
    s.push('\n');
    fs::write(path, s).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, s: &str) -> Result<(), String> {
    fs::write(path, s).map_err(|e| format!("{}: {e}", path.display()))
}

/// Dominant domain of a transcript: the hint, else the segment domain
/// covering most turns.
fn interview_domain(t: &Transcript, res: &Resources) -> Domain {
    if let Some(d) = t.domain_hint {
        return d;
    }
    let mut turns: BTreeMap<Domain, usize> = BTreeMap::new();
    for s in segment_by_markers(t, &res.markers) {
        *turns.entry(s.domain).or_default() += s.turn_range.len();
    }
    turns.into_iter().filter(|(d, _)| *d != Domain::Unknown).max_by_key(|(d, n)| (*n, std::cmp::Reverse(*d))).map_or(Domain::Unknown, |(d, _)| d)
}

fn process(parsed: &Result<Transcript, String>, id: &str, res: &Resources, cfg: &RunConfig, out: &Path) -> InterviewResult {
    let mut timer = StageTimer::default();
    let mut summary = InterviewSummary { interview_id: id.to_string(), ..Default::default() };
    let mut log_lines = Vec::new();
    let dir = out.join(id);
    let fail = |summary: &mut InterviewSummary, e: String| summary.error = Some(e);

    let raw = match timer.time("parse", || parsed.clone()) {
        Ok(t) => t,
        Err(e) => {
            fail(&mut summary, e);
            return InterviewResult { summary, domain: Domain::Unknown, ns: None, llm: None, timer };
        }
    };
    let (t, corrections) = timer.time("preprocess", || preprocess_pipeline(&raw, &res.preprocess));
    let domain = interview_domain(&t, res);
    summary.domain = Some(domain);
    summary.corrections = corrections.applied().count();
    let blocks = timer.time("segment", || {
        segment_by_markers(&t, &res.markers)
            .into_iter()
            .map(|s| {
                let b = fine_segment(&s, &t, &res.keywords);
                (s, b)
            })
            .collect::<Vec<_>>()
    });

    let mut ns = None;
    if let (true, Some(nsr)) = (matches!(cfg.backend, BackendChoice::Ns | BackendChoice::Both), &res.ns) {
        match run_ns_pipeline(&t, nsr, &mut timer) {
            Ok(o) => {
                summary.ns_records = Some(o.records.len());
                let _ = write_json(&dir.join("fragments.ns.json"), &o.fragments);
                let _ = write_json(&dir.join("pairs.ns.json"), &o.pairs);
                ns = Some(o.records);
            }
            Err(e) => log_lines.push(format!("ns backend failed: {e}")),
        }
    }
    let mut llm = None;
    if let (true, Some(lr), Some(chat)) = (matches!(cfg.backend, BackendChoice::Llm | BackendChoice::Both), &res.llm, &res.chat) {
        let o = timer.time("llm.extract", || run_llm_pipeline(&t, lr, chat.as_ref()));
        summary.llm_records = Some(o.records.len());
        summary.llm_failures = o.failures.len();
        for f in &o.failures {
            log_lines.push(format!("llm block {:?} [{}] schema {}: {}", f.turn_range, f.topic_label, f.schema, f.error));
        }
        let _ = write_json(&dir.join("validated.llm.json"), &o.validated);
        llm = Some(o.records);
    }

    let writes = (|| -> Result<(), String> {
        write_text(&dir.join("transcript.preprocessed.jsonl"), &t.to_jsonl())?;
        write_json(&dir.join("corrections.json"), &corrections)?;
        write_json(&dir.join("segments.json"), &blocks)?;
        if let Some(r) = &ns {
            write_json(&dir.join("records.ns.json"), r)?;
        }
        if let Some(r) = &llm {
            write_json(&dir.join("records.llm.json"), r)?;
        }
        write_text(&dir.join("log.txt"), &log_lines.iter().map(|l| format!("{l}\n")).collect::<String>())?;
        write_json(&dir.join("timings.json"), &timer)
    })();
    if let Err(e) = writes {
        log_lines.push(e);
    }
    if ns.is_none() && llm.is_none() {
        fail(&mut summary, log_lines.join("; "));
    }
    InterviewResult { summary, domain, ns, llm, timer }
}

fn eval_config(m: &Manifest, cfg: &RunConfig) -> EvalConfig {
    EvalConfig {
        bootstrap: BootstrapConfig { resamples: m.evaluation.resamples, level: m.evaluation.level, seed: cfg.seed, ..Default::default() },
        unit: m.evaluation.unit,
        overlap_threshold: m.evaluation.overlap_threshold,
    }
}

/// Validates the configuration without running extraction.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    match read_manifest(&cfg.manifest) {
        Ok(m) => load_resources(&m, cfg).1,
        Err(d) => vec![d],
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest, Diagnostic> {
    let content = fs::read_to_string(path).map_err(|e| Diagnostic::new("manifest", format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Manifest::parse(&content, base).map_err(|e| Diagnostic::new("manifest", format!("{}: {e}", path.display())))
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary, RunError> {
    let m = read_manifest(&cfg.manifest).map_err(|d| RunError::Config(vec![d]))?;
    let (res, diags) = load_resources(&m, cfg);
    let Some(res) = res else { return Err(RunError::Config(diags)) };
    fs::create_dir_all(&cfg.out).map_err(|e| RunError::Output(format!("{}: {e}", cfg.out.display())))?;
    for e in &m.interview {
        fs::create_dir_all(cfg.out.join(&e.id)).map_err(|err| RunError::Output(err.to_string()))?;
    }

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers.max(1)).build().map_err(|e| RunError::Output(e.to_string()))?;
    let results: Vec<InterviewResult> = pool.install(|| {
        m.interview.par_iter().zip(&res.transcripts).map(|(e, t)| process(t, &e.id, &res, cfg, &cfg.out)).collect()
    });

    let mut timings = TimingReport::default();
    let mut summary = RunSummary::default();
    for r in &results {
        timings.push(&r.summary.interview_id, &r.timer);
        if r.summary.error.is_some() {
            summary.failed += 1;
        }
        summary.interviews.push(r.summary.clone());
    }
    write_json(&cfg.out.join("timings.json"), &timings).map_err(RunError::Output)?;
    write_text(&cfg.out.join("timings.md"), &timings.render()).map_err(RunError::Output)?;

    if let Some(gold) = &res.gold {
        let ecfg = eval_config(&m, cfg);
        let mut reports = BTreeMap::new();
        for backend in [Backend::Ns, Backend::Llm] {
            let runs: Vec<InterviewRun<'_>> = results
                .iter()
                .filter_map(|r| {
                    let recs = if backend == Backend::Ns { r.ns.as_deref() } else { r.llm.as_deref() }?;
                    Some(InterviewRun { interview_id: &r.summary.interview_id, domain: r.domain, records: recs })
                })
                .collect();
            if runs.is_empty() {
                continue;
            }
            let report = evaluate(backend, &runs, gold, &ecfg, true).map_err(|e| RunError::Eval(e.to_string()))?;
            write_json(&cfg.out.join(format!("eval.{backend}.json")), &report).map_err(RunError::Output)?;
            write_text(&cfg.out.join(format!("eval.{backend}.md")), &report.render()).map_err(RunError::Output)?;
            reports.insert(backend, report);
        }
        if reports.len() == 2 {
            match compare_backends(&reports, ecfg.overlap_threshold) {
                Ok(table) => {
                    write_json(&cfg.out.join("comparison.json"), &table).map_err(RunError::Output)?;
                    write_text(&cfg.out.join("comparison.md"), &table.render()).map_err(RunError::Output)?;
                }
                Err(e) => log::warn!("backend comparison skipped: {e}"),
            }
        }
        summary.evaluated = !reports.is_empty();
    }
    write_json(&cfg.out.join("summary.json"), &summary).map_err(RunError::Output)?;
    if !results.is_empty() && summary.failed == results.len() {
        return Err(RunError::AllFailed);
    }
    Ok(summary)
}
