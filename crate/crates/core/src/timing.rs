//! Wall-clock stage timings per interview.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Ordered list of (stage, seconds).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimer {
    pub stages: Vec<(String, f64)>,
}

impl StageTimer {
    pub fn time<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let t0 = Instant::now();
        let r = f();
        self.stages.push((stage.to_string(), t0.elapsed().as_secs_f64()));
        r
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|(_, s)| s).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterviewTiming {
    pub interview_id: String,
    pub stages: Vec<(String, f64)>,
    pub total: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub interviews: Vec<InterviewTiming>,
    /// Seconds summed over interviews, per stage group (`shared`, `ns`,
    /// `llm`), where group is the stage-name prefix before the first dot.
    pub totals: BTreeMap<String, f64>,
    pub total: f64,
}

fn group(stage: &str) -> &str {
    match stage.split_once('.') {
        Some((g, _)) => g,
        None => "shared",
    }
}

impl TimingReport {
    pub fn push(&mut self, interview_id: &str, timer: &StageTimer) {
        for (name, secs) in &timer.stages {
            *self.totals.entry(group(name).to_string()).or_default() += secs;
        }
        self.total += timer.total();
        self.interviews.push(InterviewTiming {
            interview_id: interview_id.to_string(),
            stages: timer.stages.clone(),
            total: timer.total(),
        });
    }

    pub fn render(&self) -> String {
        let mut s = String::from("| Interview | Stage | Seconds |\n|---|---|---:|\n");
        for i in &self.interviews {
            for (name, secs) in &i.stages {
                s.push_str(&format!("| {} | {} | {:.3} |\n", i.interview_id, name, secs));
            }
            s.push_str(&format!("| {} | total | {:.3} |\n", i.interview_id, i.total));
        }
        for (g, secs) in &self.totals {
            s.push_str(&format!("| all | {g} | {secs:.3} |\n"));
        }
        s
    }
}
