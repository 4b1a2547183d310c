//! Scoring against gold records, bootstrap intervals and backend comparison.

pub mod bootstrap;
pub mod gold;
pub mod matching;
pub mod report;

use thiserror::Error;

pub use bootstrap::{bootstrap_ci, percentile, BootstrapConfig, ConfidenceInterval};
pub use gold::{GoldRecord, GoldSet};
pub use matching::{harmonic, match_records, score, Counts, MatchResult, Metrics, Mode, Outcome};
pub use report::{
    compare_backends, evaluate, layout_comparison, BootstrapUnit, ComparisonTable, EvalConfig, EvalReport, InterviewRun, MacroScore,
    Metric, ReportRow,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("bootstrap needs at least one item")]
    EmptySample,
    #[error("evaluation config: {0}")]
    Config(String),
    #[error("report mismatch: {0}")]
    InterviewMismatch(String),
}
