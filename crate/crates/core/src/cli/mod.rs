//! Batch entry point: manifest loading, validation and runs.

pub mod load;
pub mod manifest;
pub mod run;

use std::path::PathBuf;

use serde::Serialize;

pub use load::{load_resources, Diagnostic, Resources};
pub use manifest::Manifest;
pub use run::{run, validate, RunError, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Ns,
    Llm,
    Both,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub manifest: PathBuf,
    pub backend: BackendChoice,
    pub gold: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub chat_endpoint: Option<String>,
    pub replay: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(manifest: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            manifest: manifest.into(),
            backend: BackendChoice::Both,
            gold: None,
            out: out.into(),
            seed: 0,
            workers: 4,
            chat_endpoint: None,
            replay: None,
        }
    }
}
