//! Schema-guided extraction with a chat model, followed by verification and
//! field mapping onto the ontology.

pub mod backend;
pub mod fieldmap;
pub mod pipeline;
pub mod prompt;
pub mod schema;
pub mod verify;

use thiserror::Error;

pub use backend::{build_backend, ChatBackend, ChatBackendConfig, ChatRequest, ReplayBackend, ReplayRecord};
pub use fieldmap::{map_fields, FieldMap};
pub use pipeline::{run_llm_pipeline, LlmOutput, LlmResources};
pub use prompt::build_prompt;
pub use schema::{ExtractionSchema, FieldType};
pub use verify::{verify_output, ValidatedRecord};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("block text is empty")]
    EmptyBlock,
    #[error("request to {0} timed out")]
    Timeout(String),
    #[error("no replay entry for schema `{schema}` (key {key})")]
    MissingReplay { key: String, schema: String },
    #[error("response of ~{tokens} tokens exceeds max_tokens {max_tokens}")]
    Truncated { tokens: usize, max_tokens: u32 },
    #[error("chat endpoint error: {0}")]
    Http(String),
    #[error("replay store: {0}")]
    Replay(String),
    #[error("chat backend config: {0}")]
    Config(String),
}
