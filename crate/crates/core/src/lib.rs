pub mod assembly;
pub mod cli;
pub mod error;
pub mod eval;
pub mod grounding;
pub mod llm;
pub mod ns;
pub mod ontology;
pub mod preprocess;
pub mod record;
pub mod rules;
pub mod segmentation;
pub mod text;
pub mod timing;
pub mod transcript;
