//! Block-wise extraction: segment, prompt per applicable schema, verify, map.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::backend::{ChatBackend, ChatRequest};
use super::fieldmap::{map_fields, FieldMap};
use super::prompt::build_prompt;
use super::schema::ExtractionSchema;
use super::verify::{verify_output, BlockRef, ValidatedRecord};
use super::LlmError;
use crate::ontology::Ontology;
use crate::record::GroundedRecord;
use crate::segmentation::{fine_segment, segment_by_markers, KeywordMap, MarkerTemplate, TopicBlock};
use crate::transcript::{Domain, Transcript};

/// Shared, read-only inputs of the LLM path.
pub struct LlmResources {
    pub schemas: Vec<ExtractionSchema>,
    pub keywords: KeywordMap,
    pub markers: Vec<MarkerTemplate>,
    pub field_map: FieldMap,
    pub ontology: Ontology,
    pub max_parallel_requests: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockFailure {
    pub topic_label: String,
    pub turn_range: (usize, usize),
    pub schema: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LlmOutput {
    pub records: Vec<GroundedRecord>,
    pub validated: Vec<ValidatedRecord>,
    pub failures: Vec<BlockFailure>,
    pub requests: usize,
}

/// `Speaker: text` lines for the turns of a block.
pub fn block_text(t: &Transcript, block: &TopicBlock) -> String {
    t.turns[block.turn_range.clone()].iter().map(|u| format!("{}: {}", u.speaker, u.text)).collect::<Vec<_>>().join("\n")
}

/// Blocks of the transcript with their segment's domain.
pub fn topic_blocks(t: &Transcript, markers: &[MarkerTemplate], km: &KeywordMap) -> Vec<(Domain, TopicBlock)> {
    segment_by_markers(t, markers)
        .iter()
        .flat_map(|seg| fine_segment(seg, t, km).into_iter().map(move |b| (seg.domain, b)))
        .filter(|(_, b)| !b.turn_range.is_empty())
        .collect()
}

/// Schemas to run on a block. Without keywords every block is untopiced and
/// all schemas for the domain apply.
fn applicable<'a>(schemas: &'a [ExtractionSchema], km: &KeywordMap, label: &str, domain: Domain) -> Vec<&'a ExtractionSchema> {
    schemas
        .iter()
        .filter(|s| if km.is_empty() { s.applies_to_domain(domain) } else { s.applies_to(label, domain) })
        .collect()
}

struct Task<'a> {
    block: &'a TopicBlock,
    text: &'a str,
    schema: &'a ExtractionSchema,
}

fn run_task(task: &Task<'_>, backend: &dyn ChatBackend) -> Result<Vec<ValidatedRecord>, LlmError> {
    let prompt = build_prompt(task.schema, task.text)?;
    let req = ChatRequest { schema_name: task.schema.name.clone(), block_text: task.text.to_string(), prompt };
    let raw = backend.complete(&req)?;
    let block = BlockRef { topic_label: task.block.topic_label.clone(), turn_range: task.block.turn_range.clone() };
    let mut out = verify_output(&raw, task.schema, task.text);
    for r in &mut out {
        r.block = Some(block.clone());
    }
    Ok(out)
}

/// Runs every applicable (block, schema) pair through the backend. Failures
/// are collected per pair; the rest of the interview still runs. Output order
/// follows block order, then schema order.
pub fn run_llm_pipeline(t: &Transcript, res: &LlmResources, backend: &dyn ChatBackend) -> LlmOutput {
    let blocks = topic_blocks(t, &res.markers, &res.keywords);
    let texts: Vec<String> = blocks.iter().map(|(_, b)| block_text(t, b)).collect();
    let tasks: Vec<Task<'_>> = blocks
        .iter()
        .zip(&texts)
        .flat_map(|((domain, block), text)| {
            applicable(&res.schemas, &res.keywords, &block.topic_label, *domain)
                .into_iter()
                .map(move |schema| Task { block, text, schema })
        })
        .collect();

    let results: Vec<Result<Vec<ValidatedRecord>, LlmError>> = match rayon::ThreadPoolBuilder::new()
        .num_threads(res.max_parallel_requests.max(1))
        .build()
    {
        Ok(pool) => pool.install(|| tasks.par_iter().map(|task| run_task(task, backend)).collect()),
        Err(e) => {
            log::warn!("request pool unavailable ({e}); running sequentially");
            tasks.iter().map(|task| run_task(task, backend)).collect()
        }
    };

    let mut out = LlmOutput { requests: tasks.len(), ..LlmOutput::default() };
    for (task, result) in tasks.iter().zip(results) {
        match result {
            Ok(v) => out.validated.extend(v),
            Err(e) => {
                log::warn!("{}: block {:?} / {}: {e}", t.interview_id, task.block.turn_range, task.schema.name);
                out.failures.push(BlockFailure {
                    topic_label: task.block.topic_label.clone(),
                    turn_range: (task.block.turn_range.start, task.block.turn_range.end),
                    schema: task.schema.name.clone(),
                    error: e.to_string(),
                });
            }
        }
    }
    out.records = map_fields(&out.validated, &res.field_map, &res.ontology);
    out
}
