//! The rule-based backend: annotate, extract fragments per domain segment,
//! assemble identifier-value pairs, ground them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{assemble_with_fallback, AssemblyConfig, IdentifierValuePair};
use crate::grounding::{Grounder, GroundingError};
use crate::record::GroundedRecord;
use crate::rules::{extract_fragments, AnnotationError, Annotator, Fragment, KnowledgeBase, RuleSet, SentenceAnnotation};
use crate::segmentation::{segment_by_markers, MarkerTemplate};
use crate::timing::StageTimer;
use crate::transcript::{Domain, Transcript};

#[derive(Debug, Error)]
pub enum NsError {
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Grounding(#[from] GroundingError),
}

pub struct NsResources {
    pub rules: RuleSet,
    pub assembly: AssemblyConfig,
    pub grounder: Grounder,
    pub annotator: Box<dyn Annotator>,
    pub markers: Vec<MarkerTemplate>,
    /// Shared KB merged with each domain's KB.
    kbs: BTreeMap<Domain, KnowledgeBase>,
}

impl NsResources {
    /// `kbs` holds domain-specific bases and at most one shared base
    /// (`domain == None`), which is merged into every domain.
    pub fn new(
        rules: RuleSet,
        kbs: &[KnowledgeBase],
        assembly: AssemblyConfig,
        grounder: Grounder,
        annotator: Box<dyn Annotator>,
        markers: Vec<MarkerTemplate>,
    ) -> Self {
        let shared: Vec<&KnowledgeBase> = kbs.iter().filter(|k| k.domain.is_none()).collect();
        let mut by_domain = BTreeMap::new();
        for d in Domain::KNOWN.iter().copied().chain([Domain::Unknown]) {
            let parts: Vec<&KnowledgeBase> = kbs.iter().filter(|k| k.domain == Some(d)).chain(shared.iter().copied()).collect();
            by_domain.insert(d, KnowledgeBase::merged(parts));
        }
        let all = KnowledgeBase::merged(kbs);
        let assembly = assembly.with_unit_pairings(&all.unit_compatibility());
        NsResources { rules, assembly, grounder, annotator, markers, kbs: by_domain }
    }

    pub fn kb_for(&self, d: Domain) -> &KnowledgeBase {
        &self.kbs[&d]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NsOutput {
    pub fragments: Vec<Fragment>,
    pub pairs: Vec<IdentifierValuePair>,
    pub records: Vec<GroundedRecord>,
}

pub fn extract_by_segment(t: &Transcript, annos: &[SentenceAnnotation], res: &NsResources) -> Vec<Fragment> {
    let mut out = Vec::new();
    for seg in segment_by_markers(t, &res.markers) {
        let subset: Vec<SentenceAnnotation> = annos.iter().filter(|a| seg.turn_range.contains(&a.span.turn)).cloned().collect();
        out.extend(extract_fragments(t, &subset, &res.rules, res.kb_for(seg.domain)));
    }
    out
}

pub fn run_ns_pipeline(t: &Transcript, res: &NsResources, timer: &mut StageTimer) -> Result<NsOutput, NsError> {
    let annos = timer.time("ns.annotate", || res.annotator.annotate(t))?;
    let fragments = timer.time("ns.extract", || extract_by_segment(t, &annos, res));
    let pairs = timer.time("ns.assemble", || assemble_with_fallback(&fragments, &res.assembly));
    let records = timer.time("ns.ground", || res.grounder.ground_all(&pairs))?;
    Ok(NsOutput { fragments, pairs, records })
}
