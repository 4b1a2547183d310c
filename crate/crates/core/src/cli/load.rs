//! Loads every configured resource once, collecting all problems.

use std::fmt;
use std::path::Path;
use std::time::Duration;

use super::manifest::{ChatKind, Manifest};
use super::{BackendChoice, RunConfig};
use crate::assembly::AssemblyConfig;
use crate::eval::GoldSet;
use crate::grounding::Grounder;
use crate::llm::backend::{build_backend, ChatBackendConfig, ChatBackendKind};
use crate::llm::fieldmap::FieldMap;
use crate::llm::schema::load_schemas;
use crate::llm::{ChatBackend, LlmResources};
use crate::ns::NsResources;
use crate::ontology::Ontology;
use crate::preprocess::{FillerList, GradeList, PhraseList, PreprocessConfig, RemapTable};
use crate::rules::{compile_rules, Annotator, FileAnnotator, KnowledgeBase, LexicalAnnotator, RuleSet};
use crate::segmentation::{default_markers, KeywordMap, MarkerTemplate};
use crate::transcript::{parse_transcript, Transcript};

/// One configuration problem, tagged with the manifest field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    pub fn new(field: impl Into<String>, message: impl fmt::Display) -> Self {
        Diagnostic { field: field.into(), message: message.to_string() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

pub struct Resources {
    pub preprocess: PreprocessConfig,
    pub markers: Vec<MarkerTemplate>,
    pub keywords: KeywordMap,
    pub ontology: Ontology,
    pub ns: Option<NsResources>,
    pub llm: Option<LlmResources>,
    pub chat: Option<Box<dyn ChatBackend>>,
    pub gold: Option<GoldSet>,
    pub transcripts: Vec<Result<Transcript, String>>,
}

#[derive(Default)]
struct Collector {
    diags: Vec<Diagnostic>,
}

impl Collector {
    fn take<T, E: fmt::Display>(&mut self, field: &str, r: Result<T, E>) -> Option<T> {
        r.map_err(|e| self.diags.push(Diagnostic::new(field, e))).ok()
    }

    fn opt<T, E: fmt::Display>(&mut self, field: &str, p: Option<&Path>, load: impl FnOnce(&Path) -> Result<T, E>) -> Option<T>
    where
        T: Default,
    {
        match p {
            None => Some(T::default()),
            Some(p) => self.take(field, load(p)),
        }
    }
}

pub fn chat_config(m: &Manifest, cfg: &RunConfig) -> Result<ChatBackendConfig, String> {
    let c = &m.chat;
    let endpoint = cfg.chat_endpoint.clone().or_else(|| (c.kind == ChatKind::Http).then(|| c.endpoint.clone()).flatten());
    let kind = match (&cfg.replay, endpoint) {
        (Some(p), _) => ChatBackendKind::ReplayFile { path: p.clone() },
        (None, Some(url)) => ChatBackendKind::HttpEndpoint { url, model: c.model.clone() },
        (None, None) => match (&c.kind, &c.replay) {
            (ChatKind::Replay, Some(p)) => ChatBackendKind::ReplayFile { path: p.clone() },
            (ChatKind::Replay, None) => return Err("no replay file configured".into()),
            (ChatKind::Http, None) => unreachable!("http endpoint handled above"),
            (ChatKind::Http, Some(_)) => return Err("http backend needs an endpoint".into()),
        },
    };
    Ok(ChatBackendConfig {
        kind,
        temperature: c.temperature,
        max_tokens: c.max_tokens,
        request_timeout: Duration::from_secs(c.timeout_secs),
        max_parallel_requests: c.max_parallel_requests,
    })
}

fn read_transcript(path: &Path, id: &str, domain: Option<crate::transcript::Domain>) -> Result<Transcript, String> {
    let raw = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_transcript(&raw, id, domain).map_err(|e| format!("{}: {e}", path.display()))
}

/// Loads resources for the selected backends. Returns every diagnostic;
/// resources are only returned when there are none.
pub fn load_resources(m: &Manifest, cfg: &RunConfig) -> (Option<Resources>, Vec<Diagnostic>) {
    let mut c = Collector::default();
    let r = &m.resources;
    let want_ns = matches!(cfg.backend, BackendChoice::Ns | BackendChoice::Both);
    let want_llm = matches!(cfg.backend, BackendChoice::Llm | BackendChoice::Both);

    let ontology = c.take("resources.ontology", Ontology::load(&r.ontology));
    let remap = c.opt("resources.remap", r.remap.as_deref(), RemapTable::load);
    let phrases = c.opt("resources.phrases", r.phrases.as_deref(), PhraseList::load);
    let fillers = c.opt("resources.fillers", r.fillers.as_deref(), FillerList::load);
    let grades = c.opt("resources.grades", r.grades.as_deref(), GradeList::load);
    let markers = match r.markers.as_deref() {
        Some(p) => c.take("resources.markers", MarkerTemplate::load_all(p)),
        None => Some(default_markers()),
    };
    let keywords = c.opt("resources.keywords", r.keywords.as_deref(), KeywordMap::load);

    let mut ns = None;
    if want_ns {
        let mut rules = Some(RuleSet::default());
        for (i, p) in r.rules.iter().enumerate() {
            let field = format!("resources.rules[{i}]");
            let loaded = std::fs::read_to_string(p)
                .map_err(|e| format!("{}: {e}", p.display()))
                .and_then(|s| compile_rules(&s).map_err(|e| format!("{}: {e}", p.display())));
            let loaded = c.take(&field, loaded);
            rules = match (rules, loaded) {
                (Some(acc), Some(new)) => c.take(&field, acc.merged(&new).map_err(|e| format!("{}: {e}", p.display()))),
                _ => None,
            };
        }
        let mut kbs = Some(Vec::new());
        for (i, k) in r.kb.iter().enumerate() {
            let kb = c.take(
                &format!("resources.kb[{i}]"),
                KnowledgeBase::load(k.domain, k.categories.as_deref(), k.units.as_deref(), k.identifiers.as_deref()),
            );
            kbs = kbs.zip(kb).map(|(mut v, kb)| {
                v.push(kb);
                v
            });
        }
        let assembly = c.opt("resources.assembly", r.assembly.as_deref(), AssemblyConfig::load);
        if let (Some(a), Some(kbs)) = (&assembly, &kbs) {
            let all = KnowledgeBase::merged(kbs.iter());
            let mut known: Vec<&str> = all.identifiers.keys().map(String::as_str).collect();
            known.extend(all.categories.keys().map(String::as_str));
            for problem in a.check_categories(known) {
                c.diags.push(Diagnostic::new("resources.assembly", problem));
            }
        }
        let grounder = ontology
            .clone()
            .and_then(|o| c.take("grounding", Grounder::with_default_embedder(o, m.grounding.clone())));
        let annotator: Box<dyn Annotator> = match &r.annotations {
            Some(dir) if !dir.is_dir() => {
                c.diags.push(Diagnostic::new("resources.annotations", format!("{} is not a directory", dir.display())));
                Box::new(LexicalAnnotator)
            }
            Some(dir) => Box::new(FileAnnotator::new(dir.clone())),
            None => Box::new(LexicalAnnotator),
        };
        if let (Some(rules), Some(kbs), Some(assembly), Some(grounder), Some(markers)) = (rules, kbs, assembly, grounder, markers.clone()) {
            ns = Some(NsResources::new(rules, &kbs, assembly, grounder, annotator, markers));
        }
    }

    let mut llm = None;
    let mut chat = None;
    if want_llm {
        let schemas = match &r.schemas {
            Some(p) => c.take("resources.schemas", load_schemas(p)),
            None => {
                c.diags.push(Diagnostic::new("resources.schemas", "required for the llm backend"));
                None
            }
        };
        let field_map = match &r.field_map {
            Some(p) => c.take("resources.field_map", FieldMap::load(p)),
            None => {
                c.diags.push(Diagnostic::new("resources.field_map", "required for the llm backend"));
                None
            }
        };
        if let (Some(fm), Some(o), Some(s)) = (&field_map, &ontology, &schemas) {
            for problem in fm.check(o, s) {
                c.diags.push(Diagnostic::new("resources.field_map", problem));
            }
        }
        let chat_cfg = c.take("chat", chat_config(m, cfg));
        chat = chat_cfg.and_then(|cc| c.take("chat", build_backend(&cc)));
        if let (Some(schemas), Some(field_map), Some(o), Some(km), Some(mk)) = (schemas, field_map, &ontology, &keywords, &markers) {
            llm = Some(LlmResources {
                schemas,
                keywords: km.clone(),
                markers: mk.clone(),
                field_map,
                ontology: o.clone(),
                max_parallel_requests: m.chat.max_parallel_requests,
            });
        }
    }

    let gold_path = cfg.gold.as_ref().or(r.gold.as_ref());
    let gold = match (gold_path, &ontology) {
        (Some(p), Some(o)) => c.take("gold", GoldSet::load(p, o)).map(Some),
        _ => Some(None),
    };

    if m.interview.is_empty() {
        c.diags.push(Diagnostic::new("interview", "manifest lists no interviews"));
    }
    let mut ids = std::collections::BTreeSet::new();
    let mut transcripts = Vec::new();
    for (i, e) in m.interview.iter().enumerate() {
        if !ids.insert(e.id.as_str()) {
            c.diags.push(Diagnostic::new(format!("interview[{i}]"), format!("duplicate id `{}`", e.id)));
        }
        if !e.path.is_file() {
            c.diags.push(Diagnostic::new(format!("interview[{i}].path"), format!("{} does not exist", e.path.display())));
        }
        transcripts.push(read_transcript(&e.path, &e.id, e.domain));
    }
    if m.evaluation.overlap_threshold < 0.0 || m.evaluation.overlap_threshold > 1.0 {
        c.diags.push(Diagnostic::new("evaluation.overlap_threshold", "must be within [0, 1]"));
    }

    let complete = (want_ns == ns.is_some()) && (want_llm == (llm.is_some() && chat.is_some()));
    if !c.diags.is_empty() || !complete {
        return (None, c.diags);
    }
    let res = Resources {
        preprocess: PreprocessConfig {
            remap: remap.expect("checked"),
            phrases: phrases.expect("checked"),
            fillers: fillers.expect("checked"),
            grades: grades.expect("checked"),
        },
        markers: markers.expect("checked"),
        keywords: keywords.expect("checked"),
        ontology: ontology.expect("checked"),
        ns,
        llm,
        chat,
        gold: gold.flatten(),
        transcripts,
    };
    (Some(res), Vec::new())
}
