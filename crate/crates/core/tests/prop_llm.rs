mod common;

use std::collections::BTreeSet;
use std::sync::LazyLock;

use farmtalk::cli::{BackendChoice, Resources};
use farmtalk::llm::prompt::PROMPT_TEMPLATE;
use farmtalk::llm::{build_prompt, map_fields, run_llm_pipeline, verify_output, FieldType, ValidatedRecord};
use farmtalk::preprocess::preprocess_pipeline;
use farmtalk::record::RecordValue;
use proptest::prelude::*;
use serde_json::{json, Map, Value};

static RES: LazyLock<Resources> = LazyLock::new(|| common::fixture_resources(BackendChoice::Llm));

const WORDS: &[&str] = &["pits", "deep", "lagoon", "corn", "wheat", "years", "rotary", "carousel", "we", "have", "the", "barn", "4", "six"];

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..4).prop_map(|w| w.join(" "))
}

fn words(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()).map(str::to_lowercase).collect()
}

fn json_value() -> impl Strategy<Value = Value> {
    prop_oneof![
        phrase().prop_map(Value::from),
        prop::collection::vec(phrase(), 0..3).prop_map(|v| json!(v)),
        (0i64..10_000).prop_map(Value::from),
        prop::bool::ANY.prop_map(Value::from),
        Just(Value::Null),
    ]
}

proptest! {
    #[test]
    fn kept_strings_overlap_their_block(block in phrase(), items in prop::collection::vec(prop::collection::vec(json_value(), 0..5), 0..4)) {
        let schemas = &RES.llm.as_ref().unwrap().schemas;
        for s in schemas {
            let arr: Vec<Value> = items
                .iter()
                .map(|vals| Value::Object(s.fields.iter().zip(vals).map(|(f, v)| (f.name.clone(), v.clone())).collect::<Map<_, _>>()))
                .collect();
            let raw = Value::Array(arr).to_string();
            let block_words = words(&block);
            for r in verify_output(&raw, s, &block) {
                if let RecordValue::Text(t) = &r.value {
                    prop_assert!(!words(t).is_disjoint(&block_words), "`{}` kept for block `{}`", t, block);
                }
                let ok = match (&r.value, r.field_type) {
                    (RecordValue::Number(n), FieldType::Integer) => n.fract() == 0.0,
                    (RecordValue::Number(_), FieldType::Number) | (RecordValue::Bool(_), FieldType::Boolean) => true,
                    (RecordValue::Text(_), FieldType::String | FieldType::StringList) => true,
                    _ => false,
                };
                prop_assert!(ok, "{:?}", r);
            }
        }
    }

    #[test]
    fn mapped_records_fit_their_nodes(vals in prop::collection::vec((0usize..64, json_value()), 0..12)) {
        let llm = RES.llm.as_ref().unwrap();
        let fields: Vec<_> = llm.schemas.iter().flat_map(|s| s.fields.iter().map(move |f| (s, f))).collect();
        let mut validated: Vec<ValidatedRecord> = Vec::new();
        for (i, v) in vals {
            let (s, f) = fields[i % fields.len()];
            let raw = json!([{ f.name.clone(): v }]).to_string();
            validated.extend(verify_output(&raw, s, "pits corn wheat years barn we have 4"));
        }
        for r in map_fields(&validated, &llm.field_map, &llm.ontology) {
            let node = llm.ontology.get(&r.grounding_id).unwrap();
            prop_assert_eq!(r.value.value_type(), node.value_type);
        }
    }

    #[test]
    fn prompts_are_byte_stable(block in "[a-z `{}]{1,40}") {
        prop_assume!(!block.trim().is_empty());
        for s in &RES.llm.as_ref().unwrap().schemas {
            let a = build_prompt(s, &block).unwrap();
            prop_assert_eq!(&a, &build_prompt(s, &block).unwrap());
            prop_assert_eq!(a.matches("```").count(), PROMPT_TEMPLATE.matches("```").count());
            prop_assert!(a.contains(&block.replace('`', "'")));
        }
    }
}

#[test]
fn replay_runs_are_identical() {
    let llm = RES.llm.as_ref().unwrap();
    let chat = RES.chat.as_ref().unwrap();
    for raw in RES.transcripts.iter().map(|t| t.as_ref().unwrap()) {
        let (t, _) = preprocess_pipeline(raw, &RES.preprocess);
        let a = run_llm_pipeline(&t, llm, chat.as_ref());
        let b = run_llm_pipeline(&t, llm, chat.as_ref());
        assert!(a.failures.is_empty(), "{:?}", a.failures);
        assert_eq!(a.records, b.records);
        assert_eq!(serde_json::to_string(&a.validated).unwrap(), serde_json::to_string(&b.validated).unwrap());
        for r in &a.records {
            assert_eq!(r.value.value_type(), llm.ontology.get(&r.grounding_id).unwrap().value_type);
        }
    }
}
