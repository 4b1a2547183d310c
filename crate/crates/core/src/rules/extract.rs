//! Executes a rule set and the knowledge-base scanner over annotated
//! sentences.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use rayon::prelude::*;

use super::annotation::SentenceAnnotation;
use super::grammar::{DepCapture, PatternItem, Rule, RuleBody, RuleSet, TokenConstraint};
use super::kb::{Entry, KnowledgeBase};
use super::{Fragment, FragmentKind, Span};
use crate::text::parse_number;
use crate::transcript::Transcript;

/// Source name of fragments found by the knowledge-base scanner.
pub const KB_SOURCE: &str = "kb";

/// Relations whose dependents are left out of a projected subtree.
const TRIMMED_RELATIONS: &[&str] = &["case", "punct", "cc", "mark"];

/// A match before it becomes a fragment: inclusive token range plus
/// inclusive capture ranges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMatch {
    pub first: usize,
    pub last: usize,
    pub captures: BTreeMap<String, (usize, usize)>,
}

/// Longest match of a token pattern starting at `start`. Among the
/// compositions reaching that end, quantifiers earlier in the pattern take
/// as many tokens as they can. Returns the exclusive end and per-item counts.
pub fn match_token_items(items: &[PatternItem], anno: &SentenceAnnotation, start: usize) -> Option<(usize, Vec<usize>)> {
    for end in (start + 1..=anno.len()).rev() {
        let mut counts = vec![0; items.len()];
        if fit(items, anno, 0, start, end, &mut counts) {
            return Some((end, counts));
        }
    }
    None
}

fn fit(items: &[PatternItem], anno: &SentenceAnnotation, k: usize, pos: usize, end: usize, counts: &mut [usize]) -> bool {
    let Some(item) = items.get(k) else {
        return pos == end;
    };
    let (lo, hi) = item.quantifier.bounds();
    let mut avail = 0;
    while pos + avail < end && avail < hi && item.constraint.matches(anno, pos + avail) {
        avail += 1;
    }
    if avail < lo {
        return false;
    }
    for c in (lo..=avail).rev() {
        counts[k] = c;
        if fit(items, anno, k + 1, pos + c, end, counts) {
            return true;
        }
    }
    false
}

pub fn token_rule_matches(items: &[PatternItem], anno: &SentenceAnnotation) -> Vec<RawMatch> {
    let mut out = Vec::new();
    for start in 0..anno.len() {
        let Some((end, counts)) = match_token_items(items, anno, start) else { continue };
        let mut captures: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        let mut pos = start;
        for (item, c) in items.iter().zip(counts) {
            if let Some(name) = item.capture.as_ref().filter(|_| c > 0) {
                let e = captures.entry(name.clone()).or_insert((pos, pos + c - 1));
                e.1 = pos + c - 1;
            }
            pos += c;
        }
        out.push(RawMatch { first: start, last: end - 1, captures });
    }
    out
}

/// Tokens reached from `from` by following the capture's relation path.
pub fn resolve_path(cap: &DepCapture, anno: &SentenceAnnotation, from: usize) -> Vec<usize> {
    let mut cur = vec![from];
    for step in &cap.path {
        let mut next = Vec::new();
        for &t in &cur {
            if step.upward {
                if anno.relation(t) == step.relation {
                    next.extend(anno.governor(t));
                }
            } else {
                next.extend(anno.children(t).filter(|(_, r)| *r == step.relation).map(|(d, _)| d));
            }
        }
        next.sort_unstable();
        next.dedup();
        cur = next;
    }
    cur
}

/// Inclusive token range of the subtree under `head`, leaving out
/// dependents attached by function relations such as `case`.
pub fn projected_range(anno: &SentenceAnnotation, head: usize) -> (usize, usize) {
    let (mut lo, mut hi) = (head, head);
    let mut stack: Vec<usize> =
        anno.children(head).filter(|(_, r)| !TRIMMED_RELATIONS.contains(r)).map(|(d, _)| d).collect();
    while let Some(t) = stack.pop() {
        lo = lo.min(t);
        hi = hi.max(t);
        stack.extend(anno.children(t).map(|(d, _)| d));
    }
    (lo, hi)
}

/// Every (trigger, capture assignment) combination whose paths resolve.
pub fn dependency_rule_matches(trigger: &TokenConstraint, captures: &[DepCapture], anno: &SentenceAnnotation) -> Vec<RawMatch> {
    let mut out = Vec::new();
    for t in 0..anno.len() {
        if !trigger.matches(anno, t) {
            continue;
        }
        let cands: Vec<Vec<usize>> = captures
            .iter()
            .map(|c| resolve_path(c, anno, t).into_iter().filter(|&x| c.target_allows(anno, x)).collect())
            .collect();
        if cands.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; cands.len()];
        loop {
            let mut m = RawMatch { first: t, last: t, captures: BTreeMap::new() };
            for (k, cap) in captures.iter().enumerate() {
                let (lo, hi) = projected_range(anno, cands[k][idx[k]]);
                m.first = m.first.min(lo);
                m.last = m.last.max(hi);
                m.captures.insert(cap.name.clone(), (lo, hi));
            }
            out.push(m);
            // advance the odometer; stop after the last combination
            let mut k = 0;
            while k < idx.len() {
                idx[k] += 1;
                if idx[k] < cands[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == idx.len() {
                break;
            }
        }
    }
    out
}

fn byte_range(anno: &SentenceAnnotation, first: usize, last: usize) -> (usize, usize) {
    (anno.token_spans[first].0, anno.token_spans[last].1)
}

/// First number found in the capture `number`, else anywhere in the match.
fn match_number(anno: &SentenceAnnotation, m: &RawMatch) -> Option<f64> {
    let range = m.captures.get("number").copied().unwrap_or((m.first, m.last));
    (range.0..=range.1).find_map(|i| parse_number(&anno.tokens[i]))
}

/// Turns a raw match into a fragment following the rule's fragment kind.
/// Returns `None` when a value rule's payload cannot be filled.
pub fn build_fragment(rule: &Rule, anno: &SentenceAnnotation, text: &str, m: &RawMatch, kb: &KnowledgeBase) -> Option<Fragment> {
    let (s, e) = byte_range(anno, m.first, m.last);
    let fields: BTreeMap<String, String> = m
        .captures
        .iter()
        .map(|(k, &(a, b))| {
            let (x, y) = byte_range(anno, a, b);
            (k.clone(), text[x..y].to_string())
        })
        .collect();
    let frag_text = &text[s..e];
    let mut f = Fragment {
        label: rule.label.clone(),
        kind: rule.fragment_kind,
        text: frag_text.to_string(),
        span: Span { turn: anno.span.turn, start: s, end: e },
        fields,
        unit: None,
        numeric_value: None,
        category: None,
        source: rule.name.clone(),
    };
    match rule.fragment_kind {
        FragmentKind::Identifier => {
            f.category = rule.category.clone().or_else(|| kb.identifier_category(frag_text).map(str::to_string));
        }
        FragmentKind::QuantitativeValue => {
            f.numeric_value = Some(match_number(anno, m)?);
            f.unit = f.fields.get("unit").map(|u| kb.unit_of(u).map_or_else(|| u.to_lowercase(), str::to_string));
        }
        FragmentKind::CompoundValue => {
            f.numeric_value = Some(match_number(anno, m)?);
            let surface = f.fields.get("category")?.clone();
            f.category = Some(rule.category.clone().or_else(|| kb.category_of(&surface).map(str::to_string))?);
            f.unit = Some(surface.to_lowercase());
        }
        FragmentKind::CategoricalValue => {
            let surface = f.fields.get("value").cloned().unwrap_or_else(|| frag_text.to_string());
            f.category = rule.category.clone().or_else(|| kb.category_of(&surface).map(str::to_string));
        }
        FragmentKind::BooleanValue => {
            f.fields.insert("value".into(), rule.value.clone()?);
            f.category = Some("boolean".into());
        }
    }
    Some(f)
}

/// Numbers next to units or category forms, and standalone KB surfaces.
pub fn kb_scan(anno: &SentenceAnnotation, text: &str, kb: &KnowledgeBase) -> Vec<Fragment> {
    let lw: Vec<String> = anno.tokens.iter().map(|t| t.to_lowercase()).collect();
    let n = lw.len();
    let mut out = Vec::new();
    let make = |first: usize, last: usize, label: &str, kind: FragmentKind| {
        let (s, e) = byte_range(anno, first, last);
        Fragment {
            label: label.to_string(),
            kind,
            text: text[s..e].to_string(),
            span: Span { turn: anno.span.turn, start: s, end: e },
            fields: BTreeMap::new(),
            unit: None,
            numeric_value: None,
            category: None,
            source: KB_SOURCE.to_string(),
        }
    };
    let mut i = 0;
    while i < n {
        if let Some(v) = parse_number(&anno.tokens[i]) {
            if i + 1 < n && lw[i + 1] == "%" {
                let mut f = make(i, i + 1, "Quantity", FragmentKind::QuantitativeValue);
                f.numeric_value = Some(v);
                f.unit = Some("percent".into());
                out.push(f);
                i += 2;
                continue;
            }
            match kb.longest_at(&lw, i + 1) {
                Some((len, Entry::Unit(u))) => {
                    let mut f = make(i, i + len, "Quantity", FragmentKind::QuantitativeValue);
                    f.numeric_value = Some(v);
                    f.unit = Some(u.clone());
                    out.push(f);
                    i += 1 + len;
                }
                Some((len, Entry::Category(c))) => {
                    let mut f = make(i, i + len, "Compound", FragmentKind::CompoundValue);
                    let (s, e) = byte_range(anno, i + 1, i + len);
                    f.numeric_value = Some(v);
                    f.category = Some(c.clone());
                    f.unit = Some(text[s..e].to_lowercase());
                    f.fields.insert("number".into(), anno.tokens[i].clone());
                    f.fields.insert("category".into(), text[s..e].to_string());
                    out.push(f);
                    i += 1 + len;
                }
                _ => {
                    let mut f = make(i, i, "Quantity", FragmentKind::QuantitativeValue);
                    f.numeric_value = Some(v);
                    out.push(f);
                    i += 1;
                }
            }
            continue;
        }
        match kb.longest_at(&lw, i) {
            Some((len, Entry::Category(c))) => {
                let mut f = make(i, i + len - 1, "Category", FragmentKind::CategoricalValue);
                f.category = Some(c.clone());
                out.push(f);
                i += len;
            }
            Some((len, Entry::Identifier(c))) => {
                let mut f = make(i, i + len - 1, "KbIdentifier", FragmentKind::Identifier);
                f.category = Some(c.clone());
                out.push(f);
                i += len;
            }
            Some((len, Entry::Unit(_))) => i += len,
            None => i += 1,
        }
    }
    out
}

/// Keeps, per label, the leftmost-longest of overlapping fragments; ties go
/// to higher rule priority, then rule name.
pub fn dedup_leftmost_longest(mut cands: Vec<(Fragment, i32)>) -> Vec<Fragment> {
    cands.sort_by(|(a, pa), (b, pb)| {
        (a.span.turn, a.span.start, Reverse(a.span.len()), Reverse(*pa), &a.source)
            .cmp(&(b.span.turn, b.span.start, Reverse(b.span.len()), Reverse(*pb), &b.source))
    });
    let mut kept: Vec<Fragment> = Vec::new();
    let mut by_label: BTreeMap<String, Vec<Span>> = BTreeMap::new();
    for (f, _) in cands {
        let spans = by_label.entry(f.label.clone()).or_default();
        if spans.iter().any(|s| s.overlaps(&f.span)) {
            continue;
        }
        spans.push(f.span);
        kept.push(f);
    }
    kept.sort_by(|a, b| (a.span, &a.label).cmp(&(b.span, &b.label)));
    kept
}

/// Candidates (before dedup) from one sentence: token rules first, then
/// dependency rules, then the KB scanner.
pub fn sentence_candidates(anno: &SentenceAnnotation, text: &str, rules: &RuleSet, kb: &KnowledgeBase) -> Vec<(Fragment, i32)> {
    let mut out = Vec::new();
    let ordered = rules
        .rules
        .iter()
        .filter(|r| matches!(r.body, RuleBody::Token(_)))
        .chain(rules.rules.iter().filter(|r| matches!(r.body, RuleBody::Dependency { .. })));
    for rule in ordered {
        let matches = match &rule.body {
            RuleBody::Token(items) => token_rule_matches(items, anno),
            RuleBody::Dependency { trigger, captures } => dependency_rule_matches(trigger, captures, anno),
        };
        out.extend(matches.iter().filter_map(|m| build_fragment(rule, anno, text, m, kb)).map(|f| (f, rule.priority)));
    }
    out.extend(kb_scan(anno, text, kb).into_iter().map(|f| (f, 0)));
    out
}

/// Runs all rules and the KB scanner over every sentence. Sentences are
/// processed in parallel; the result is sorted by span.
pub fn extract_fragments(t: &Transcript, annos: &[SentenceAnnotation], rules: &RuleSet, kb: &KnowledgeBase) -> Vec<Fragment> {
    let cands: Vec<(Fragment, i32)> = annos
        .par_iter()
        .filter(|a| a.token_spans.len() == a.len() && a.span.turn < t.turns.len())
        .flat_map_iter(|a| sentence_candidates(a, &t.turns[a.span.turn].text, rules, kb))
        .collect();
    dedup_leftmost_longest(cands)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::annotation::{parse_annotations, Annotator, LexicalAnnotator};
    use crate::rules::grammar::compile_rules;
    use crate::transcript::{SpeakerTurn, Transcript};

    const APPENDIX_RULE: &str = r#"- name: all-generic-entity-dep
  label: GenericEntity
  example: "the capacity of those barns"
  type: "dependency"
  pattern: |
    trigger = [word=/^(capacity|number|
               usage|production|price|
               cost|consumption|date)$/]
    variable: NounPhrase =  nmod_of
"#;

    fn transcript(texts: &[&str]) -> Transcript {
        Transcript {
            interview_id: "x".into(),
            domain_hint: None,
            turns: texts.iter().map(|t| SpeakerTurn::new("Speaker 1", 0.0, *t)).collect(),
        }
    }

    fn pork_kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(None);
        kb.add_category("barn_type", "nursery").unwrap();
        kb.add_category("barn_type", "finishing").unwrap();
        kb.add_category("herbicide", "atrazine").unwrap();
        kb.add_unit("head", "head", ["barn_capacity"]).unwrap();
        kb
    }

    #[test]
    fn appendix_example_from_annotation_file() {
        let t = transcript(&["the capacity of those barns"]);
        let rec = r#"{"turn":0,"start":0,"end":27,"tokens":["the","capacity","of","those","barns"],"pos":["DT","NN","IN","DT","NNS"],"ner":["O","O","O","O","O"],"heads":[1,0,2,1,-3],"deprels":["det","root","case","det","nmod_of"]}"#;
        let annos = parse_annotations(rec, "f", &t).unwrap();
        let rules = compile_rules(APPENDIX_RULE).unwrap();
        let frags = extract_fragments(&t, &annos, &rules, &KnowledgeBase::default());
        assert_eq!(frags.len(), 1);
        let f = &frags[0];
        assert_eq!(f.label, "GenericEntity");
        assert_eq!(f.kind, FragmentKind::Identifier);
        assert_eq!(f.text, "capacity of those barns");
        assert_eq!(f.fields["variable"], "those barns");
        assert_eq!(f.span, Span { turn: 0, start: 4, end: 27 });
    }

    #[test]
    fn compound_value_from_kb() {
        let t = transcript(&["and then 1200 nursery."]);
        let annos = LexicalAnnotator.annotate(&t).unwrap();
        let frags = extract_fragments(&t, &annos, &RuleSet::default(), &pork_kb());
        assert_eq!(frags.len(), 1, "{frags:?}");
        let f = &frags[0];
        assert_eq!(f.kind, FragmentKind::CompoundValue);
        assert_eq!(f.numeric_value, Some(1200.0));
        assert_eq!(f.category.as_deref(), Some("barn_type"));
        assert_eq!(f.text, "1200 nursery");
        assert!(f.is_well_formed());
    }

    #[test]
    fn units_percent_and_bare_numbers() {
        let t = transcript(&["About 4,300 head, 5% of them, and 12 more."]);
        let annos = LexicalAnnotator.annotate(&t).unwrap();
        let frags = extract_fragments(&t, &annos, &RuleSet::default(), &pork_kb());
        let got: Vec<_> = frags.iter().map(|f| (f.text.as_str(), f.numeric_value, f.unit.as_deref())).collect();
        assert_eq!(got, vec![("4,300 head", Some(4300.0), Some("head")), ("5%", Some(5.0), Some("percent")), ("12", Some(12.0), None)]);
    }

    #[test]
    fn no_triggers_no_fragments() {
        let t = transcript(&["We like the weather out here."]);
        let annos = LexicalAnnotator.annotate(&t).unwrap();
        let rules = compile_rules(APPENDIX_RULE).unwrap();
        assert!(extract_fragments(&t, &annos, &rules, &pork_kb()).is_empty());
    }

    #[test]
    fn herbicide_missing_from_kb_is_not_extracted() {
        let t = transcript(&["We sprayed Liberty and some atrazine."]);
        let annos = LexicalAnnotator.annotate(&t).unwrap();
        let frags = extract_fragments(&t, &annos, &RuleSet::default(), &pork_kb());
        let texts: Vec<_> = frags.iter().map(|f| f.text.as_str()).collect();
        assert_eq!(texts, ["atrazine"]);
    }

    #[test]
    fn token_rule_longest_match_and_captures() {
        let src = r#"- name: yes
  label: Affirm
  type: token
  kind: boolean_value
  value: true
  pattern: (?<cue> [word=/^(yes|yeah)$/]+ ) [tag="."]?
- name: count
  label: Count
  type: token
  kind: quantitative_value
  pattern: (?<number> [tag=CD]) (?<unit> [word=/^(sows|gilts)$/])
"#;
        let rules = compile_rules(src).unwrap();
        let t = transcript(&["Yeah yes. We keep 300 sows"]);
        let annos = LexicalAnnotator.annotate(&t).unwrap();
        let frags = extract_fragments(&t, &annos, &rules, &KnowledgeBase::default());
        let affirm = frags.iter().find(|f| f.label == "Affirm").unwrap();
        assert_eq!(affirm.text, "Yeah yes.");
        assert_eq!(affirm.fields["cue"], "Yeah yes");
        assert_eq!(affirm.boolean_value(), Some(true));
        let count = frags.iter().find(|f| f.label == "Count").unwrap();
        assert_eq!((count.numeric_value, count.unit.as_deref()), (Some(300.0), Some("sows")));
    }

    #[test]
    fn cartesian_product_over_candidates() {
        let src = "- name: pair\n  label: P\n  type: dependency\n  pattern: |\n    trigger = [tag=VB]\n    a = nsubj\n    b = obj\n";
        let rules = compile_rules(src).unwrap();
        let annos = [SentenceAnnotation {
            tokens: vec!["pigs".into(), "cows".into(), "eat".into(), "corn".into(), "hay".into()],
            pos_tags: vec!["NNS".into(), "NNS".into(), "VB".into(), "NN".into(), "NN".into()],
            ner_tags: vec!["O".into(); 5],
            dep_edges: [(Some(2), "nsubj"), (Some(2), "nsubj"), (None, "root"), (Some(2), "obj"), (Some(2), "obj")]
                .iter()
                .enumerate()
                .map(|(i, (g, r))| super::super::annotation::DepEdge { dependent: i, governor: *g, relation: r.to_string() })
                .collect(),
            span: crate::rules::annotation::SentenceSpan { turn: 0, start: 0, end: 22 },
            token_spans: vec![(0, 4), (5, 9), (10, 13), (14, 18), (19, 22)],
        }];
        let m = dependency_rule_matches(
            match &rules.rules[0].body {
                RuleBody::Dependency { trigger, .. } => trigger,
                _ => unreachable!(),
            },
            match &rules.rules[0].body {
                RuleBody::Dependency { captures, .. } => captures,
                _ => unreachable!(),
            },
            &annos[0],
        );
        assert_eq!(m.len(), 4);
    }
}
