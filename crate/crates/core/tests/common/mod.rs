//! Generators and brute-force reference implementations shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use farmtalk::assembly::{AssemblyConfig, IdentifierValuePair, LinkKind};
use farmtalk::rules::annotation::{DepEdge, SentenceSpan};
use farmtalk::rules::{Fragment, FragmentKind, SentenceAnnotation, Span};
use farmtalk::transcript::{SpeakerTurn, Transcript};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

// ---------------------------------------------------------------------------
// rule engine

const VOCAB: &[&str] = &["the", "capacity", "of", "those", "barns", "nursery", "yes", "sows", "12", "%"];
const TAGS: &[&str] = &["NN", "NNS", "DT", "IN", "CD", "JJ", "PRP"];
const RELS: &[&str] = &["nmod_of", "det", "case", "amod", "punct"];
const TRIMMED: &[&str] = &["case", "punct", "cc", "mark"];

#[derive(Debug, Clone)]
pub enum Test {
    Word(String),
    WordSet(String, String),
    Tag(String),
    TagPrefix(String),
}

impl Test {
    fn holds(&self, word: &str, tag: &str) -> bool {
        match self {
            Test::Word(w) => word == w,
            Test::WordSet(a, b) => word == a || word == b,
            Test::Tag(t) => tag == t,
            Test::TagPrefix(p) => tag.starts_with(p.as_str()),
        }
    }

    fn render(&self) -> String {
        match self {
            Test::Word(w) => format!("word=\"{w}\""),
            Test::WordSet(a, b) => format!("word=/^({a}|{b})$/"),
            Test::Tag(t) => format!("tag=\"{t}\""),
            Test::TagPrefix(p) => format!("tag=/^{p}/"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint(pub Vec<Test>);

impl Constraint {
    fn holds(&self, a: &SentenceAnnotation, i: usize) -> bool {
        self.0.iter().all(|t| t.holds(&a.tokens[i], &a.pos_tags[i]))
    }

    fn render(&self) -> String {
        format!("[{}]", self.0.iter().map(Test::render).collect::<Vec<_>>().join(" & "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quant {
    One,
    Opt,
    Plus,
    Star,
}

impl Quant {
    fn bounds(self) -> (usize, usize) {
        match self {
            Quant::One => (1, 1),
            Quant::Opt => (0, 1),
            Quant::Plus => (1, usize::MAX),
            Quant::Star => (0, usize::MAX),
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Quant::One => "",
            Quant::Opt => "?",
            Quant::Plus => "+",
            Quant::Star => "*",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Item {
    pub constraint: Constraint,
    pub quant: Quant,
    pub group: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Capture {
    pub name: String,
    pub noun_phrase: bool,
    /// (upward, relation)
    pub path: Vec<(bool, String)>,
}

#[derive(Debug, Clone)]
pub enum Body {
    Token(Vec<Item>),
    Dependency { trigger: Constraint, captures: Vec<Capture> },
}

#[derive(Debug, Clone)]
pub struct GenRule {
    pub name: String,
    pub label: String,
    pub kind: FragmentKind,
    pub value: Option<bool>,
    pub priority: i32,
    pub body: Body,
}

impl GenRule {
    pub fn render(&self) -> String {
        let mut s = format!("- name: {}\n  label: {}\n", self.name, self.label);
        let ty = match self.body {
            Body::Token(_) => "token",
            Body::Dependency { .. } => "dependency",
        };
        s.push_str(&format!("  type: {ty}\n  kind: {}\n", self.kind.as_str()));
        if let Some(v) = self.value {
            s.push_str(&format!("  value: {v}\n"));
        }
        s.push_str(&format!("  priority: {}\n  pattern: |\n", self.priority));
        match &self.body {
            Body::Token(items) => {
                let mut line = String::new();
                let mut open: Option<&str> = None;
                for it in items {
                    if open.is_some() && open != it.group.as_deref() {
                        line.push_str(" )");
                        open = None;
                    }
                    if let (None, Some(g)) = (open, it.group.as_deref()) {
                        line.push_str(&format!(" (?<{g}>"));
                        open = Some(g);
                    }
                    line.push_str(&format!(" {}{}", it.constraint.render(), it.quant.suffix()));
                }
                if open.is_some() {
                    line.push_str(" )");
                }
                s.push_str(&format!("    {}\n", line.trim()));
            }
            Body::Dependency { trigger, captures } => {
                s.push_str(&format!("    trigger = {}\n", trigger.render()));
                for c in captures {
                    let label = if c.noun_phrase { ": NounPhrase" } else { "" };
                    let path: Vec<String> = c.path.iter().map(|(up, r)| format!("{}{r}", if *up { "<" } else { ">" })).collect();
                    s.push_str(&format!("    {}{label} = {}\n", c.name, path.join(" ")));
                }
            }
        }
        s
    }
}

pub fn render_rules(rules: &[GenRule]) -> String {
    rules.iter().map(GenRule::render).collect::<Vec<_>>().join("\n")
}

fn gen_test<R: Rng>(rng: &mut R) -> Test {
    let pick = |rng: &mut R, xs: &[&str]| xs.choose(rng).unwrap().to_string();
    match rng.gen_range(0..4) {
        0 => Test::Word(pick(rng, VOCAB)),
        1 => Test::WordSet(pick(rng, VOCAB), pick(rng, VOCAB)),
        2 => Test::Tag(pick(rng, TAGS)),
        _ => Test::TagPrefix(pick(rng, &["N", "NN", "D", "C"])),
    }
}

fn gen_constraint<R: Rng>(rng: &mut R) -> Constraint {
    let n = if rng.gen_bool(0.3) { 2 } else { 1 };
    Constraint((0..n).map(|_| gen_test(rng)).collect())
}

pub fn gen_rule<R: Rng>(rng: &mut R, idx: usize) -> GenRule {
    let kind = match rng.gen_range(0..5) {
        0 => FragmentKind::BooleanValue,
        1 => FragmentKind::CategoricalValue,
        _ => FragmentKind::Identifier,
    };
    let body = if rng.gen_bool(0.5) {
        let n = rng.gen_range(1..=3);
        let mut items: Vec<Item> = (0..n)
            .map(|_| Item {
                constraint: gen_constraint(rng),
                quant: *[Quant::One, Quant::One, Quant::Opt, Quant::Plus, Quant::Star].choose(rng).unwrap(),
                group: None,
            })
            .collect();
        if items.iter().all(|i| i.quant.bounds().0 == 0) {
            items[0].quant = Quant::One;
        }
        if rng.gen_bool(0.5) {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(a..n);
            for it in &mut items[a..=b] {
                it.group = Some("g".into());
            }
        }
        Body::Token(items)
    } else {
        let k = rng.gen_range(1..=2);
        let captures = (0..k)
            .map(|c| Capture {
                name: format!("c{c}"),
                noun_phrase: rng.gen_bool(0.3),
                path: (0..if rng.gen_bool(0.7) { 1 } else { 2 }).map(|_| (rng.gen_bool(0.3), RELS.choose(rng).unwrap().to_string())).collect(),
            })
            .collect();
        let trigger = if rng.gen_bool(0.5) { Constraint(vec![Test::TagPrefix("N".into())]) } else { gen_constraint(rng) };
        Body::Dependency { trigger, captures }
    };
    GenRule {
        name: format!("r{idx}"),
        label: ["A", "B", "C"].choose(rng).unwrap().to_string(),
        kind,
        value: (kind == FragmentKind::BooleanValue).then(|| rng.gen_bool(0.5)),
        priority: rng.gen_range(0..3),
        body,
    }
}

/// A random single-sentence transcript with a random dependency tree.
pub fn gen_sentence<R: Rng>(rng: &mut R) -> (Transcript, SentenceAnnotation) {
    let n = rng.gen_range(1..=10);
    let tokens: Vec<String> = (0..n).map(|_| VOCAB.choose(rng).unwrap().to_string()).collect();
    let pos_tags: Vec<String> = (0..n).map(|_| TAGS.choose(rng).unwrap().to_string()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut gov = vec![None; n];
    for k in 1..n {
        gov[order[k]] = Some(order[rng.gen_range(0..k)]);
    }
    let dep_edges = (0..n)
        .map(|i| DepEdge {
            dependent: i,
            governor: gov[i],
            relation: if gov[i].is_none() { "root".into() } else { RELS.choose(rng).unwrap().to_string() },
        })
        .collect();
    let text = tokens.join(" ");
    let mut token_spans = Vec::new();
    let mut pos = 0;
    for t in &tokens {
        token_spans.push((pos, pos + t.len()));
        pos += t.len() + 1;
    }
    let anno = SentenceAnnotation {
        ner_tags: vec!["O".into(); n],
        pos_tags,
        tokens,
        dep_edges,
        span: SentenceSpan { turn: 0, start: 0, end: text.len() },
        token_spans,
    };
    let t = Transcript { interview_id: "gen".into(), domain_hint: None, turns: vec![SpeakerTurn::new("S", 0.0, text)] };
    (t, anno)
}

fn fragment(label: &str, kind: FragmentKind, a: &SentenceAnnotation, text: &str, first: usize, last: usize, source: &str) -> Fragment {
    let (s, e) = (a.token_spans[first].0, a.token_spans[last].1);
    Fragment {
        label: label.into(),
        kind,
        text: text[s..e].to_string(),
        span: Span { turn: a.span.turn, start: s, end: e },
        fields: BTreeMap::new(),
        unit: None,
        numeric_value: None,
        category: None,
        source: source.into(),
    }
}

fn finish(rule: &GenRule, mut f: Fragment, caps: &BTreeMap<String, (usize, usize)>, a: &SentenceAnnotation, text: &str) -> Fragment {
    for (name, &(x, y)) in caps {
        f.fields.insert(name.clone(), text[a.token_spans[x].0..a.token_spans[y].1].to_string());
    }
    if rule.kind == FragmentKind::BooleanValue {
        f.fields.insert("value".into(), rule.value.unwrap().to_string());
        f.category = Some("boolean".into());
    }
    f
}

/// All count vectors for `items` starting at `start`, by brute force.
fn compositions(items: &[Item], a: &SentenceAnnotation, start: usize) -> Vec<Vec<usize>> {
    let n = a.len();
    let mut out = Vec::new();
    let mut counts = vec![0usize; items.len()];
    loop {
        let total: usize = counts.iter().sum();
        let in_bounds = items.iter().zip(&counts).all(|(it, &c)| {
            let (lo, hi) = it.quant.bounds();
            c >= lo && c <= hi
        });
        if in_bounds && total >= 1 && start + total <= n {
            let mut pos = start;
            let mut ok = true;
            for (it, &c) in items.iter().zip(&counts) {
                ok &= (pos..pos + c).all(|i| it.constraint.holds(a, i));
                pos += c;
            }
            if ok {
                out.push(counts.clone());
            }
        }
        // odometer over 0..=n for each item
        let mut k = 0;
        while k < counts.len() {
            counts[k] += 1;
            if counts[k] <= n {
                break;
            }
            counts[k] = 0;
            k += 1;
        }
        if k == counts.len() {
            return out;
        }
    }
}

fn descendants(a: &SentenceAnnotation, h: usize, out: &mut BTreeSet<usize>) {
    out.insert(h);
    for e in &a.dep_edges {
        if e.governor == Some(h) {
            descendants(a, e.dependent, out);
        }
    }
}

fn projection(a: &SentenceAnnotation, h: usize) -> (usize, usize) {
    let mut set = BTreeSet::from([h]);
    for e in &a.dep_edges {
        if e.governor == Some(h) && !TRIMMED.contains(&e.relation.as_str()) {
            descendants(a, e.dependent, &mut set);
        }
    }
    (*set.first().unwrap(), *set.last().unwrap())
}

fn reachable(a: &SentenceAnnotation, from: usize, c: &Capture) -> Vec<usize> {
    let mut cur = BTreeSet::from([from]);
    for (up, rel) in &c.path {
        let mut next = BTreeSet::new();
        for e in &a.dep_edges {
            if *up {
                if cur.contains(&e.dependent) && &e.relation == rel {
                    next.extend(e.governor);
                }
            } else if e.governor.is_some_and(|g| cur.contains(&g)) && &e.relation == rel {
                next.insert(e.dependent);
            }
        }
        cur = next;
    }
    let np = |i: usize| {
        let t = a.pos_tags[i].as_str();
        t.starts_with("NN") || t.starts_with("PRP") || t == "CD"
    };
    cur.into_iter().filter(|&i| !c.noun_phrase || np(i)).collect()
}

/// Reference extraction for one sentence with an empty knowledge base.
pub fn oracle_extract(t: &Transcript, a: &SentenceAnnotation, rules: &[GenRule]) -> Vec<Fragment> {
    let text = &t.turns[a.span.turn].text;
    let mut cands: Vec<(Fragment, i32)> = Vec::new();
    let token_rules = rules.iter().filter(|r| matches!(r.body, Body::Token(_)));
    let dep_rules = rules.iter().filter(|r| matches!(r.body, Body::Dependency { .. }));
    for rule in token_rules.chain(dep_rules) {
        match &rule.body {
            Body::Token(items) => {
                for start in 0..a.len() {
                    let comps = compositions(items, a, start);
                    let Some(best_len) = comps.iter().map(|c| c.iter().sum::<usize>()).max() else { continue };
                    let best = comps.into_iter().filter(|c| c.iter().sum::<usize>() == best_len).max().unwrap();
                    let mut caps: BTreeMap<String, (usize, usize)> = BTreeMap::new();
                    let mut pos = start;
                    for (it, c) in items.iter().zip(&best) {
                        if let (Some(g), true) = (&it.group, *c > 0) {
                            let e = caps.entry(g.clone()).or_insert((pos, pos + c - 1));
                            e.0 = e.0.min(pos);
                            e.1 = e.1.max(pos + c - 1);
                        }
                        pos += c;
                    }
                    let f = fragment(&rule.label, rule.kind, a, text, start, start + best_len - 1, &rule.name);
                    cands.push((finish(rule, f, &caps, a, text), rule.priority));
                }
            }
            Body::Dependency { trigger, captures } => {
                for tr in 0..a.len() {
                    if !trigger.holds(a, tr) {
                        continue;
                    }
                    let options: Vec<Vec<usize>> = captures.iter().map(|c| reachable(a, tr, c)).collect();
                    if options.iter().any(Vec::is_empty) {
                        continue;
                    }
                    // first capture varies fastest
                    let total: usize = options.iter().map(Vec::len).product();
                    for mut k in 0..total {
                        let mut caps = BTreeMap::new();
                        let (mut lo, mut hi) = (tr, tr);
                        for (c, opts) in captures.iter().zip(&options) {
                            let (x, y) = projection(a, opts[k % opts.len()]);
                            k /= opts.len();
                            lo = lo.min(x);
                            hi = hi.max(y);
                            caps.insert(c.name.clone(), (x, y));
                        }
                        let f = fragment(&rule.label, rule.kind, a, text, lo, hi, &rule.name);
                        cands.push((finish(rule, f, &caps, a, text), rule.priority));
                    }
                }
            }
        }
    }
    // numbers found by the scanner (no knowledge-base entries)
    let mut i = 0;
    while i < a.len() {
        if let Ok(v) = a.tokens[i].parse::<f64>() {
            let pct = a.tokens.get(i + 1).is_some_and(|x| x == "%");
            let last = if pct { i + 1 } else { i };
            let mut f = fragment("Quantity", FragmentKind::QuantitativeValue, a, text, i, last, "kb");
            f.numeric_value = Some(v);
            f.unit = pct.then(|| "percent".to_string());
            cands.push((f, 0));
            i = last + 1;
        } else {
            i += 1;
        }
    }
    select_leftmost_longest(cands)
}

/// Repeatedly takes the best remaining candidate and discards same-label
/// candidates overlapping it.
fn select_leftmost_longest(mut cands: Vec<(Fragment, i32)>) -> Vec<Fragment> {
    let key = |(f, p): &(Fragment, i32)| (f.span.turn, f.span.start, usize::MAX - (f.span.end - f.span.start), -p, f.source.clone());
    let mut kept = Vec::new();
    while !cands.is_empty() {
        let best = (0..cands.len()).min_by_key(|&i| (key(&cands[i]), i)).unwrap();
        let (f, _) = cands.remove(best);
        cands.retain(|(g, _)| g.label != f.label || !g.span.overlaps(&f.span));
        kept.push(f);
    }
    kept.sort_by(|a, b| (a.span, &a.label).cmp(&(b.span, &b.label)));
    kept
}

// ---------------------------------------------------------------------------
// assembly

const ID_CATS: &[&str] = &["barn_capacity", "manure_storage", "employees", "protein_percent"];
const KEYS: &[&str] = &["head", "percent", "barn_type", "storage_type", "nursery", "boolean"];

pub fn gen_assembly_case<R: Rng>(rng: &mut R) -> (Vec<Fragment>, AssemblyConfig) {
    let turns = rng.gen_range(1..=12);
    let mut frags = Vec::new();
    for _ in 0..rng.gen_range(0..=16) {
        let turn = rng.gen_range(0..turns);
        let start = rng.gen_range(0..30);
        let span = Span { turn, start, end: start + rng.gen_range(1..8) };
        let base = Fragment {
            label: "X".into(),
            kind: FragmentKind::Identifier,
            text: format!("f{}", frags.len()),
            span,
            fields: BTreeMap::new(),
            unit: None,
            numeric_value: None,
            category: None,
            source: "gen".into(),
        };
        let f = match rng.gen_range(0..6) {
            0 | 1 => Fragment {
                label: ["GenericEntity", "KbIdentifier"].choose(rng).unwrap().to_string(),
                category: rng.gen_bool(0.9).then(|| ID_CATS.choose(rng).unwrap().to_string()),
                ..base
            },
            2 => Fragment {
                label: "Quantity".into(),
                kind: FragmentKind::QuantitativeValue,
                numeric_value: Some(rng.gen_range(1..100) as f64),
                unit: [None, Some("head"), Some("percent")].choose(rng).unwrap().map(str::to_string),
                ..base
            },
            3 => Fragment {
                label: "Compound".into(),
                kind: FragmentKind::CompoundValue,
                numeric_value: Some(1200.0),
                unit: Some("nursery".into()),
                category: Some("barn_type".into()),
                ..base
            },
            4 => Fragment {
                label: "Category".into(),
                kind: FragmentKind::CategoricalValue,
                category: [None, Some("storage_type")].choose(rng).unwrap().map(str::to_string),
                ..base
            },
            _ => {
                let mut f = Fragment { label: "Affirm".into(), kind: FragmentKind::BooleanValue, category: Some("boolean".into()), ..base };
                f.fields.insert("value".into(), "true".into());
                f
            }
        };
        frags.push(f);
    }
    let mut cfg = AssemblyConfig { default_window: rng.gen_range(1..=4), ..Default::default() };
    for c in ID_CATS {
        if rng.gen_bool(0.3) {
            cfg.per_identifier_window.insert(c.to_string(), rng.gen_range(1..=5));
        }
        if rng.gen_bool(0.3) {
            cfg.unitless_allowlist.insert(c.to_string());
        }
        for k in KEYS {
            if rng.gen_bool(0.25) {
                cfg.compatibility.entry(c.to_string()).or_default().insert(k.to_string());
            }
        }
    }
    (frags, cfg)
}

fn oracle_compatible(cfg: &AssemblyConfig, cat: &str, v: &Fragment) -> bool {
    let keys: Vec<&str> = if v.kind == FragmentKind::BooleanValue {
        vec!["boolean"]
    } else {
        v.unit.iter().chain(&v.category).map(String::as_str).collect()
    };
    if keys.is_empty() {
        return v.kind == FragmentKind::QuantitativeValue && cfg.unitless_allowlist.contains(cat);
    }
    cfg.compatibility.get(cat).is_some_and(|set| keys.iter().any(|k| set.contains(*k)))
}

/// Reference windowed linking plus fallback: scores every (identifier,
/// value) combination and keeps the best per value.
pub fn oracle_assemble(frags: &[Fragment], cfg: &AssemblyConfig, with_fallback: bool) -> Vec<IdentifierValuePair> {
    // one identifier per overlapping phrase: longest first, then leftmost
    let mut id_order: Vec<usize> = (0..frags.len()).filter(|&i| frags[i].kind == FragmentKind::Identifier).collect();
    id_order.sort_by_key(|&i| {
        let f = &frags[i];
        (f.span.turn, usize::MAX - (f.span.end - f.span.start), f.span.start, f.category.is_none(), f.label.clone())
    });
    let mut ids: Vec<&Fragment> = Vec::new();
    for i in id_order {
        if ids.iter().all(|k| !k.span.overlaps(&frags[i].span)) {
            ids.push(&frags[i]);
        }
    }
    let window = |cat: &str| cfg.per_identifier_window.get(cat).copied().unwrap_or(cfg.default_window);
    let specificity = |cat: &str| cfg.compatibility.get(cat).map_or(0, BTreeSet::len);
    let mut pairs = Vec::new();
    let mut residual = Vec::new();
    for v in frags.iter().filter(|f| f.kind != FragmentKind::Identifier) {
        let mut best: Option<((usize, usize, std::cmp::Reverse<usize>, String), &Fragment)> = None;
        for id in &ids {
            let Some(cat) = id.category.as_deref() else { continue };
            let before = id.span.turn < v.span.turn || (id.span.turn == v.span.turn && id.span.end <= v.span.start);
            if !before {
                continue;
            }
            let d = v.span.turn - id.span.turn;
            if d > window(cat) || !oracle_compatible(cfg, cat, v) {
                continue;
            }
            let key = (d, specificity(cat), std::cmp::Reverse(id.span.start), cat.to_string());
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, id));
            }
        }
        match best {
            Some(((d, ..), id)) => pairs.push(IdentifierValuePair { identifier: id.clone(), value: v.clone(), link_kind: LinkKind::Windowed, distance: d }),
            None => residual.push(v),
        }
    }
    if with_fallback {
        for v in residual {
            if v.kind == FragmentKind::BooleanValue {
                continue;
            }
            let Some(key) = v.category.as_deref().or(v.unit.as_deref()) else { continue };
            let owners: Vec<&String> = cfg.compatibility.iter().filter(|(_, s)| s.contains(key)).map(|(c, _)| c).collect();
            if owners.len() == 1 {
                let identifier = Fragment {
                    label: "Synthesized".into(),
                    kind: FragmentKind::Identifier,
                    text: owners[0].replace('_', " "),
                    span: v.span,
                    fields: BTreeMap::new(),
                    unit: None,
                    numeric_value: None,
                    category: Some(owners[0].clone()),
                    source: "fallback".into(),
                };
                pairs.push(IdentifierValuePair { identifier, value: v.clone(), link_kind: LinkKind::Fallback, distance: 0 });
            }
        }
        pairs.sort_by(|x, y| (x.value.span, &x.value.label).cmp(&(y.value.span, &y.value.label)));
    }
    pairs
}

// ---------------------------------------------------------------------------
// bootstrap

/// Every equally likely resample of `items` (n^n outcomes) as its mean.
pub fn exhaustive_means(items: &[f64]) -> Vec<f64> {
    let n = items.len();
    let mut out = Vec::with_capacity(n.pow(n as u32));
    for code in 0..n.pow(n as u32) {
        let mut c = code;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += items[c % n];
            c /= n;
        }
        out.push(sum / n as f64);
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Smallest outcome whose cumulative probability reaches `q`.
pub fn discrete_quantile(sorted: &[f64], q: f64) -> f64 {
    let k = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

// ---------------------------------------------------------------------------
// fixture corpus

pub fn fixture_resources(backend: farmtalk::cli::BackendChoice) -> farmtalk::cli::Resources {
    let manifest = fixtures_dir().join("manifest.toml");
    let m = farmtalk::cli::run::read_manifest(&manifest).unwrap();
    let mut cfg = farmtalk::cli::RunConfig::new(&manifest, std::env::temp_dir());
    cfg.backend = backend;
    let (res, diags) = farmtalk::cli::load_resources(&m, &cfg);
    assert!(diags.is_empty(), "{diags:?}");
    res.unwrap()
}
