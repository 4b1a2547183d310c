//! Rule-file parsing and compilation.
//!
//! A rule file is a YAML-like list of rules:
//!
//! ```text
//! - name: all-generic-entity-dep
//!   label: GenericEntity
//!   type: dependency
//!   pattern: |
//!     trigger = [word=/^(capacity|number)$/]
//!     variable: NounPhrase = nmod_of
//! ```
//!
//! Token patterns are sequences of `[field=value & ...]` constraints with
//! optional `?`, `+` or `*` quantifiers, grouped into named captures with
//! `(?<name> ...)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use regex::Regex;
use thiserror::Error;

use super::annotation::SentenceAnnotation;
use super::FragmentKind;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}{}: {message}", rule_suffix(.rule))]
    Syntax { rule: Option<String>, line: usize, message: String },
    #[error("line {line}: duplicate rule name `{name}`")]
    DuplicateName { name: String, line: usize },
    #[error("line {line}{}: invalid regex /{pattern}/: {message}", rule_suffix(.rule))]
    InvalidRegex { rule: Option<String>, line: usize, pattern: String, message: String },
    #[error("line {line}{}: unknown field `{key}`", rule_suffix(.rule))]
    UnknownField { rule: Option<String>, line: usize, key: String },
}

fn rule_suffix(rule: &Option<String>) -> String {
    rule.as_ref().map(|r| format!(" (rule `{r}`)")).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    TokenPattern,
    DependencyPattern,
}

impl RuleKind {
    fn keyword(self) -> &'static str {
        match self {
            RuleKind::TokenPattern => "token",
            RuleKind::DependencyPattern => "dependency",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenField {
    /// Lowercased token text.
    Word,
    Tag,
    Entity,
}

impl TokenField {
    fn name(self) -> &'static str {
        match self {
            TokenField::Word => "word",
            TokenField::Tag => "tag",
            TokenField::Entity => "entity",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Matcher {
    Exact(String),
    Regex(Regex),
}

impl PartialEq for Matcher {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Matcher::Exact(a), Matcher::Exact(b)) => a == b,
            (Matcher::Regex(a), Matcher::Regex(b)) => a.as_str() == b.as_str(),
            _ => false,
        }
    }
}

impl Matcher {
    pub fn is_match(&self, s: &str) -> bool {
        match self {
            Matcher::Exact(e) => e == s,
            Matcher::Regex(r) => r.is_match(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTest {
    pub field: TokenField,
    pub matcher: Matcher,
}

/// Conjunction of field tests; empty matches any token.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenConstraint {
    pub tests: Vec<FieldTest>,
}

impl TokenConstraint {
    pub fn matches(&self, anno: &SentenceAnnotation, i: usize) -> bool {
        self.tests.iter().all(|t| match t.field {
            TokenField::Word => t.matcher.is_match(&anno.tokens[i].to_lowercase()),
            TokenField::Tag => t.matcher.is_match(&anno.pos_tags[i]),
            TokenField::Entity => t.matcher.is_match(&anno.ner_tags[i]),
        })
    }
}

impl fmt::Display for TokenConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, t) in self.tests.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            match &t.matcher {
                Matcher::Exact(s) => write!(f, "{}=\"{}\"", t.field.name(), s.replace('\\', "\\\\").replace('"', "\\\""))?,
                Matcher::Regex(r) => write!(f, "{}=/{}/", t.field.name(), r.as_str().replace('/', "\\/"))?,
            }
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathStep {
    /// Follow the edge from dependent to governor instead of downwards.
    pub upward: bool,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepCapture {
    pub name: String,
    pub label: Option<String>,
    pub path: Vec<PathStep>,
    pub target: Option<TokenConstraint>,
}

impl DepCapture {
    /// Built-in constraints for well-known target labels.
    pub fn label_allows(&self, anno: &SentenceAnnotation, i: usize) -> bool {
        let tag = anno.pos_tags[i].as_str();
        match self.label.as_deref() {
            Some("NounPhrase") => tag.starts_with("NN") || tag.starts_with("PRP") || tag == "CD",
            Some("Number") => tag == "CD",
            _ => true,
        }
    }

    pub fn target_allows(&self, anno: &SentenceAnnotation, i: usize) -> bool {
        self.label_allows(anno, i) && self.target.as_ref().is_none_or(|c| c.matches(anno, i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantifier {
    One,
    Optional,
    Plus,
    Star,
}

impl Quantifier {
    pub fn bounds(self) -> (usize, usize) {
        match self {
            Quantifier::One => (1, 1),
            Quantifier::Optional => (0, 1),
            Quantifier::Plus => (1, usize::MAX),
            Quantifier::Star => (0, usize::MAX),
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Quantifier::One => "",
            Quantifier::Optional => "?",
            Quantifier::Plus => "+",
            Quantifier::Star => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternItem {
    pub constraint: TokenConstraint,
    pub quantifier: Quantifier,
    pub capture: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RuleBody {
    Token(Vec<PatternItem>),
    Dependency { trigger: TokenConstraint, captures: Vec<DepCapture> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub label: String,
    pub kind: RuleKind,
    pub fragment_kind: FragmentKind,
    pub priority: i32,
    pub example: Option<String>,
    /// Category assigned to produced values, or the identifier category.
    pub category: Option<String>,
    /// Fixed value for boolean rules ("true"/"false").
    pub value: Option<String>,
    pub body: RuleBody,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.name == name)
    }

    /// Union of two rule sets; names must stay unique.
    pub fn merged(&self, other: &RuleSet) -> Result<RuleSet, RuleError> {
        let mut names: BTreeSet<&str> = self.rules.iter().map(|r| r.name.as_str()).collect();
        for r in &other.rules {
            if !names.insert(&r.name) {
                return Err(RuleError::DuplicateName { name: r.name.clone(), line: 0 });
            }
        }
        Ok(RuleSet { rules: self.rules.iter().chain(&other.rules).cloned().collect() })
    }

    /// Renders the rule set back to rule-file text.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&format!("- name: {}\n", r.name));
            out.push_str(&format!("  label: {}\n", r.label));
            out.push_str(&format!("  type: {}\n", r.kind.keyword()));
            out.push_str(&format!("  kind: {}\n", r.fragment_kind.as_str()));
            out.push_str(&format!("  priority: {}\n", r.priority));
            if let Some(e) = &r.example {
                out.push_str(&format!("  example: {}\n", quote(e)));
            }
            if let Some(c) = &r.category {
                out.push_str(&format!("  category: {c}\n"));
            }
            if let Some(v) = &r.value {
                out.push_str(&format!("  value: {v}\n"));
            }
            out.push_str("  pattern: |\n");
            match &r.body {
                RuleBody::Dependency { trigger, captures } => {
                    out.push_str(&format!("    trigger = {trigger}\n"));
                    for c in captures {
                        out.push_str(&format!("    {}", c.name));
                        if let Some(l) = &c.label {
                            out.push_str(&format!(": {l}"));
                        }
                        out.push_str(" =");
                        for s in &c.path {
                            out.push_str(&format!(" {}{}", if s.upward { "<" } else { ">" }, s.relation));
                        }
                        if let Some(t) = &c.target {
                            out.push_str(&format!(" {t}"));
                        }
                        out.push('\n');
                    }
                }
                RuleBody::Token(items) => {
                    out.push_str("    ");
                    let mut i = 0;
                    let mut first = true;
                    while i < items.len() {
                        if !first {
                            out.push(' ');
                        }
                        first = false;
                        match &items[i].capture {
                            Some(name) => {
                                let mut j = i;
                                out.push_str(&format!("(?<{name}>"));
                                while j < items.len() && items[j].capture.as_ref() == Some(name) {
                                    out.push_str(&format!(" {}{}", items[j].constraint, items[j].quantifier.suffix()));
                                    j += 1;
                                }
                                out.push_str(" )");
                                i = j;
                            }
                            None => {
                                out.push_str(&format!("{}{}", items[i].constraint, items[i].quantifier.suffix()));
                                i += 1;
                            }
                        }
                    }
                    out.push('\n');
                }
            }
        }
        out
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn unquote(s: &str) -> String {
    let t = s.trim();
    if t.len() >= 2 && t.starts_with('"') && t.ends_with('"') {
        let inner = &t[1..t.len() - 1];
        let mut out = String::new();
        let mut chars = inner.chars();
        while let Some(c) = chars.next() {
            if c == '\\' {
                if let Some(n) = chars.next() {
                    out.push(n);
                }
            } else {
                out.push(c);
            }
        }
        out
    } else {
        t.to_string()
    }
}

/// Universal Dependencies relations (plus a few common legacy labels). A
/// relation may carry a subtype after `_` or `:` (`nmod_of`, `obl:tmod`).
const RELATIONS: &[&str] = &[
    "acl", "advcl", "advmod", "amod", "appos", "aux", "case", "cc", "ccomp", "clf", "compound", "conj", "cop",
    "csubj", "dep", "det", "discourse", "dislocated", "dobj", "expl", "fixed", "flat", "goeswith", "iobj", "list",
    "mark", "neg", "nmod", "nsubj", "nummod", "obj", "obl", "orphan", "parataxis", "pobj", "poss", "prep", "punct",
    "reparandum", "root", "vocative", "xcomp",
];

pub fn is_known_relation(rel: &str) -> bool {
    let base = rel.split(['_', ':']).next().unwrap_or("");
    RELATIONS.contains(&base)
        && rel.split(['_', ':']).all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_lowercase()))
}

// ---------------------------------------------------------------------------
// file-level parsing

const KEYS: &[&str] = &["name", "label", "example", "type", "pattern", "priority", "kind", "category", "value"];

struct RawRule {
    line: usize,
    fields: BTreeMap<String, (String, usize)>,
}

impl RawRule {
    fn name(&self) -> Option<String> {
        self.fields.get("name").map(|(v, _)| v.clone())
    }
}

fn split_key(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once(':')?;
    let k = k.trim();
    if k.is_empty() || !k.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-') {
        return None;
    }
    Some((k, v.trim()))
}

fn indent_of(line: &str) -> usize {
    line.len() - line.trim_start().len()
}

fn parse_raw(source: &str) -> Result<Vec<RawRule>, RuleError> {
    let mut rules: Vec<RawRule> = Vec::new();
    // (key, indent of key line, collected lines with their numbers)
    let mut block: Option<(String, usize, usize, Vec<(usize, String)>)> = None;

    fn finish_block(rules: &mut [RawRule], block: (String, usize, usize, Vec<(usize, String)>)) {
        let (key, _, key_line, mut lines) = block;
        while lines.last().is_some_and(|(_, l)| l.trim().is_empty()) {
            lines.pop();
        }
        let common = lines.iter().filter(|(_, l)| !l.trim().is_empty()).map(|(_, l)| indent_of(l)).min().unwrap_or(0);
        let text: Vec<String> =
            lines.iter().map(|(_, l)| if l.len() >= common { l[common..].to_string() } else { String::new() }).collect();
        let first_line = lines.first().map_or(key_line, |(n, _)| *n);
        if let Some(r) = rules.last_mut() {
            r.fields.insert(key, (text.join("\n"), first_line));
        }
    }

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        if let Some((_, key_indent, _, lines)) = block.as_mut() {
            if line.trim().is_empty() {
                lines.push((lineno, String::new()));
                continue;
            }
            if indent_of(line) > *key_indent {
                lines.push((lineno, line.to_string()));
                continue;
            }
            let b = block.take().expect("block present");
            finish_block(&mut rules, b);
        }
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let indent = indent_of(line);
        let (content, key_indent) = if let Some(rest) = trimmed.strip_prefix("- ") {
            rules.push(RawRule { line: lineno, fields: BTreeMap::new() });
            (rest.trim(), indent + 2)
        } else if trimmed == "-" {
            rules.push(RawRule { line: lineno, fields: BTreeMap::new() });
            continue;
        } else {
            (trimmed, indent)
        };
        let current_name = rules.last().and_then(RawRule::name);
        let Some(rule) = rules.last_mut() else {
            return Err(RuleError::Syntax { rule: None, line: lineno, message: "expected `- name: ...` to start a rule".into() });
        };
        let Some((key, value)) = split_key(content) else {
            return Err(RuleError::Syntax { rule: current_name, line: lineno, message: format!("expected `key: value`, found `{content}`") });
        };
        if !KEYS.contains(&key) {
            return Err(RuleError::UnknownField { rule: current_name, line: lineno, key: key.to_string() });
        }
        if rule.fields.contains_key(key) {
            return Err(RuleError::Syntax { rule: current_name, line: lineno, message: format!("key `{key}` given twice") });
        }
        if value == "|" || value == "|-" {
            // block lines must be indented deeper than their key
            block = Some((key.to_string(), key_indent, lineno, Vec::new()));
        } else {
            rule.fields.insert(key.to_string(), (unquote(value), lineno));
        }
    }
    if let Some(b) = block.take() {
        finish_block(&mut rules, b);
    }
    Ok(rules)
}

/// Compiles rule-file text into a rule set.
pub fn compile_rules(source: &str) -> Result<RuleSet, RuleError> {
    let raw = parse_raw(source)?;
    let mut names: BTreeSet<String> = BTreeSet::new();
    let mut rules = Vec::with_capacity(raw.len());
    for r in raw {
        let rule_name = r.name();
        let syntax = |line: usize, message: String| RuleError::Syntax { rule: rule_name.clone(), line, message };
        let require = |key: &str| {
            r.fields
                .get(key)
                .cloned()
                .filter(|(v, _)| !v.trim().is_empty())
                .ok_or_else(|| syntax(r.line, format!("missing `{key}`")))
        };
        let (name, name_line) = require("name")?;
        if !names.insert(name.clone()) {
            return Err(RuleError::DuplicateName { name, line: name_line });
        }
        let (label, _) = require("label")?;
        let (type_value, type_line) = require("type")?;
        let kind = match type_value.as_str() {
            "dependency" => RuleKind::DependencyPattern,
            "token" => RuleKind::TokenPattern,
            other => return Err(syntax(type_line, format!("type must be `token` or `dependency`, found `{other}`"))),
        };
        let fragment_kind = match r.fields.get("kind") {
            Some((v, l)) => FragmentKind::parse(v).ok_or_else(|| syntax(*l, format!("unknown fragment kind `{v}`")))?,
            None => FragmentKind::Identifier,
        };
        let priority = match r.fields.get("priority") {
            Some((v, l)) => v.parse().map_err(|_| syntax(*l, format!("priority must be an integer, found `{v}`")))?,
            None => 0,
        };
        let value = r.fields.get("value").map(|(v, _)| v.clone());
        if let Some(v) = &value {
            if v != "true" && v != "false" {
                return Err(syntax(r.fields["value"].1, format!("value must be true or false, found `{v}`")));
            }
        }
        if fragment_kind == FragmentKind::BooleanValue && value.is_none() {
            return Err(syntax(r.line, "boolean rules need `value: true|false`".into()));
        }
        let (pattern, pattern_line) = require("pattern")?;
        let ctx = Ctx { rule: Some(name.clone()) };
        let body = match kind {
            RuleKind::DependencyPattern => ctx.dependency_body(&pattern, pattern_line)?,
            RuleKind::TokenPattern => ctx.token_body(&pattern, pattern_line)?,
        };
        rules.push(Rule {
            name,
            label,
            kind,
            fragment_kind,
            priority,
            example: r.fields.get("example").map(|(v, _)| v.clone()),
            category: r.fields.get("category").map(|(v, _)| v.clone()),
            value,
            body,
        });
    }
    Ok(RuleSet { rules })
}

// ---------------------------------------------------------------------------
// pattern bodies

struct Ctx {
    rule: Option<String>,
}

/// Joins physical lines while a `[` or `(` is still open, keeping the line
/// number of the first piece. Whitespace at the join is dropped so a regex
/// alternation may wrap across lines.
fn logical_lines(text: &str, first_line: usize) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    let mut open = false;
    for (i, line) in text.lines().enumerate() {
        let piece = line.trim();
        if open {
            if let Some(last) = out.last_mut() {
                last.1.push_str(piece);
            }
        } else if !piece.is_empty() {
            out.push((first_line + i, piece.to_string()));
        }
        open = out.last().is_some_and(|(_, l)| bracket_depth(l) > 0);
    }
    out
}

fn bracket_depth(s: &str) -> i32 {
    let mut d = 0;
    let mut in_regex = false;
    let mut escaped = false;
    let mut prev = ' ';
    for c in s.chars() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '/' && (in_regex || prev == '=') {
            in_regex = !in_regex;
        } else if !in_regex {
            match c {
                '[' | '(' => d += 1,
                ']' | ')' => d -= 1,
                _ => {}
            }
        }
        prev = c;
    }
    d
}

impl Ctx {
    fn syntax(&self, line: usize, message: impl Into<String>) -> RuleError {
        RuleError::Syntax { rule: self.rule.clone(), line, message: message.into() }
    }

    fn dependency_body(&self, text: &str, first_line: usize) -> Result<RuleBody, RuleError> {
        let mut trigger = None;
        let mut captures = Vec::new();
        let mut capture_names = BTreeSet::new();
        for (line, l) in logical_lines(text, first_line) {
            if let Some(rest) = l.strip_prefix("trigger") {
                let rest = rest.trim_start();
                if let Some(rest) = rest.strip_prefix('=') {
                    if trigger.is_some() {
                        return Err(self.syntax(line, "more than one trigger"));
                    }
                    let mut sc = Scanner::new(rest, line);
                    sc.skip_ws();
                    let c = self.constraint(&mut sc)?;
                    sc.skip_ws();
                    if !sc.done() {
                        return Err(self.syntax(line, format!("unexpected `{}` after trigger", sc.rest())));
                    }
                    trigger = Some(c);
                    continue;
                }
            }
            let (lhs, rhs) = l.split_once('=').ok_or_else(|| self.syntax(line, format!("expected `name: Label = path`, found `{l}`")))?;
            let (name, label) = match lhs.split_once(':') {
                Some((n, lab)) => (n.trim(), Some(lab.trim().to_string()).filter(|s| !s.is_empty())),
                None => (lhs.trim(), None),
            };
            if name.is_empty() || !name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_') {
                return Err(self.syntax(line, format!("bad capture name `{name}`")));
            }
            if !capture_names.insert(name.to_string()) {
                return Err(self.syntax(line, format!("capture `{name}` defined twice")));
            }
            let mut sc = Scanner::new(rhs, line);
            let mut path = Vec::new();
            let mut target = None;
            loop {
                sc.skip_ws();
                if sc.done() {
                    break;
                }
                if sc.peek() == Some('[') {
                    target = Some(self.constraint(&mut sc)?);
                    sc.skip_ws();
                    if !sc.done() {
                        return Err(self.syntax(line, "target constraint must end the capture line"));
                    }
                    break;
                }
                let upward = match sc.peek() {
                    Some('<') => {
                        sc.bump();
                        true
                    }
                    Some('>') => {
                        sc.bump();
                        false
                    }
                    _ => false,
                };
                let rel = sc.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == ':');
                if rel.is_empty() {
                    return Err(self.syntax(line, format!("expected a relation label at `{}`", sc.rest())));
                }
                if !is_known_relation(&rel) {
                    return Err(self.syntax(line, format!("unknown dependency relation `{rel}`")));
                }
                path.push(PathStep { upward, relation: rel });
            }
            if path.is_empty() {
                return Err(self.syntax(line, format!("capture `{name}` has an empty path")));
            }
            captures.push(DepCapture { name: name.to_string(), label, path, target });
        }
        let trigger = trigger.ok_or_else(|| self.syntax(first_line, "dependency pattern needs a `trigger = [...]` line"))?;
        Ok(RuleBody::Dependency { trigger, captures })
    }

    fn token_body(&self, text: &str, first_line: usize) -> Result<RuleBody, RuleError> {
        let joined: Vec<(usize, String)> = logical_lines(text, first_line);
        let mut items = Vec::new();
        let mut seen_groups = BTreeSet::new();
        for (line, l) in joined {
            let mut sc = Scanner::new(&l, line);
            loop {
                sc.skip_ws();
                if sc.done() {
                    break;
                }
                if sc.eat("(?<") {
                    let name = sc.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
                    if name.is_empty() || !sc.eat(">") {
                        return Err(self.syntax(line, "expected `(?<name>`"));
                    }
                    if !seen_groups.insert(name.clone()) {
                        return Err(self.syntax(line, format!("capture `{name}` defined twice")));
                    }
                    let before = items.len();
                    loop {
                        sc.skip_ws();
                        if sc.eat(")") {
                            break;
                        }
                        if sc.done() {
                            return Err(self.syntax(line, format!("unclosed group `{name}`")));
                        }
                        let mut item = self.item(&mut sc)?;
                        item.capture = Some(name.clone());
                        items.push(item);
                    }
                    if items.len() == before {
                        return Err(self.syntax(line, format!("empty group `{name}`")));
                    }
                    if matches!(sc.peek(), Some('?' | '+' | '*')) {
                        return Err(self.syntax(line, "quantifiers on groups are not supported"));
                    }
                } else {
                    items.push(self.item(&mut sc)?);
                }
            }
        }
        if items.is_empty() {
            return Err(self.syntax(first_line, "empty token pattern"));
        }
        if items.iter().all(|i| matches!(i.quantifier, Quantifier::Optional | Quantifier::Star)) {
            return Err(self.syntax(first_line, "token pattern can match the empty sequence"));
        }
        Ok(RuleBody::Token(items))
    }

    fn item(&self, sc: &mut Scanner) -> Result<PatternItem, RuleError> {
        let constraint = self.constraint(sc)?;
        let quantifier = match sc.peek() {
            Some('?') => Quantifier::Optional,
            Some('+') => Quantifier::Plus,
            Some('*') => Quantifier::Star,
            _ => Quantifier::One,
        };
        if quantifier != Quantifier::One {
            sc.bump();
        }
        Ok(PatternItem { constraint, quantifier, capture: None })
    }

    fn constraint(&self, sc: &mut Scanner) -> Result<TokenConstraint, RuleError> {
        let line = sc.line;
        if !sc.eat("[") {
            return Err(self.syntax(line, format!("expected `[` at `{}`", sc.rest())));
        }
        let mut tests = Vec::new();
        loop {
            sc.skip_ws();
            if sc.eat("]") {
                break;
            }
            if !tests.is_empty() && !(sc.eat("&") || sc.eat(",")) {
                return Err(self.syntax(line, format!("expected `&` or `]` at `{}`", sc.rest())));
            }
            sc.skip_ws();
            let field_name = sc.take_while(|c| c.is_ascii_alphabetic());
            let field = match field_name.as_str() {
                "word" => TokenField::Word,
                "tag" => TokenField::Tag,
                "entity" => TokenField::Entity,
                "" => return Err(self.syntax(line, format!("expected a field name at `{}`", sc.rest()))),
                other => {
                    return Err(RuleError::UnknownField { rule: self.rule.clone(), line, key: other.to_string() })
                }
            };
            sc.skip_ws();
            if !sc.eat("=") {
                return Err(self.syntax(line, format!("expected `=` after `{field_name}`")));
            }
            sc.skip_ws();
            let matcher = match sc.peek() {
                Some('/') => {
                    sc.bump();
                    let pat = sc.delimited('/').ok_or_else(|| self.syntax(line, "unterminated regex"))?;
                    let re = Regex::new(&pat).map_err(|e| RuleError::InvalidRegex {
                        rule: self.rule.clone(),
                        line,
                        pattern: pat.clone(),
                        message: e.to_string().lines().last().unwrap_or_default().to_string(),
                    })?;
                    Matcher::Regex(re)
                }
                Some('"') => {
                    sc.bump();
                    Matcher::Exact(sc.delimited('"').ok_or_else(|| self.syntax(line, "unterminated string"))?)
                }
                _ => {
                    let v = sc.take_while(|c| !c.is_whitespace() && c != '&' && c != ']' && c != ',');
                    if v.is_empty() {
                        return Err(self.syntax(line, format!("missing value for `{field_name}`")));
                    }
                    Matcher::Exact(v)
                }
            };
            tests.push(FieldTest { field, matcher });
            if sc.done() {
                return Err(self.syntax(line, "unclosed `[`"));
            }
        }
        Ok(TokenConstraint { tests })
    }
}

struct Scanner<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str, line: usize) -> Self {
        Scanner { s, pos: 0, line }
    }

    fn rest(&self) -> &'a str {
        &self.s[self.pos..]
    }

    fn done(&self) -> bool {
        self.pos >= self.s.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) {
        if let Some(c) = self.peek() {
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.bump();
        }
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.bump();
        }
        self.s[start..self.pos].to_string()
    }

    /// Reads up to an unescaped `close`; `\close` becomes `close`, other
    /// escapes are kept for the regex engine.
    fn delimited(&mut self, close: char) -> Option<String> {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            self.bump();
            if c == '\\' {
                let n = self.peek()?;
                self.bump();
                if n == close || (close == '"' && n == '\\') {
                    out.push(n);
                } else {
                    out.push('\\');
                    out.push(n);
                }
            } else if c == close {
                return Some(out);
            } else {
                out.push(c);
            }
        }
        None
    }
}
