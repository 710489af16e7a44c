//! Industrial domain ontologies and agent repositories.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::diagnostic::{Diagnostic, Span};
use crate::protocol::{Direction, LocalProtocol, Participant};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyDef {
    pub name: String,
    /// Enumeration labels; empty for scalar properties.
    pub labels: Vec<String>,
    pub span: Span,
}

impl PropertyDef {
    pub fn is_enum(&self) -> bool {
        !self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimatorDef {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassKind {
    Physical,
    Actuator,
}

impl ClassKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ClassKind::Physical => "physical",
            ClassKind::Actuator => "actuator",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentClass {
    pub name: String,
    pub kind: ClassKind,
    pub attributes: Vec<String>,
    pub intra_edges: Vec<(String, String)>,
    pub span: Span,
}

impl ComponentClass {
    pub fn has_attribute(&self, a: &str) -> bool {
        self.attributes.iter().any(|x| x == a)
    }
}

/// `class.attribute`, where the class names the source or target class of
/// the enclosing rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QualifiedAttr {
    pub class: String,
    pub attribute: String,
}

impl fmt::Display for QualifiedAttr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.attribute)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationRule {
    pub source_class: String,
    pub target_class: String,
    pub edges: Vec<(QualifiedAttr, QualifiedAttr)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndustrialDomain {
    pub properties: Vec<PropertyDef>,
    pub model: Vec<EstimatorDef>,
    pub classes: Vec<ComponentClass>,
    pub rules: Vec<TranslationRule>,
}

/// What an attribute name denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrKind {
    Property,
    Estimator,
}

impl IndustrialDomain {
    pub fn property(&self, name: &str) -> Option<&PropertyDef> {
        self.properties.iter().find(|p| p.name == name)
    }

    pub fn estimator(&self, name: &str) -> Option<&EstimatorDef> {
        self.model.iter().find(|e| e.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ComponentClass> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn attr_kind(&self, name: &str) -> Option<AttrKind> {
        if self.property(name).is_some() {
            Some(AttrKind::Property)
        } else if self.estimator(name).is_some() {
            Some(AttrKind::Estimator)
        } else {
            None
        }
    }

    pub fn rule(&self, source: &str, target: &str) -> Option<&TranslationRule> {
        self.rules
            .iter()
            .find(|r| r.source_class == source && r.target_class == target)
    }

    /// Properties that no estimator ever outputs anywhere in the domain
    /// (shapes and similar constants). They are preconfigured in agents and
    /// never become tree inputs.
    pub fn parameter_properties(&self) -> BTreeSet<String> {
        let mut estimated = HashSet::new();
        let is_est = |a: &str| self.estimator(a).is_some();
        for c in &self.classes {
            for (a, b) in &c.intra_edges {
                if is_est(a) {
                    estimated.insert(b.clone());
                }
            }
        }
        for r in &self.rules {
            for (a, b) in &r.edges {
                if is_est(&a.attribute) {
                    estimated.insert(b.attribute.clone());
                }
            }
        }
        self.properties
            .iter()
            .filter(|p| !p.is_enum() && !estimated.contains(&p.name))
            .map(|p| p.name.clone())
            .collect()
    }
}

/// Checks the domain invariants, one diagnostic per violation.
pub fn validate_domain(d: &IndustrialDomain) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names: HashMap<&str, &str> = HashMap::new();
    for p in &d.properties {
        if names.insert(&p.name, "property").is_some() {
            out.push(Diagnostic::error(p.span.0, format!("duplicate name `{}`", p.name)));
        }
        let mut seen = HashSet::new();
        for l in &p.labels {
            if !seen.insert(l) {
                out.push(Diagnostic::error(
                    p.span.0,
                    format!("enumeration `{}` repeats label `{l}`", p.name),
                ));
            }
        }
    }
    for e in &d.model {
        if let Some(prev) = names.insert(&e.name, "estimator") {
            out.push(Diagnostic::error(
                e.span.0,
                format!("duplicate name `{}` (already declared as {prev})", e.name),
            ));
        }
    }
    let mut class_names = HashSet::new();
    for c in &d.classes {
        if !class_names.insert(&c.name) {
            out.push(Diagnostic::error(c.span.0, format!("duplicate class `{}`", c.name)));
        }
        let mut attrs = HashSet::new();
        for a in &c.attributes {
            if !attrs.insert(a) {
                out.push(Diagnostic::error(
                    c.span.0,
                    format!("class `{}` repeats attribute `{a}`", c.name),
                ));
            }
            match d.property(a) {
                Some(p) if p.is_enum() => out.push(Diagnostic::error(
                    c.span.0,
                    format!("class `{}` uses enumeration `{a}` as an attribute", c.name),
                )),
                Some(_) => {}
                None if d.estimator(a).is_some() => {}
                None => out.push(Diagnostic::error(
                    c.span.0,
                    format!("class `{}` has undeclared attribute `{a}`", c.name),
                )),
            }
        }
        for (a, b) in &c.intra_edges {
            let mut ok = true;
            for x in [a, b] {
                if !c.has_attribute(x) {
                    ok = false;
                    out.push(Diagnostic::error(
                        c.span.0,
                        format!("edge {a} -> {b}: `{x}` is not an attribute of `{}`", c.name),
                    ));
                }
            }
            if ok {
                check_edge_kind(d, a, b, &format!("class `{}`", c.name), c.span, &mut out);
            }
        }
    }
    let mut rule_pairs = HashSet::new();
    for r in &d.rules {
        let here = format!("translation {} -> {}", r.source_class, r.target_class);
        let mut classes_ok = true;
        for cls in [&r.source_class, &r.target_class] {
            if d.class(cls).is_none() {
                classes_ok = false;
                out.push(Diagnostic::error(r.span.0, format!("{here}: unknown class `{cls}`")));
            }
        }
        if r.source_class == r.target_class {
            out.push(Diagnostic::error(
                r.span.0,
                format!("{here}: a class cannot be translated against itself"),
            ));
            continue;
        }
        if !rule_pairs.insert((&r.source_class, &r.target_class)) {
            out.push(Diagnostic::error(r.span.0, format!("{here}: duplicate rule")));
        }
        if !classes_ok {
            continue;
        }
        for (a, b) in &r.edges {
            let mut ok = true;
            for q in [a, b] {
                let owner = if q.class == r.source_class || q.class == r.target_class {
                    d.class(&q.class)
                } else {
                    None
                };
                match owner {
                    Some(c) if c.has_attribute(&q.attribute) => {}
                    Some(c) => {
                        ok = false;
                        out.push(Diagnostic::error(
                            r.span.0,
                            format!("{here}: `{}` is not an attribute of `{}`", q.attribute, c.name),
                        ));
                    }
                    None => {
                        ok = false;
                        out.push(Diagnostic::error(
                            r.span.0,
                            format!("{here}: `{q}` does not name the source or target class"),
                        ));
                    }
                }
            }
            if ok {
                check_edge_kind(d, &a.attribute, &b.attribute, &here, r.span, &mut out);
            }
        }
    }
    out
}

fn check_edge_kind(d: &IndustrialDomain, a: &str, b: &str, ctx: &str, span: Span, out: &mut Vec<Diagnostic>) {
    match (d.attr_kind(a), d.attr_kind(b)) {
        (Some(x), Some(y)) if x == y => {
            let what = if x == AttrKind::Property {
                "two properties"
            } else {
                "two estimators"
            };
            out.push(Diagnostic::error(
                span.0,
                format!("{ctx}: edge {a} -> {b} connects {what}"),
            ));
        }
        _ => {}
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentKind {
    Estimate,
    Sense,
    Control,
    Actuate,
}

impl AgentKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AgentKind::Estimate => "estimate",
            AgentKind::Sense => "sense",
            AgentKind::Control => "control",
            AgentKind::Actuate => "actuate",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentTemplate {
    pub kind: AgentKind,
    pub subject: String,
    pub name: String,
    pub protocol: LocalProtocol,
    pub span: Span,
}

/// Parses `producerN` / `consumerN` placeholders.
pub fn placeholder(p: &Participant) -> Option<(Direction, usize)> {
    let s = p.as_str();
    let (dir, digits) = match (s.strip_prefix("producer"), s.strip_prefix("consumer")) {
        (Some(d), _) => (Direction::Receive, d),
        (_, Some(d)) => (Direction::Send, d),
        _ => return None,
    };
    if digits.is_empty() || digits.starts_with('0') || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|n| (dir, n))
}

impl AgentTemplate {
    fn placeholders(&self, dir: Direction) -> Vec<Participant> {
        let mut found: Vec<(usize, Participant)> = self
            .protocol
            .participants()
            .into_iter()
            .filter_map(|p| match placeholder(&p) {
                Some((d, n)) if d == dir => Some((n, p)),
                _ => None,
            })
            .collect();
        found.sort();
        found.into_iter().map(|(_, p)| p).collect()
    }

    /// Producer placeholders in index order.
    pub fn producers(&self) -> Vec<Participant> {
        self.placeholders(Direction::Receive)
    }

    pub fn consumers(&self) -> Vec<Participant> {
        self.placeholders(Direction::Send)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repository {
    /// Name of the domain the repository belongs to.
    pub name: String,
    pub templates: Vec<AgentTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("no {kind} template for `{subject}`")]
    NotFound { kind: AgentKind, subject: String },
    #[error("{count} {kind} templates for `{subject}`; expected exactly one")]
    Ambiguous {
        kind: AgentKind,
        subject: String,
        count: usize,
    },
}

impl Repository {
    pub fn template(&self, name: &str) -> Option<&AgentTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }
}

pub fn lookup_template<'a>(
    r: &'a Repository,
    kind: AgentKind,
    subject: &str,
) -> Result<&'a AgentTemplate, LookupError> {
    let found: Vec<&AgentTemplate> = r
        .templates
        .iter()
        .filter(|t| t.kind == kind && t.subject == subject)
        .collect();
    match found.as_slice() {
        [t] => Ok(t),
        [] => Err(LookupError::NotFound {
            kind,
            subject: subject.to_string(),
        }),
        _ => Err(LookupError::Ambiguous {
            kind,
            subject: subject.to_string(),
            count: found.len(),
        }),
    }
}

/// Checks a repository against its domain.
pub fn validate_repository(r: &Repository, d: &IndustrialDomain) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut names = HashSet::new();
    for t in &r.templates {
        let at = t.span.0;
        if !names.insert(&t.name) {
            out.push(Diagnostic::error(at, format!("duplicate template name `{}`", t.name)));
        }
        let subject_ok = match t.kind {
            AgentKind::Estimate => d.estimator(&t.subject).is_some(),
            AgentKind::Sense => d.property(&t.subject).is_some_and(|p| !p.is_enum()),
            AgentKind::Control | AgentKind::Actuate => {
                d.class(&t.subject).is_some_and(|c| c.kind == ClassKind::Actuator)
            }
        };
        if !subject_ok {
            let expected = match t.kind {
                AgentKind::Estimate => "an estimator of the model",
                AgentKind::Sense => "a scalar property",
                AgentKind::Control | AgentKind::Actuate => "an actuator class",
            };
            out.push(Diagnostic::error(
                at,
                format!("{} `{}`: subject `{}` is not {expected}", t.kind, t.name, t.subject),
            ));
        }
        if let Err(e) = t.protocol.validate() {
            out.push(Diagnostic::error(at, format!("template `{}`: {e}", t.name)));
        }
        for p in t.protocol.participants() {
            if placeholder(&p).is_none() {
                out.push(Diagnostic::error(
                    at,
                    format!(
                        "template `{}` talks to `{p}`; only producerN and consumerN placeholders are allowed",
                        t.name
                    ),
                ));
            }
        }
        let mut check_payload = |payload: &str| {
            if d.property(payload).is_none() {
                out.push(Diagnostic::error(
                    at,
                    format!("template `{}` exchanges undeclared property `{payload}`", t.name),
                ));
            }
        };
        let mut stack = vec![&t.protocol];
        while let Some(p) = stack.pop() {
            match p {
                LocalProtocol::End | LocalProtocol::Var(_) => {}
                LocalProtocol::Prefix(a, k) => {
                    check_payload(a.payload.as_str());
                    stack.push(k);
                }
                LocalProtocol::Rec(_, k) => stack.push(k),
                LocalProtocol::Choice(c) => {
                    stack.extend(c.branches().iter().map(|(_, k)| k));
                }
            }
        }
        for c in t.protocol.choices() {
            match d.property(c.sort.as_str()) {
                Some(p) if p.is_enum() => {
                    for l in c.labels() {
                        if !p.labels.iter().any(|x| x == l.as_str()) {
                            out.push(Diagnostic::error(
                                at,
                                format!("template `{}`: `{l}` is not a label of `{}`", t.name, p.name),
                            ));
                        }
                    }
                }
                _ => out.push(Diagnostic::error(
                    at,
                    format!(
                        "template `{}`: choice over `{}`, which is not an enumeration",
                        t.name, c.sort
                    ),
                )),
            }
        }
    }
    out
}
