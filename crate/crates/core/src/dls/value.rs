//! Feature-structure values and their validation against resolved classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::TypeExpr;
use super::schema::{ResolveError, ResolveErrorKind, Schema};
use super::sexpr::Pos;

pub type Features = BTreeMap<String, FeatureValue>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureValue {
    Atom(String),
    Text(String),
    Fs(Features),
    List(Vec<FeatureValue>),
    Set(BTreeSet<FeatureValue>),
    Tree(TreeVal),
    Graph(GraphVal),
    Automaton(AutomatonVal),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TreeVal {
    pub node: Box<FeatureValue>,
    #[serde(default)]
    pub children: Vec<TreeVal>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphVal {
    pub nodes: BTreeMap<String, FeatureValue>,
    /// `(from, to, label)`
    #[serde(default)]
    pub edges: BTreeSet<(String, String, String)>,
}

/// A finite-state acceptor. Only its structure is checked.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AutomatonVal {
    pub states: BTreeSet<String>,
    pub alphabet: BTreeSet<String>,
    /// `(from, symbol, to)`
    pub transitions: BTreeSet<(String, String, String)>,
    pub start: String,
    pub finals: BTreeSet<String>,
}

impl FeatureValue {
    pub fn atom(s: &str) -> FeatureValue {
        FeatureValue::Atom(s.to_string())
    }

    pub fn text(s: &str) -> FeatureValue {
        FeatureValue::Text(s.to_string())
    }

    pub fn atoms<'a>(symbols: impl IntoIterator<Item = &'a str>) -> FeatureValue {
        FeatureValue::Set(symbols.into_iter().map(FeatureValue::atom).collect())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FeatureValue::Atom(_) => "atom",
            FeatureValue::Text(_) => "text",
            FeatureValue::Fs(_) => "feature-structure",
            FeatureValue::List(_) => "list",
            FeatureValue::Set(_) => "set",
            FeatureValue::Tree(_) => "tree",
            FeatureValue::Graph(_) => "graph",
            FeatureValue::Automaton(_) => "automaton",
        }
    }

    pub fn as_fs(&self) -> Option<&Features> {
        match self {
            FeatureValue::Fs(m) => Some(m),
            _ => None,
        }
    }

    /// Removes empty nested feature structures, so that "empty" and
    /// "absent" coincide.
    pub fn prune(&mut self) {
        match self {
            FeatureValue::Fs(map) => prune_features(map),
            FeatureValue::List(items) => items.iter_mut().for_each(FeatureValue::prune),
            FeatureValue::Set(items) => {
                *items = std::mem::take(items)
                    .into_iter()
                    .map(|mut v| {
                        v.prune();
                        v
                    })
                    .collect();
            }
            FeatureValue::Tree(t) => t.prune(),
            FeatureValue::Graph(g) => g.nodes.values_mut().for_each(FeatureValue::prune),
            FeatureValue::Atom(_) | FeatureValue::Text(_) | FeatureValue::Automaton(_) => {}
        }
    }
}

impl TreeVal {
    fn prune(&mut self) {
        self.node.prune();
        self.children.iter_mut().for_each(TreeVal::prune);
    }

    pub fn for_each_node<'a>(&'a self, f: &mut impl FnMut(&'a FeatureValue)) {
        f(&self.node);
        for c in &self.children {
            c.for_each_node(f);
        }
    }
}

pub fn prune_features(map: &mut Features) {
    for v in map.values_mut() {
        v.prune();
    }
    map.retain(|_, v| !matches!(v, FeatureValue::Fs(m) if m.is_empty()));
}

/// Looks up a nested feature. Absent anywhere along the path yields `None`.
pub fn get_path<'a>(features: &'a Features, path: &[String]) -> Option<&'a FeatureValue> {
    let (first, rest) = path.split_first()?;
    let value = features.get(first)?;
    if rest.is_empty() {
        Some(value)
    } else {
        get_path(value.as_fs()?, rest)
    }
}

/// Stores `value` at `path`, creating intermediate structures. Returns false
/// when a non-structure value is in the way.
pub fn set_path(features: &mut Features, path: &[String], value: FeatureValue) -> bool {
    let Some((first, rest)) = path.split_first() else {
        return false;
    };
    if rest.is_empty() {
        features.insert(first.clone(), value);
        return true;
    }
    let slot = features
        .entry(first.clone())
        .or_insert_with(|| FeatureValue::Fs(Features::new()));
    match slot {
        FeatureValue::Fs(inner) => set_path(inner, rest, value),
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "fault", rename_all = "snake_case")]
pub enum FaultKind {
    UnknownFeature { feature: String },
    WrongKind { expected: String, found: String },
    NotInOneOf { symbol: String, allowed: Vec<String> },
    OneOfCardinality,
    AnyOfNotSubset { symbols: Vec<String> },
    EmptyAnyOf,
    /// Graph/automaton structure problems (dangling edges, unknown states).
    Structure { detail: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fault {
    /// Dotted feature path, `""` for the value itself.
    pub path: String,
    #[serde(flatten)]
    pub kind: FaultKind,
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.path.is_empty() { "<root>" } else { &self.path };
        match &self.kind {
            FaultKind::UnknownFeature { feature } => write!(f, "{at}: unknown feature `{feature}`"),
            FaultKind::WrongKind { expected, found } => {
                write!(f, "{at}: expected {expected}, found {found}")
            }
            FaultKind::NotInOneOf { symbol, allowed } => {
                write!(f, "{at}: '{symbol} is not one of {}", allowed.join(" "))
            }
            FaultKind::OneOfCardinality => write!(f, "{at}: one-of feature must hold exactly one symbol"),
            FaultKind::AnyOfNotSubset { symbols } => {
                write!(f, "{at}: symbols {} are not declared", symbols.join(" "))
            }
            FaultKind::EmptyAnyOf => write!(f, "{at}: any-of feature holds an empty set"),
            FaultKind::Structure { detail } => write!(f, "{at}: {detail}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub faults: Vec<Fault>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.faults.is_empty()
    }
}

/// Checks `value` against the resolved class `class_name`.
pub fn validate_value(
    value: &FeatureValue,
    class_name: &str,
    schema: &Schema,
) -> Result<ValidationReport, ResolveError> {
    let class = schema.class(class_name).ok_or_else(|| ResolveError {
        pos: Pos::default(),
        kind: ResolveErrorKind::UnknownClass(class_name.to_string()),
    })?;
    let mut report = ValidationReport::default();
    let mut v = Validator { schema, faults: &mut report.faults };
    v.check(value, &class.body, &mut Vec::new());
    Ok(report)
}

/// Same as [`validate_value`] for a bare feature map.
pub fn validate_features(
    features: &Features,
    class_name: &str,
    schema: &Schema,
) -> Result<ValidationReport, ResolveError> {
    validate_value(&FeatureValue::Fs(features.clone()), class_name, schema)
}

struct Validator<'a> {
    schema: &'a Schema,
    faults: &'a mut Vec<Fault>,
}

impl Validator<'_> {
    fn fault(&mut self, path: &[String], kind: FaultKind) {
        self.faults.push(Fault { path: path.join("."), kind });
    }

    fn wrong_kind(&mut self, path: &[String], expected: &str, found: &FeatureValue) {
        self.fault(
            path,
            FaultKind::WrongKind { expected: expected.to_string(), found: found.kind_name().to_string() },
        );
    }

    fn check(&mut self, value: &FeatureValue, ty: &TypeExpr, path: &mut Vec<String>) {
        match ty {
            TypeExpr::String => {
                if !matches!(value, FeatureValue::Text(_)) {
                    self.wrong_kind(path, "text", value);
                }
            }
            TypeExpr::Symbol => {
                if !matches!(value, FeatureValue::Atom(_)) {
                    self.wrong_kind(path, "atom", value);
                }
            }
            TypeExpr::OneOf(allowed) => match value {
                FeatureValue::Atom(sym) => {
                    if !allowed.contains(sym) {
                        self.fault(
                            path,
                            FaultKind::NotInOneOf { symbol: sym.clone(), allowed: allowed.clone() },
                        );
                    }
                }
                FeatureValue::Set(_) | FeatureValue::List(_) => self.fault(path, FaultKind::OneOfCardinality),
                other => self.wrong_kind(path, "atom", other),
            },
            TypeExpr::AnyOf(allowed) => match value {
                FeatureValue::Set(items) => {
                    if items.is_empty() {
                        self.fault(path, FaultKind::EmptyAnyOf);
                        return;
                    }
                    let mut stray = Vec::new();
                    for item in items {
                        match item {
                            FeatureValue::Atom(s) if allowed.contains(s) => {}
                            FeatureValue::Atom(s) => stray.push(s.clone()),
                            other => {
                                self.wrong_kind(path, "set of atoms", other);
                                return;
                            }
                        }
                    }
                    if !stray.is_empty() {
                        self.fault(path, FaultKind::AnyOfNotSubset { symbols: stray });
                    }
                }
                other => self.wrong_kind(path, "set", other),
            },
            TypeExpr::ClassRef(name) => match self.schema.class(name) {
                Some(class) => {
                    let body = class.body.clone();
                    self.check(value, &body, path)
                }
                None => self.fault(path, FaultKind::Structure { detail: format!("unknown class `{name}`") }),
            },
            TypeExpr::FeatureStructure(decls) => match value {
                FeatureValue::Fs(map) => {
                    for (name, v) in map {
                        path.push(name.clone());
                        match decls.iter().find(|(n, _)| n == name) {
                            Some((_, t)) => self.check(v, t, path),
                            None => {
                                path.pop();
                                self.fault(path, FaultKind::UnknownFeature { feature: name.clone() });
                                continue;
                            }
                        }
                        path.pop();
                    }
                }
                other => self.wrong_kind(path, "feature-structure", other),
            },
            TypeExpr::ListOf(elem) => match value {
                FeatureValue::List(items) => self.check_items(items.iter(), elem, path),
                other => self.wrong_kind(path, "list", other),
            },
            TypeExpr::SetOf(elem) => match value {
                FeatureValue::Set(items) => self.check_items(items.iter(), elem, path),
                other => self.wrong_kind(path, "set", other),
            },
            TypeExpr::TreeOf(elem) => match value {
                FeatureValue::Tree(tree) => {
                    let mut nodes = Vec::new();
                    tree.for_each_node(&mut |n| nodes.push(n));
                    self.check_items(nodes.into_iter(), elem, path);
                }
                other => self.wrong_kind(path, "tree", other),
            },
            TypeExpr::GraphOf(elem) => match value {
                FeatureValue::Graph(graph) => {
                    for (from, to, _) in &graph.edges {
                        for end in [from, to] {
                            if !graph.nodes.contains_key(end) {
                                self.fault(
                                    path,
                                    FaultKind::Structure { detail: format!("edge endpoint `{end}` is not a node") },
                                );
                            }
                        }
                    }
                    for (id, payload) in &graph.nodes {
                        path.push(format!("[{id}]"));
                        self.check(payload, elem, path);
                        path.pop();
                    }
                }
                other => self.wrong_kind(path, "graph", other),
            },
            TypeExpr::Automaton => match value {
                FeatureValue::Automaton(a) => {
                    let mut problems = Vec::new();
                    if !a.states.contains(&a.start) {
                        problems.push(format!("start state `{}` is not a state", a.start));
                    }
                    for f in a.finals.difference(&a.states) {
                        problems.push(format!("final state `{f}` is not a state"));
                    }
                    for (from, sym, to) in &a.transitions {
                        for s in [from, to] {
                            if !a.states.contains(s) {
                                problems.push(format!("transition state `{s}` is not a state"));
                            }
                        }
                        if !a.alphabet.contains(sym) {
                            problems.push(format!("transition symbol `{sym}` is not in the alphabet"));
                        }
                    }
                    for detail in problems {
                        self.fault(path, FaultKind::Structure { detail });
                    }
                }
                other => self.wrong_kind(path, "automaton", other),
            },
        }
    }

    fn check_items<'v>(
        &mut self,
        items: impl Iterator<Item = &'v FeatureValue>,
        elem: &TypeExpr,
        path: &mut Vec<String>,
    ) {
        for (i, item) in items.enumerate() {
            path.push(format!("[{i}]"));
            self.check(item, elem, path);
            path.pop();
        }
    }
}
