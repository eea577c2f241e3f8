//! Parsing of interchange documents back into a store state.

use std::collections::{BTreeMap, BTreeSet};

use roxmltree::Node;

use crate::dls::{AutomatonVal, FeatureValue, Features, GraphVal, Schema, TreeVal, TypeExpr};
use crate::ids::{AcceptionId, AxieId, EntryId};
use crate::lexbase::state::{Acception, Axie, DbState, Entry, SenseNode, SubLink};

use super::export::element_type;
use super::InterchangeError;

/// Whether the document's declared schema hash must match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum HashCheck {
    Strict,
    Ignore,
}

fn path_of(node: Node<'_, '_>) -> String {
    let mut parts = Vec::new();
    let mut cur = Some(node);
    while let Some(n) = cur {
        if n.is_element() {
            let name = n.tag_name().name();
            let key = ["id", "n", "language", "ref"].into_iter().find_map(|k| n.attribute(k).map(|v| (k, v)));
            parts.push(match key {
                Some((k, v)) => format!("{name}[@{k}=\"{v}\"]"),
                None => name.to_string(),
            });
        }
        cur = n.parent();
    }
    parts.reverse();
    format!("/{}", parts.join("/"))
}

fn fail<T>(node: Node<'_, '_>, detail: impl Into<String>) -> Result<T, InterchangeError> {
    Err(InterchangeError::Format { path: path_of(node), detail: detail.into() })
}

fn attr<'a>(node: Node<'a, '_>, name: &str) -> Result<&'a str, InterchangeError> {
    match node.attribute(name) {
        Some(v) => Ok(v),
        None => fail(node, format!("missing attribute `{name}`")),
    }
}

fn parse_id<T: std::str::FromStr>(node: Node<'_, '_>, name: &str) -> Result<T, InterchangeError> {
    let raw = attr(node, name)?;
    match raw.parse() {
        Ok(v) => Ok(v),
        Err(_) => fail(node, format!("malformed id `{raw}` in `{name}`")),
    }
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(Node::is_element)
}

fn text_of(node: Node<'_, '_>) -> String {
    node.children().filter(Node::is_text).filter_map(|t| t.text()).collect()
}

fn is_feature_element(name: &str) -> bool {
    matches!(name, "f" | "fs" | "list" | "set" | "tree" | "graph" | "automaton")
}

struct Reader<'s> {
    schema: &'s Schema,
}

impl Reader<'_> {
    fn scalar(&self, text: String, ty: Option<&TypeExpr>) -> FeatureValue {
        match ty.map(|t| self.schema.deref(t)) {
            Some(TypeExpr::String) => FeatureValue::Text(text),
            _ => FeatureValue::Atom(text),
        }
    }

    /// Reads the named feature children of `node` against `decl`.
    fn features(&self, node: Node<'_, '_>, decl: Option<&[(String, TypeExpr)]>) -> Result<Features, InterchangeError> {
        let mut out = Features::new();
        for child in elements(node).filter(|c| is_feature_element(c.tag_name().name())) {
            let name = attr(child, "n")?;
            let Some((_, ty)) = decl.unwrap_or(&[]).iter().find(|(n, _)| n == name) else {
                return fail(child, format!("unknown feature `{name}`"));
            };
            if out.contains_key(name) {
                return fail(child, format!("feature `{name}` given twice"));
            }
            out.insert(name.to_string(), self.value(child, Some(ty))?);
        }
        Ok(out)
    }

    fn value(&self, node: Node<'_, '_>, ty: Option<&TypeExpr>) -> Result<FeatureValue, InterchangeError> {
        let ty = ty.map(|t| self.schema.deref(t));
        let elem_ty = ty.and_then(element_type);
        match node.tag_name().name() {
            "f" => {
                if elements(node).next().is_some() {
                    return fail(node, "scalar feature with element content");
                }
                Ok(self.scalar(text_of(node), ty))
            }
            "fs" => Ok(FeatureValue::Fs(self.features(node, ty.and_then(TypeExpr::features))?)),
            "list" => Ok(FeatureValue::List(
                elements(node).map(|i| self.item(i, elem_ty)).collect::<Result<Vec<_>, _>>()?,
            )),
            "set" => Ok(FeatureValue::Set(
                elements(node).map(|i| self.item(i, elem_ty)).collect::<Result<BTreeSet<_>, _>>()?,
            )),
            "tree" => {
                let mut nodes = elements(node);
                match (nodes.next(), nodes.next()) {
                    (Some(root), None) => Ok(FeatureValue::Tree(self.tree_node(root, elem_ty)?)),
                    _ => fail(node, "a tree holds exactly one root node"),
                }
            }
            "graph" => {
                let mut g = GraphVal::default();
                for child in elements(node) {
                    match child.tag_name().name() {
                        "node" => {
                            let id = attr(child, "id")?.to_string();
                            let mut payload = elements(child);
                            let value = match (payload.next(), payload.next()) {
                                (Some(item), None) => self.item(item, elem_ty)?,
                                _ => return fail(child, "a graph node holds exactly one item"),
                            };
                            if g.nodes.insert(id, value).is_some() {
                                return fail(child, "duplicate graph node");
                            }
                        }
                        "edge" => {
                            g.edges.insert((
                                attr(child, "from")?.into(),
                                attr(child, "to")?.into(),
                                child.attribute("label").unwrap_or("").into(),
                            ));
                        }
                        other => return fail(child, format!("unexpected `{other}` in graph")),
                    }
                }
                Ok(FeatureValue::Graph(g))
            }
            "automaton" => {
                let mut a = AutomatonVal {
                    start: attr(node, "start")?.to_string(),
                    alphabet: attr(node, "alphabet")?.split_whitespace().map(String::from).collect(),
                    ..AutomatonVal::default()
                };
                for child in elements(node) {
                    match child.tag_name().name() {
                        "state" => {
                            let id = attr(child, "id")?.to_string();
                            if child.attribute("final") == Some("true") {
                                a.finals.insert(id.clone());
                            }
                            a.states.insert(id);
                        }
                        "trans" => {
                            a.transitions.insert((
                                attr(child, "from")?.into(),
                                attr(child, "sym")?.into(),
                                attr(child, "to")?.into(),
                            ));
                        }
                        other => return fail(child, format!("unexpected `{other}` in automaton")),
                    }
                }
                Ok(FeatureValue::Automaton(a))
            }
            other => fail(node, format!("unexpected element `{other}`")),
        }
    }

    fn item(&self, node: Node<'_, '_>, ty: Option<&TypeExpr>) -> Result<FeatureValue, InterchangeError> {
        if node.tag_name().name() != "item" {
            return fail(node, "expected <item>");
        }
        let mut inner = elements(node);
        match (inner.next(), inner.next()) {
            (None, _) => Ok(self.scalar(text_of(node), ty)),
            (Some(v), None) if v.attribute("n").is_none() => self.value(v, ty),
            _ => fail(node, "an item holds text or one unnamed value"),
        }
    }

    fn tree_node(&self, node: Node<'_, '_>, ty: Option<&TypeExpr>) -> Result<TreeVal, InterchangeError> {
        if node.tag_name().name() != "node" {
            return fail(node, "expected <node>");
        }
        let mut kids = elements(node);
        let Some(payload) = kids.next() else { return fail(node, "tree node without payload") };
        let value = self.item(payload, ty)?;
        let children = kids.map(|k| self.tree_node(k, ty)).collect::<Result<Vec<_>, _>>()?;
        Ok(TreeVal { node: Box::new(value), children })
    }
}

fn class_features<'a>(schema: &'a Schema, class: &str) -> Option<&'a [(String, TypeExpr)]> {
    schema.class(class).map(|c| schema.deref(&c.body)).and_then(TypeExpr::features)
}

struct Loader<'s> {
    reader: Reader<'s>,
    state: DbState,
    provisional: BTreeSet<AxieId>,
}

impl Loader<'_> {
    fn senses(
        &mut self,
        node: Node<'_, '_>,
        entry: &EntryId,
        class: &str,
    ) -> Result<Vec<SenseNode>, InterchangeError> {
        let mut out = Vec::new();
        for child in elements(node) {
            match child.tag_name().name() {
                "acception" => {
                    let id: AcceptionId = parse_id(child, "id")?;
                    if id.lang != entry.lang {
                        return fail(child, format!("acception {id} inside a {} entry", entry.lang));
                    }
                    if self.state.acceptions.contains_key(&id) {
                        return fail(child, format!("duplicate acception {id}"));
                    }
                    let axie: AxieId = parse_id(child, "axie")?;
                    let features = self.reader.features(child, class_features(self.reader.schema, class))?;
                    let name = child.attribute("name").unwrap_or_default().to_string();
                    self.state.acceptions.insert(
                        id.clone(),
                        Acception { id: id.clone(), entry: entry.clone(), name, features, axie },
                    );
                    out.push(SenseNode::Leaf(id));
                }
                "sense" => out.push(SenseNode::Group(self.senses(child, entry, class)?)),
                name if is_feature_element(name) => {}
                other => return fail(child, format!("unexpected `{other}` in entry")),
            }
        }
        Ok(out)
    }

    fn dictionary(&mut self, node: Node<'_, '_>) -> Result<(), InterchangeError> {
        let language = attr(node, "language")?;
        let Some(dict) = self.reader.schema.dictionary(language) else {
            return fail(node, format!("dictionary `{language}` is not declared in the schema"));
        };
        let (key, entry_class, acc_class) = (dict.key.clone(), dict.entry_class.clone(), dict.acception_class.clone());
        for e in elements(node) {
            if e.tag_name().name() != "entry" {
                return fail(e, "expected <entry>");
            }
            let id: EntryId = parse_id(e, "id")?;
            if id.lang != key {
                return fail(e, format!("entry {id} inside dictionary {key}"));
            }
            if self.state.entries.contains_key(&id) {
                return fail(e, format!("duplicate entry {id}"));
            }
            let lemma = attr(e, "lemma")?.to_string();
            let validated = match e.attribute("validated").unwrap_or("false") {
                "true" => true,
                "false" => false,
                other => return fail(e, format!("validated must be true or false, not `{other}`")),
            };
            let features = self.reader.features(e, class_features(self.reader.schema, &entry_class))?;
            let senses = self.senses(e, &id, &acc_class)?;
            self.state.entries.insert(id.clone(), Entry { id, lemma, features, senses, validated });
        }
        Ok(())
    }

    fn axies(&mut self, node: Node<'_, '_>) -> Result<(), InterchangeError> {
        let mut names = BTreeMap::new();
        for x in elements(node) {
            if x.tag_name().name() != "axie" {
                return fail(x, "expected <axie>");
            }
            let id: AxieId = parse_id(x, "id")?;
            if self.state.axies.contains_key(&id) {
                return fail(x, format!("duplicate {id}"));
            }
            let name = attr(x, "name")?.to_string();
            if let Some(other) = names.insert(name.clone(), id) {
                return fail(x, format!("name {name} already used by {other}"));
            }
            if x.attribute("provisional") == Some("true") {
                self.provisional.insert(id);
            }
            let mut axie =
                Axie { id, name, gloss: String::new(), tags: BTreeSet::new(), subs: Vec::new(), quasi: BTreeSet::new() };
            for c in elements(x) {
                match c.tag_name().name() {
                    "gloss" => axie.gloss = text_of(c),
                    "tag" => {
                        axie.tags.insert(text_of(c));
                    }
                    "sub" => axie.subs.push(SubLink { child: parse_id(c, "ref")?, label: attr(c, "label")?.into() }),
                    "quasi" => {
                        axie.quasi.insert(parse_id(c, "ref")?);
                    }
                    other => return fail(c, format!("unexpected `{other}` in axie")),
                }
            }
            self.state.axies.insert(id, axie);
        }
        Ok(())
    }
}

/// Parses one or more documents (a bundle, or per-dictionary files plus
/// `axies.xml`) into a single state, without any consistency checks.
pub(crate) fn read_documents(schema: &Schema, docs: &[&str], hash: HashCheck) -> Result<DbState, InterchangeError> {
    let mut loader = Loader { reader: Reader { schema }, state: DbState::default(), provisional: BTreeSet::new() };
    for text in docs {
        let doc = roxmltree::Document::parse(text).map_err(|e| InterchangeError::Format {
            path: "/".into(),
            detail: format!("not well-formed XML: {e}"),
        })?;
        let root = doc.root_element();
        if root.tag_name().name() != "mldb" {
            return fail(root, "root element must be <mldb>");
        }
        let name = attr(root, "name")?;
        if name != schema.database {
            return Err(InterchangeError::SchemaMismatch { expected: schema.database.clone(), found: name.to_string() });
        }
        let found = attr(root, "schema-hash")?;
        if hash == HashCheck::Strict && found != schema.hash() {
            return Err(InterchangeError::SchemaMismatch { expected: schema.hash(), found: found.to_string() });
        }
        for section in elements(root) {
            match section.tag_name().name() {
                "dictionary" => loader.dictionary(section)?,
                "axies" => loader.axies(section)?,
                other => return fail(section, format!("unexpected `{other}`")),
            }
        }
    }
    // Provisional axies whose acceptions were left out of the export have
    // nothing left to hold on to.
    let used: BTreeSet<AxieId> = loader.state.acceptions.values().map(|a| a.axie).collect();
    let parented: BTreeSet<AxieId> = loader.state.axies.values().flat_map(|x| x.subs.iter().map(|s| s.child)).collect();
    for id in &loader.provisional {
        if !used.contains(id) && !parented.contains(id) {
            loader.state.axies.remove(id);
            for x in loader.state.axies.values_mut() {
                x.quasi.remove(id);
            }
        }
    }
    loader.state.reset_counters();
    Ok(loader.state)
}
