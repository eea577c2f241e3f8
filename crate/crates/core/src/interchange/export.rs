//! Canonical export of a store snapshot.

use std::collections::BTreeSet;

use crate::dls::{FeatureValue, Features, Schema, TreeVal, TypeExpr};
use crate::ids::AxieId;
use crate::lexbase::state::{DbState, Entry, SenseNode};

use super::xml::Element;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExportOptions {
    pub include_delayed: bool,
}

fn kind_element(v: &FeatureValue) -> &'static str {
    match v {
        FeatureValue::Atom(_) | FeatureValue::Text(_) => "f",
        FeatureValue::Fs(_) => "fs",
        FeatureValue::List(_) => "list",
        FeatureValue::Set(_) => "set",
        FeatureValue::Tree(_) => "tree",
        FeatureValue::Graph(_) => "graph",
        FeatureValue::Automaton(_) => "automaton",
    }
}

/// Encodes `v` as an element; `name` is set for named features.
pub(crate) fn encode_value(schema: &Schema, v: &FeatureValue, ty: Option<&TypeExpr>, name: Option<&str>) -> Element {
    let ty = ty.map(|t| schema.deref(t));
    let mut el = Element::new(kind_element(v));
    if let Some(n) = name {
        el = el.attr("n", n);
    }
    let elem_ty = ty.and_then(element_type);
    match v {
        FeatureValue::Atom(s) | FeatureValue::Text(s) => el.text(s.clone()),
        FeatureValue::Fs(map) => {
            for c in encode_features(schema, map, ty.and_then(TypeExpr::features)) {
                el.push(c);
            }
            el
        }
        FeatureValue::List(items) => {
            for item in items {
                el.push(encode_item(schema, item, elem_ty));
            }
            el
        }
        FeatureValue::Set(items) => {
            for item in items {
                el.push(encode_item(schema, item, elem_ty));
            }
            el
        }
        FeatureValue::Tree(t) => el.child(encode_tree_node(schema, t, elem_ty)),
        FeatureValue::Graph(g) => {
            for (id, payload) in &g.nodes {
                el.push(Element::new("node").attr("id", id.clone()).child(encode_item(schema, payload, elem_ty)));
            }
            for (from, to, label) in &g.edges {
                el.push(
                    Element::new("edge").attr("from", from.clone()).attr("label", label.clone()).attr("to", to.clone()),
                );
            }
            el
        }
        FeatureValue::Automaton(a) => {
            let alphabet: Vec<&str> = a.alphabet.iter().map(String::as_str).collect();
            el = el.attr("alphabet", alphabet.join(" ")).attr("start", a.start.clone());
            for s in &a.states {
                let mut state = Element::new("state").attr("id", s.clone());
                if a.finals.contains(s) {
                    state = state.attr("final", "true");
                }
                el.push(state);
            }
            for (from, sym, to) in &a.transitions {
                el.push(Element::new("trans").attr("from", from.clone()).attr("sym", sym.clone()).attr("to", to.clone()));
            }
            el
        }
    }
}

fn encode_tree_node(schema: &Schema, t: &TreeVal, payload_ty: Option<&TypeExpr>) -> Element {
    let mut node = Element::new("node").child(encode_item(schema, &t.node, payload_ty));
    for c in &t.children {
        node.push(encode_tree_node(schema, c, payload_ty));
    }
    node
}

/// Element type of a collection type.
pub(crate) fn element_type(ty: &TypeExpr) -> Option<&TypeExpr> {
    match ty {
        TypeExpr::ListOf(t) | TypeExpr::SetOf(t) | TypeExpr::TreeOf(t) | TypeExpr::GraphOf(t) => Some(t),
        TypeExpr::AnyOf(_) => Some(&TypeExpr::Symbol),
        _ => None,
    }
}

fn encode_item(schema: &Schema, v: &FeatureValue, ty: Option<&TypeExpr>) -> Element {
    match v {
        FeatureValue::Atom(s) | FeatureValue::Text(s) => Element::new("item").text(s.clone()),
        compound => Element::new("item").child(encode_value(schema, compound, ty, None)),
    }
}

/// Features in declaration order, then any undeclared ones by name.
pub(crate) fn encode_features(schema: &Schema, map: &Features, decl: Option<&[(String, TypeExpr)]>) -> Vec<Element> {
    let decl = decl.unwrap_or(&[]);
    let mut out = Vec::new();
    let mut done = BTreeSet::new();
    for (name, ty) in decl {
        if let Some(v) = map.get(name) {
            out.push(encode_value(schema, v, Some(ty), Some(name)));
            done.insert(name.as_str());
        }
    }
    for (name, v) in map {
        if !done.contains(name.as_str()) {
            out.push(encode_value(schema, v, None, Some(name)));
        }
    }
    out
}

fn class_features<'a>(schema: &'a Schema, class: &str) -> Option<&'a [(String, TypeExpr)]> {
    schema.class(class).map(|c| schema.deref(&c.body)).and_then(TypeExpr::features)
}

fn encode_senses(schema: &Schema, state: &DbState, class: &str, nodes: &[SenseNode], parent: &mut Element) {
    for node in nodes {
        match node {
            SenseNode::Leaf(id) => {
                let Some(acc) = state.acception(id) else { continue };
                let mut el = Element::new("acception")
                    .attr("axie", acc.axie.to_string())
                    .attr("id", acc.id.to_string())
                    .attr("name", acc.name.clone());
                for f in encode_features(schema, &acc.features, class_features(schema, class)) {
                    el.push(f);
                }
                parent.push(el);
            }
            SenseNode::Group(children) => {
                let mut group = Element::new("sense");
                encode_senses(schema, state, class, children, &mut group);
                parent.push(group);
            }
        }
    }
}

fn exported(state: &DbState, entry: &Entry, opts: ExportOptions) -> bool {
    opts.include_delayed || !state.is_entry_delayed(entry)
}

pub(crate) fn dictionary_element(schema: &Schema, state: &DbState, key: &str, opts: ExportOptions) -> Element {
    let mut el = Element::new("dictionary").attr("language", key);
    let Some(dict) = schema.dictionary(key) else { return el };
    let mut entries: Vec<&Entry> = state.entries_of(&dict.key).filter(|e| exported(state, e, opts)).collect();
    entries.sort_by(|a, b| (&a.lemma, &a.id).cmp(&(&b.lemma, &b.id)));
    for e in entries {
        let mut entry = Element::new("entry")
            .attr("id", e.id.to_string())
            .attr("lemma", e.lemma.clone())
            .attr("validated", e.validated.to_string());
        for f in encode_features(schema, &e.features, class_features(schema, &dict.entry_class)) {
            entry.push(f);
        }
        encode_senses(schema, state, &dict.acception_class, &e.senses, &mut entry);
        el.push(entry);
    }
    el
}

pub(crate) fn axies_element(state: &DbState, opts: ExportOptions) -> Element {
    let mut visible: BTreeSet<AxieId> = BTreeSet::new();
    for e in state.entries().filter(|e| exported(state, e, opts)) {
        for a in e.acception_ids() {
            if let Some(acc) = state.acception(a) {
                visible.insert(acc.axie);
            }
        }
    }
    let parented: BTreeSet<AxieId> = state.axies().flat_map(|x| x.subs.iter().map(|s| s.child)).collect();
    let mut el = Element::new("axies");
    for x in state.axies() {
        let mut axie = Element::new("axie").attr("id", x.id.to_string()).attr("name", x.name.clone());
        let has_members = !state.members(x.id).is_empty();
        if has_members && !visible.contains(&x.id) && !parented.contains(&x.id) {
            axie = axie.attr("provisional", "true");
        }
        if !x.gloss.is_empty() {
            axie.push(Element::new("gloss").text(x.gloss.clone()));
        }
        for t in &x.tags {
            axie.push(Element::new("tag").text(t.clone()));
        }
        for s in &x.subs {
            axie.push(Element::new("sub").attr("label", s.label.clone()).attr("ref", s.child.to_string()));
        }
        for q in &x.quasi {
            axie.push(Element::new("quasi").attr("ref", q.to_string()));
        }
        el.push(axie);
    }
    el
}

fn root(schema: &Schema) -> Element {
    Element::new("mldb").attr("name", schema.database.clone()).attr("schema-hash", schema.hash())
}

/// Single-file bundle: every dictionary in schema order, then the axies.
pub fn export_bundle(state: &DbState, schema: &Schema, opts: ExportOptions) -> String {
    let mut doc = root(schema);
    for d in &schema.dictionaries {
        doc.push(dictionary_element(schema, state, &d.key, opts));
    }
    doc.push(axies_element(state, opts));
    doc.to_document()
}

/// One dictionary, for `<language>.dict.xml`.
pub fn export_dictionary(state: &DbState, schema: &Schema, key: &str, opts: ExportOptions) -> String {
    root(schema).child(dictionary_element(schema, state, key, opts)).to_document()
}

/// The axie dictionary, for `axies.xml`.
pub fn export_axies(state: &DbState, schema: &Schema, opts: ExportOptions) -> String {
    root(schema).child(axies_element(state, opts)).to_document()
}
