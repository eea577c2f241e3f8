//! Evaluation of rule bodies and commit-time rule runs.

use std::collections::{BTreeMap, BTreeSet};

use crate::dls::value::get_path;
use crate::dls::{FeatureValue, Features, Schema};
use crate::ids::{AxieId, EntryId, ObjectId};
use crate::lexbase::state::{Acception, Axie, DbState, Entry};
use crate::violation::{Code, Violation};

use super::ast::{RuleExpr, RuleKind, SysField};
use super::compile::{ArticleKind, CompiledRule, Target};

/// What a rule body can see of one article.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ArticleView {
    pub id: Option<ObjectId>,
    pub language: Option<String>,
    pub lemma: Option<String>,
    pub entry: Option<EntryId>,
    pub axie: Option<AxieId>,
    pub features: Features,
}

pub type Bindings = BTreeMap<String, ArticleView>;

impl ArticleView {
    /// An article that is not (yet) in a store.
    pub fn bare(features: Features) -> ArticleView {
        ArticleView { features, ..ArticleView::default() }
    }

    pub fn of_entry(entry: &Entry) -> ArticleView {
        ArticleView {
            id: Some(entry.id.clone().into()),
            language: Some(entry.id.lang.clone()),
            lemma: Some(entry.lemma.clone()),
            entry: Some(entry.id.clone()),
            axie: None,
            features: entry.features.clone(),
        }
    }

    pub fn of_acception(state: &DbState, acc: &Acception) -> ArticleView {
        ArticleView {
            id: Some(acc.id.clone().into()),
            language: Some(acc.id.lang.clone()),
            lemma: state.entry(&acc.entry).map(|e| e.lemma.clone()),
            entry: Some(acc.entry.clone()),
            axie: Some(acc.axie),
            features: acc.features.clone(),
        }
    }

    /// Axies appear to rules as `(name string) (gloss string) (tags (set-of symbol))`.
    pub fn of_axie(axie: &Axie) -> ArticleView {
        let mut features = Features::new();
        features.insert("name".into(), FeatureValue::Text(axie.name.clone()));
        if !axie.gloss.is_empty() {
            features.insert("gloss".into(), FeatureValue::Text(axie.gloss.clone()));
        }
        if !axie.tags.is_empty() {
            features.insert("tags".into(), FeatureValue::atoms(axie.tags.iter().map(String::as_str)));
        }
        ArticleView { id: Some(axie.id.into()), axie: Some(axie.id), features, ..ArticleView::default() }
    }

    pub fn of_id(state: &DbState, id: &ObjectId) -> Option<ArticleView> {
        Some(match id {
            ObjectId::Entry(e) => ArticleView::of_entry(state.entry(e)?),
            ObjectId::Acception(a) => ArticleView::of_acception(state, state.acception(a)?),
            ObjectId::Axie(x) => ArticleView::of_axie(state.axie(x)?),
        })
    }
}

fn truth(b: bool) -> Option<FeatureValue> {
    b.then(|| FeatureValue::atom("t"))
}

fn sys_value(view: &ArticleView, field: SysField) -> Option<FeatureValue> {
    match field {
        SysField::Id => view.id.as_ref().map(|id| FeatureValue::Text(id.to_string())),
        SysField::Entry => view.entry.as_ref().map(|id| FeatureValue::Text(id.to_string())),
        SysField::Axie => view.axie.map(|id| FeatureValue::Text(id.to_string())),
        SysField::Lemma => view.lemma.clone().map(FeatureValue::Text),
        SysField::Language => view.language.clone().map(FeatureValue::Text),
        SysField::Features => Some(FeatureValue::Fs(view.features.clone())),
    }
}

/// Value of an expression; `None` plays the role of nil.
fn value(e: &RuleExpr, b: &Bindings) -> Option<FeatureValue> {
    match e {
        RuleExpr::Sym(s) => Some(FeatureValue::Atom(s.clone())),
        RuleExpr::Str(s) => Some(FeatureValue::Text(s.clone())),
        RuleExpr::Access(a) => {
            let view = b.get(&a.var)?;
            match a.sys {
                Some(field) => sys_value(view, field),
                None => get_path(&view.features, &a.path).cloned(),
            }
        }
        other => truth(eval_expr(other, b)),
    }
}

/// Strict boolean evaluation. Unbound variables read as absent.
pub fn eval_expr(e: &RuleExpr, b: &Bindings) -> bool {
    match e {
        RuleExpr::True => true,
        RuleExpr::False => false,
        RuleExpr::And(xs) => xs.iter().all(|x| eval_expr(x, b)),
        RuleExpr::Or(xs) => xs.iter().any(|x| eval_expr(x, b)),
        RuleExpr::Not(x) => !eval_expr(x, b),
        RuleExpr::Cond(branches) => branches
            .iter()
            .find(|(test, _)| eval_expr(test, b))
            .is_some_and(|(_, body)| eval_expr(body, b)),
        RuleExpr::Equal(x, y) => value(x, b) == value(y, b),
        RuleExpr::IsOneOf(x, symbols) => {
            matches!(value(x, b), Some(FeatureValue::Atom(s)) if symbols.contains(&s))
        }
        RuleExpr::EmptyP(x) => value(x, b).is_none(),
        RuleExpr::Access(_) | RuleExpr::Sym(_) | RuleExpr::Str(_) => value(e, b).is_some(),
    }
}

/// Dictionary key of an article, if it has one.
fn language_of(id: &ObjectId) -> Option<&str> {
    match id {
        ObjectId::Entry(e) => Some(&e.lang),
        ObjectId::Acception(a) => Some(&a.lang),
        ObjectId::Axie(_) => None,
    }
}

/// True when the article `id` may be bound to `target`.
pub fn matches_target(schema: &Schema, target: &Target, id: &ObjectId) -> bool {
    let kind = match id {
        ObjectId::Entry(_) => ArticleKind::Entry,
        ObjectId::Acception(_) => ArticleKind::Acception,
        ObjectId::Axie(_) => ArticleKind::Axie,
    };
    if kind != target.kind {
        return false;
    }
    let Some(lang) = language_of(id) else { return true };
    if target.dictionary.as_deref().is_some_and(|d| d != lang) {
        return false;
    }
    let Some(dict) = schema.dictionary(lang) else { return false };
    let class = if kind == ArticleKind::Entry { &dict.entry_class } else { &dict.acception_class };
    schema.is_a(class, &target.class)
}

fn candidates(state: &DbState, schema: &Schema, target: &Target) -> Vec<ObjectId> {
    let ids: Vec<ObjectId> = match target.kind {
        ArticleKind::Entry => state.entries().map(|e| e.id.clone().into()).collect(),
        ArticleKind::Acception => state.acceptions().map(|a| a.id.clone().into()).collect(),
        ArticleKind::Axie => state.axies().map(|x| x.id.into()).collect(),
    };
    ids.into_iter().filter(|id| matches_target(schema, target, id)).collect()
}

/// Every tuple of distinct articles with at least one member of `changed`
/// at some position, in lexicographic id order.
fn tuples(
    rule: &CompiledRule,
    pools: &[Vec<ObjectId>],
    changed: &BTreeSet<ObjectId>,
) -> BTreeSet<Vec<ObjectId>> {
    let mut out = BTreeSet::new();
    for (i, pool) in pools.iter().enumerate() {
        for pinned in pool.iter().filter(|id| changed.contains(*id)) {
            let mut partial = vec![Vec::new()];
            for (j, other) in pools.iter().enumerate() {
                let choices: Vec<&ObjectId> = if i == j { vec![pinned] } else { other.iter().collect() };
                partial = partial
                    .into_iter()
                    .flat_map(|prefix: Vec<ObjectId>| {
                        choices
                            .iter()
                            .filter(|c| !prefix.contains(c))
                            .filter(|c| rule.decl.kind != RuleKind::Local || same_dictionary(&prefix, c))
                            .map(|c| {
                                let mut next = prefix.clone();
                                next.push((*c).clone());
                                next
                            })
                            .collect::<Vec<_>>()
                    })
                    .collect();
            }
            out.extend(partial);
        }
    }
    out
}

fn same_dictionary(prefix: &[ObjectId], next: &ObjectId) -> bool {
    prefix.first().is_none_or(|first| language_of(first) == language_of(next))
}

/// Evaluates `rules` on the tuples touching `changed`. Each failed
/// evaluation yields one violation carrying the rule's name and strength.
pub fn run_rules(
    state: &DbState,
    schema: &Schema,
    rules: &[CompiledRule],
    changed: &BTreeSet<ObjectId>,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for rule in rules {
        let pools: Vec<Vec<ObjectId>> = rule.targets.iter().map(|t| candidates(state, schema, t)).collect();
        for tuple in tuples(rule, &pools, changed) {
            let bindings: Bindings = rule
                .targets
                .iter()
                .zip(&tuple)
                .filter_map(|(t, id)| Some((t.var.clone(), ArticleView::of_id(state, id)?)))
                .collect();
            if eval_expr(&rule.decl.body, &bindings) {
                continue;
            }
            let names: Vec<String> = tuple.iter().map(ToString::to_string).collect();
            let mut subjects = tuple.clone();
            subjects.sort();
            subjects.dedup();
            out.push(Violation::new(
                Code::Rule(rule.decl.name.clone()),
                rule.decl.strength,
                subjects,
                format!("{} fails on {}", rule.decl.name, names.join(", ")),
            ));
        }
    }
    out
}

/// Runs every rule over the whole store.
pub fn run_all_rules(state: &DbState, schema: &Schema, rules: &[CompiledRule]) -> Vec<Violation> {
    let mut all: BTreeSet<ObjectId> = state.entries().map(|e| e.id.clone().into()).collect();
    all.extend(state.acceptions().map(|a| ObjectId::from(a.id.clone())));
    all.extend(state.axies().map(|x| ObjectId::from(x.id)));
    run_rules(state, schema, rules, &all)
}
