//! Geometric consistency checks over entries, acceptions and axies.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::ids::{AxieId, ObjectId};
use crate::rules::Strength;
use crate::violation::{sort_violations, Code, Violation};

use super::query::counterparts;
use super::state::DbState;

/// WF1, WF2, WF3, cycles in the contrastive relation, and dangling links.
pub fn structural_violations(state: &DbState) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut by_axie: BTreeMap<AxieId, BTreeMap<&str, Vec<&crate::ids::AcceptionId>>> = BTreeMap::new();
    for acc in state.acceptions() {
        if state.axie(&acc.axie).is_none() {
            out.push(Violation::new(
                Code::Wf3,
                Strength::Critical,
                vec![acc.id.clone().into()],
                format!("acception {} ({}) refers to missing {}", acc.id, acc.name, acc.axie),
            ));
            continue;
        }
        by_axie.entry(acc.axie).or_default().entry(&acc.id.lang).or_default().push(&acc.id);
    }

    let has_parent: BTreeSet<AxieId> = state.axies().flat_map(|x| x.subs.iter().map(|s| s.child)).collect();

    for axie in state.axies() {
        let members = by_axie.get(&axie.id);
        if members.is_none() && !has_parent.contains(&axie.id) {
            out.push(Violation::new(
                Code::Wf1,
                Strength::Critical,
                vec![axie.id.into()],
                format!("{} ({}) has no monolingual acception", axie.id, axie.name),
            ));
        }
        for (lang, accs) in members.into_iter().flatten() {
            if accs.len() > 1 {
                let mut subjects: Vec<ObjectId> = vec![axie.id.into()];
                subjects.extend(accs.iter().map(|a| ObjectId::Acception((*a).clone())));
                out.push(Violation::new(
                    Code::Wf2,
                    Strength::Critical,
                    subjects,
                    format!("{} ({}) holds {} acceptions of language {lang}", axie.id, axie.name, accs.len()),
                ));
            }
        }
        let dangling: Vec<AxieId> = axie
            .subs
            .iter()
            .map(|s| s.child)
            .chain(axie.quasi.iter().copied())
            .filter(|x| state.axie(x).is_none())
            .collect();
        if !dangling.is_empty() {
            let names: Vec<String> = dangling.iter().map(ToString::to_string).collect();
            out.push(Violation::new(
                Code::DanglingLink,
                Strength::Critical,
                vec![axie.id.into()],
                format!("{} links to missing {}", axie.id, names.join(", ")),
            ));
        }
    }

    out.extend(cycle_violations(state));
    sort_violations(&mut out);
    out
}

/// One violation per strongly connected component of the sub-acception
/// graph that contains a cycle.
pub fn cycle_violations(state: &DbState) -> Vec<Violation> {
    let mut graph = DiGraph::<AxieId, ()>::new();
    let index: BTreeMap<AxieId, _> = state.axies().map(|x| (x.id, graph.add_node(x.id))).collect();
    let mut self_loops = BTreeSet::new();
    for axie in state.axies() {
        for sub in &axie.subs {
            if let Some(&to) = index.get(&sub.child) {
                graph.add_edge(index[&axie.id], to, ());
                if sub.child == axie.id {
                    self_loops.insert(axie.id);
                }
            }
        }
    }
    let mut out = Vec::new();
    for component in tarjan_scc(&graph) {
        let mut ids: Vec<AxieId> = component.iter().map(|n| graph[*n]).collect();
        if ids.len() < 2 && !ids.iter().any(|x| self_loops.contains(x)) {
            continue;
        }
        ids.sort();
        let names: Vec<String> = ids.iter().map(ToString::to_string).collect();
        out.push(Violation::new(
            Code::CyclicContrastive,
            Strength::Critical,
            ids.into_iter().map(ObjectId::Axie).collect(),
            format!("sub-acception links form a cycle through {}", names.join(", ")),
        ));
    }
    out
}

/// Missing counterparts for every language pair with coverage tracking on.
pub fn coverage_violations(state: &DbState) -> Vec<Violation> {
    let mut out = Vec::new();
    for (from, to) in state.coverage() {
        for axie in state.axies() {
            if state.member_in(axie.id, from).is_none() {
                continue;
            }
            if counterparts(state, axie.id, to).is_empty() {
                out.push(t2_violation(axie.id, &axie.name, from, to));
            }
        }
    }
    out
}

pub(crate) fn t2_violation(axie: AxieId, name: &str, from: &str, to: &str) -> Violation {
    Violation::new(
        Code::T2,
        Strength::Warning,
        vec![axie.into()],
        format!("{axie} ({name}) reachable from {from} has no counterpart in {to}"),
    )
}

/// Full scan. Sorted by code, then subject ids.
pub fn check_wellformed(state: &DbState) -> Vec<Violation> {
    let mut out = structural_violations(state);
    out.extend(coverage_violations(state));
    sort_violations(&mut out);
    out
}
