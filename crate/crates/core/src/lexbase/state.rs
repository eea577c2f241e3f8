//! The in-memory graph: entries, monolingual acceptions and interlingual
//! acceptions ("axies"). A `DbState` is an immutable snapshot once published.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::dls::Features;
use crate::ids::{AcceptionId, AxieId, EntryId, ObjectId};
use crate::rules::Strength;
use crate::violation::Violation;

/// Ordered sense tree node. Leaves hold acceptions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SenseNode {
    Leaf(AcceptionId),
    Group(Vec<SenseNode>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub id: EntryId,
    pub lemma: String,
    pub features: Features,
    pub senses: Vec<SenseNode>,
    pub validated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Acception {
    pub id: AcceptionId,
    pub entry: EntryId,
    /// Display name such as `épouser_1`.
    pub name: String,
    pub features: Features,
    pub axie: AxieId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubLink {
    pub child: AxieId,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Axie {
    pub id: AxieId,
    /// Mnemonic label such as `#épouser_semarier`, unique per database.
    pub name: String,
    pub gloss: String,
    pub tags: BTreeSet<String>,
    pub subs: Vec<SubLink>,
    pub quasi: BTreeSet<AxieId>,
}

/// A warning or delay kept after its transaction committed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogRecord {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor: Option<String>,
    pub violation: Violation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DbState {
    pub(crate) entries: BTreeMap<EntryId, Entry>,
    pub(crate) acceptions: BTreeMap<AcceptionId, Acception>,
    pub(crate) axies: BTreeMap<AxieId, Axie>,
    pub(crate) next_entry: BTreeMap<String, u64>,
    pub(crate) next_acception: BTreeMap<String, u64>,
    pub(crate) next_axie: u64,
    /// Article -> names of the delay-strength rules it currently fails.
    pub(crate) delayed: BTreeMap<ObjectId, BTreeSet<String>>,
    /// Language pairs `(from, to)` for which missing counterparts are reported.
    pub(crate) coverage: BTreeSet<(String, String)>,
    pub(crate) log: Vec<LogRecord>,
    pub(crate) seq: u64,
}

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

impl SenseNode {
    fn collect_leaves<'a>(nodes: &'a [SenseNode], out: &mut Vec<&'a AcceptionId>) {
        for n in nodes {
            match n {
                SenseNode::Leaf(id) => out.push(id),
                SenseNode::Group(children) => SenseNode::collect_leaves(children, out),
            }
        }
    }

    /// Removes the leaf for `id`, dropping groups left empty. Returns true if found.
    pub(crate) fn remove_leaf(nodes: &mut Vec<SenseNode>, id: &AcceptionId) -> bool {
        let mut found = false;
        nodes.retain_mut(|n| match n {
            SenseNode::Leaf(leaf) if leaf == id => {
                found = true;
                false
            }
            SenseNode::Leaf(_) => true,
            SenseNode::Group(children) => {
                if !found && SenseNode::remove_leaf(children, id) {
                    found = true;
                }
                !children.is_empty()
            }
        });
        found
    }

    /// Inserts a leaf. All but the last path component select groups (an
    /// index equal to the group count opens a new group); the last one is
    /// the insertion position. An empty path appends at the top level.
    pub(crate) fn insert_leaf(nodes: &mut Vec<SenseNode>, path: &[usize], id: AcceptionId) -> Result<(), String> {
        match path {
            [] => {
                nodes.push(SenseNode::Leaf(id));
                Ok(())
            }
            [pos] => {
                if *pos > nodes.len() {
                    return Err(format!("sense position {pos} is past the end ({})", nodes.len()));
                }
                nodes.insert(*pos, SenseNode::Leaf(id));
                Ok(())
            }
            [group, rest @ ..] => {
                if *group == nodes.len() {
                    nodes.push(SenseNode::Group(Vec::new()));
                }
                match nodes.get_mut(*group) {
                    Some(SenseNode::Group(children)) => SenseNode::insert_leaf(children, rest, id),
                    Some(SenseNode::Leaf(_)) => Err(format!("sense path component {group} is an acception, not a group")),
                    None => Err(format!("sense group {group} does not exist")),
                }
            }
        }
    }
}

impl Entry {
    /// Acceptions in sense-tree order.
    pub fn acception_ids(&self) -> Vec<&AcceptionId> {
        let mut out = Vec::new();
        SenseNode::collect_leaves(&self.senses, &mut out);
        out
    }

    pub fn language(&self) -> &str {
        &self.id.lang
    }
}

impl DbState {
    pub fn entry(&self, id: &EntryId) -> Option<&Entry> {
        self.entries.get(id)
    }

    pub fn acception(&self, id: &AcceptionId) -> Option<&Acception> {
        self.acceptions.get(id)
    }

    pub fn axie(&self, id: &AxieId) -> Option<&Axie> {
        self.axies.get(id)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Entry> {
        self.entries.values()
    }

    pub fn acceptions(&self) -> impl Iterator<Item = &Acception> {
        self.acceptions.values()
    }

    pub fn axies(&self) -> impl Iterator<Item = &Axie> {
        self.axies.values()
    }

    pub fn entries_of<'a>(&'a self, lang: &'a str) -> impl Iterator<Item = &'a Entry> + 'a {
        self.entries.values().filter(move |e| e.id.lang == lang)
    }

    pub fn contains(&self, id: &ObjectId) -> bool {
        match id {
            ObjectId::Entry(e) => self.entries.contains_key(e),
            ObjectId::Acception(a) => self.acceptions.contains_key(a),
            ObjectId::Axie(x) => self.axies.contains_key(x),
        }
    }

    /// Acceptions that reference `axie`, in id order.
    pub fn members(&self, axie: AxieId) -> Vec<&Acception> {
        self.acceptions.values().filter(|a| a.axie == axie).collect()
    }

    pub fn member_in(&self, axie: AxieId, lang: &str) -> Option<&Acception> {
        self.acceptions.values().find(|a| a.axie == axie && a.id.lang == lang)
    }

    /// Axies holding a sub-acception link to `axie`.
    pub fn parents(&self, axie: AxieId) -> Vec<AxieId> {
        self.axies
            .values()
            .filter(|p| p.subs.iter().any(|s| s.child == axie))
            .map(|p| p.id)
            .collect()
    }

    pub fn axie_by_name(&self, name: &str) -> Option<&Axie> {
        self.axies.values().find(|x| x.name == name)
    }

    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn coverage(&self) -> &BTreeSet<(String, String)> {
        &self.coverage
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn delay_reasons(&self, id: &ObjectId) -> Option<&BTreeSet<String>> {
        self.delayed.get(id).filter(|s| !s.is_empty())
    }

    /// An entry is delayed when it or any of its acceptions fails a delay rule.
    pub fn is_entry_delayed(&self, entry: &Entry) -> bool {
        self.delay_reasons(&ObjectId::Entry(entry.id.clone())).is_some()
            || entry
                .acception_ids()
                .into_iter()
                .any(|a| self.delay_reasons(&ObjectId::Acception(a.clone())).is_some())
    }

    /// Logged violations at or above `min`, in log order.
    pub fn logged(&self, min: Strength) -> impl Iterator<Item = &LogRecord> {
        self.log.iter().filter(move |r| r.violation.strength >= min)
    }

    pub(crate) fn alloc_entry(&mut self, lang: &str) -> EntryId {
        let n = self.next_entry.entry(lang.to_string()).or_insert(1);
        let id = EntryId { lang: lang.to_string(), n: *n };
        *n += 1;
        id
    }

    pub(crate) fn alloc_acception(&mut self, lang: &str) -> AcceptionId {
        let n = self.next_acception.entry(lang.to_string()).or_insert(1);
        let id = AcceptionId { lang: lang.to_string(), n: *n };
        *n += 1;
        id
    }

    pub(crate) fn alloc_axie(&mut self) -> AxieId {
        self.next_axie = self.next_axie.max(1);
        let id = AxieId(self.next_axie);
        self.next_axie += 1;
        id
    }

    /// `base`, or `base~2`, `base~3`... whichever is not yet an axie name.
    pub(crate) fn unique_axie_name(&self, base: &str) -> String {
        let taken: BTreeSet<&str> = self.axies.values().map(|x| x.name.as_str()).collect();
        if !taken.contains(base) {
            return base.to_string();
        }
        (2..)
            .map(|k| format!("{base}~{k}"))
            .find(|candidate| !taken.contains(candidate.as_str()))
            .expect("unbounded search")
    }

    /// Brings id counters past every id in use.
    pub(crate) fn reset_counters(&mut self) {
        for id in self.entries.keys() {
            let n = self.next_entry.entry(id.lang.clone()).or_insert(1);
            *n = (*n).max(id.n + 1);
        }
        for id in self.acceptions.keys() {
            let n = self.next_acception.entry(id.lang.clone()).or_insert(1);
            *n = (*n).max(id.n + 1);
        }
        if let Some(max) = self.axies.keys().next_back() {
            self.next_axie = self.next_axie.max(max.0 + 1);
        }
    }
}
