//! Mutations and their tentative application to a working copy.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dls::value::prune_features;
use crate::dls::{validate_features, Features, Schema};
use crate::ids::{AcceptionId, AxieId, EntryId, ObjectId};
use crate::rules::Strength;
use crate::violation::{Code, Violation};

use super::state::{nfc, Acception, Axie, DbState, Entry, SenseNode, SubLink};
use super::StoreError;

/// An object reference: an existing id, or `{"new": k}` for the object
/// created by mutation `k` of the same transaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref {
    New { new: usize },
    Id(String),
}

impl From<&EntryId> for Ref {
    fn from(id: &EntryId) -> Ref {
        Ref::Id(id.to_string())
    }
}

impl From<&AcceptionId> for Ref {
    fn from(id: &AcceptionId) -> Ref {
        Ref::Id(id.to_string())
    }
}

impl From<AxieId> for Ref {
    fn from(id: AxieId) -> Ref {
        Ref::Id(id.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Mutation {
    CreateEntry {
        language: String,
        lemma: String,
        #[serde(default)]
        features: Features,
    },
    UpdateEntry {
        entry: Ref,
        #[serde(default)]
        lemma: Option<String>,
        #[serde(default)]
        features: Option<Features>,
    },
    /// Deletes the entry and all of its acceptions.
    DeleteEntry { entry: Ref },
    /// Adds an acception at `sense_path` and links it to a fresh axie.
    AddAcception {
        entry: Ref,
        #[serde(default, rename = "sensePath")]
        sense_path: Vec<usize>,
        #[serde(default)]
        features: Features,
        #[serde(default)]
        name: Option<String>,
    },
    UpdateAcception {
        acception: Ref,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        features: Option<Features>,
    },
    DeleteAcception { acception: Ref },
    /// Merges the axies of two acceptions.
    LinkTranslation { a: Ref, b: Ref },
    /// Moves an acception onto an existing axie.
    AssignAxie { acception: Ref, axie: Ref },
    MakeSubAcception {
        parent: Ref,
        label: String,
        #[serde(default)]
        gloss: String,
        #[serde(default)]
        tags: BTreeSet<String>,
        #[serde(default)]
        name: Option<String>,
    },
    LinkSubAcception { parent: Ref, child: Ref, label: String },
    UnlinkSubAcception { parent: Ref, child: Ref },
    AddQuasiSynonym { a: Ref, b: Ref },
    RemoveQuasiSynonym { a: Ref, b: Ref },
    UpdateAxie {
        axie: Ref,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        gloss: Option<String>,
        #[serde(default)]
        tags: Option<BTreeSet<String>>,
    },
    /// Marks an entry as checked by the lexicographer; clears its warnings.
    ValidateEntry { entry: Ref },
    /// Turns missing-counterpart reporting on or off for a language pair.
    SetCoverage { from: String, to: String, enabled: bool },
}

/// Working copy plus bookkeeping for one transaction.
pub(crate) struct Work<'a> {
    pub schema: &'a Schema,
    pub state: DbState,
    pub results: Vec<Option<ObjectId>>,
    /// Articles created or modified; rules and validation run on these.
    pub changed: BTreeSet<ObjectId>,
    /// Acceptions moved to another axie by a merge or assignment.
    pub moved: BTreeSet<AcceptionId>,
    pub retired: Vec<AxieId>,
    pub collected: Vec<AxieId>,
    pub immediate: Vec<Violation>,
}

impl<'a> Work<'a> {
    pub fn new(schema: &'a Schema, state: DbState) -> Work<'a> {
        Work {
            schema,
            state,
            results: Vec::new(),
            changed: BTreeSet::new(),
            moved: BTreeSet::new(),
            retired: Vec::new(),
            collected: Vec::new(),
            immediate: Vec::new(),
        }
    }

    fn resolve(&self, r: &Ref) -> Result<ObjectId, StoreError> {
        match r {
            Ref::New { new } => match self.results.get(*new) {
                Some(Some(id)) => Ok(id.clone()),
                _ => Err(StoreError::InvalidMutation(format!(
                    "reference to mutation {new}, which created nothing"
                ))),
            },
            Ref::Id(s) => s.parse().map_err(|_| StoreError::UnknownId(s.clone())),
        }
    }

    fn entry_ref(&self, r: &Ref) -> Result<EntryId, StoreError> {
        match self.resolve(r)? {
            ObjectId::Entry(id) if self.state.entries.contains_key(&id) => Ok(id),
            other => Err(StoreError::UnknownId(other.to_string())),
        }
    }

    fn acception_ref(&self, r: &Ref) -> Result<AcceptionId, StoreError> {
        match self.resolve(r)? {
            ObjectId::Acception(id) if self.state.acceptions.contains_key(&id) => Ok(id),
            other => Err(StoreError::UnknownId(other.to_string())),
        }
    }

    fn axie_ref(&self, r: &Ref) -> Result<AxieId, StoreError> {
        match self.resolve(r)? {
            ObjectId::Axie(id) if self.state.axies.contains_key(&id) => Ok(id),
            other => Err(StoreError::UnknownId(other.to_string())),
        }
    }

    fn touch_entry(&mut self, id: &EntryId) {
        if let Some(e) = self.state.entries.get_mut(id) {
            e.validated = false;
        }
        self.changed.insert(id.clone().into());
    }

    fn check_lemma(&mut self, id: &EntryId, lemma: &str) {
        if lemma.trim().is_empty() {
            self.immediate.push(Violation::new(
                Code::EmptyLemma,
                Strength::Critical,
                vec![id.clone().into()],
                "lemma is empty",
            ));
        }
    }

    pub fn apply(&mut self, m: &Mutation) -> Result<(), StoreError> {
        let result = self.apply_one(m)?;
        self.results.push(result);
        Ok(())
    }

    fn apply_one(&mut self, m: &Mutation) -> Result<Option<ObjectId>, StoreError> {
        match m {
            Mutation::CreateEntry { language, lemma, features } => {
                let key = self
                    .schema
                    .dictionary(language)
                    .ok_or_else(|| StoreError::UnknownLanguage(language.clone()))?
                    .key
                    .clone();
                let id = self.state.alloc_entry(&key);
                let lemma = nfc(lemma);
                self.check_lemma(&id, &lemma);
                let mut features = features.clone();
                prune_features(&mut features);
                self.state.entries.insert(
                    id.clone(),
                    Entry { id: id.clone(), lemma, features, senses: Vec::new(), validated: false },
                );
                self.touch_entry(&id);
                Ok(Some(id.into()))
            }
            Mutation::UpdateEntry { entry, lemma, features } => {
                let id = self.entry_ref(entry)?;
                if let Some(lemma) = lemma {
                    let lemma = nfc(lemma);
                    self.check_lemma(&id, &lemma);
                    self.state.entries.get_mut(&id).expect("checked").lemma = lemma;
                }
                if let Some(features) = features {
                    let mut features = features.clone();
                    prune_features(&mut features);
                    self.state.entries.get_mut(&id).expect("checked").features = features;
                }
                self.touch_entry(&id);
                Ok(Some(id.into()))
            }
            Mutation::DeleteEntry { entry } => {
                let id = self.entry_ref(entry)?;
                let removed = self.state.entries.remove(&id).expect("checked");
                for acc in removed.acception_ids() {
                    self.state.acceptions.remove(acc);
                    self.changed.remove(&ObjectId::Acception(acc.clone()));
                }
                self.changed.remove(&ObjectId::Entry(id));
                Ok(None)
            }
            Mutation::AddAcception { entry, sense_path, features, name } => {
                let entry_id = self.entry_ref(entry)?;
                let lang = entry_id.lang.clone();
                let acc_id = self.state.alloc_acception(&lang);
                let display = match name {
                    Some(n) if !n.trim().is_empty() => nfc(n),
                    _ => self.default_acception_name(&entry_id),
                };
                let axie_id = self.state.alloc_axie();
                let axie_name = self.state.unique_axie_name(&format!("#{display}"));
                let entry = self.state.entries.get_mut(&entry_id).expect("checked");
                SenseNode::insert_leaf(&mut entry.senses, sense_path, acc_id.clone())
                    .map_err(StoreError::InvalidMutation)?;
                let mut features = features.clone();
                prune_features(&mut features);
                self.state.axies.insert(
                    axie_id,
                    Axie {
                        id: axie_id,
                        name: axie_name,
                        gloss: String::new(),
                        tags: BTreeSet::new(),
                        subs: Vec::new(),
                        quasi: BTreeSet::new(),
                    },
                );
                self.state.acceptions.insert(
                    acc_id.clone(),
                    Acception { id: acc_id.clone(), entry: entry_id.clone(), name: display, features, axie: axie_id },
                );
                self.touch_entry(&entry_id);
                self.changed.insert(acc_id.clone().into());
                self.changed.insert(axie_id.into());
                Ok(Some(acc_id.into()))
            }
            Mutation::UpdateAcception { acception, name, features } => {
                let id = self.acception_ref(acception)?;
                let acc = self.state.acceptions.get_mut(&id).expect("checked");
                if let Some(name) = name {
                    acc.name = nfc(name);
                }
                if let Some(features) = features {
                    let mut features = features.clone();
                    prune_features(&mut features);
                    acc.features = features;
                }
                let entry = acc.entry.clone();
                self.touch_entry(&entry);
                self.changed.insert(id.clone().into());
                Ok(Some(id.into()))
            }
            Mutation::DeleteAcception { acception } => {
                let id = self.acception_ref(acception)?;
                let acc = self.state.acceptions.remove(&id).expect("checked");
                if let Some(entry) = self.state.entries.get_mut(&acc.entry) {
                    SenseNode::remove_leaf(&mut entry.senses, &id);
                }
                self.touch_entry(&acc.entry);
                self.changed.remove(&ObjectId::Acception(id));
                Ok(None)
            }
            Mutation::LinkTranslation { a, b } => {
                let a = self.acception_ref(a)?;
                let b = self.acception_ref(b)?;
                let xa = self.state.acceptions[&a].axie;
                let xb = self.state.acceptions[&b].axie;
                let merged = if xa == xb || !self.state.axies.contains_key(&xa) || !self.state.axies.contains_key(&xb) {
                    if xa != xb {
                        return Err(StoreError::InvalidMutation(format!(
                            "cannot link {a} and {b}: one of them has no interlingual acception"
                        )));
                    }
                    xa
                } else {
                    self.merge(xa, xb)
                };
                self.changed.insert(a.into());
                self.changed.insert(b.into());
                Ok(Some(merged.into()))
            }
            Mutation::AssignAxie { acception, axie } => {
                let acc = self.acception_ref(acception)?;
                let axie = self.axie_ref(axie)?;
                let slot = self.state.acceptions.get_mut(&acc).expect("checked");
                if slot.axie != axie {
                    slot.axie = axie;
                    self.moved.insert(acc.clone());
                }
                self.changed.insert(acc.into());
                self.changed.insert(axie.into());
                Ok(Some(axie.into()))
            }
            Mutation::MakeSubAcception { parent, label, gloss, tags, name } => {
                let parent = self.axie_ref(parent)?;
                let label = nfc(label.trim());
                if label.is_empty() {
                    return Err(StoreError::InvalidMutation("contrastive label is empty".into()));
                }
                let base = match name {
                    Some(n) if !n.trim().is_empty() => nfc(n),
                    _ => format!("{}_{label}", self.state.axies[&parent].name),
                };
                let name = self.state.unique_axie_name(&base);
                let id = self.state.alloc_axie();
                self.state.axies.insert(
                    id,
                    Axie { id, name, gloss: gloss.clone(), tags: tags.clone(), subs: Vec::new(), quasi: BTreeSet::new() },
                );
                self.state.axies.get_mut(&parent).expect("checked").subs.push(SubLink { child: id, label });
                self.changed.insert(parent.into());
                self.changed.insert(id.into());
                Ok(Some(id.into()))
            }
            Mutation::LinkSubAcception { parent, child, label } => {
                let parent = self.axie_ref(parent)?;
                let child = self.axie_ref(child)?;
                let label = nfc(label.trim());
                if label.is_empty() {
                    return Err(StoreError::InvalidMutation("contrastive label is empty".into()));
                }
                let node = self.state.axies.get_mut(&parent).expect("checked");
                if !node.subs.iter().any(|s| s.child == child) {
                    node.subs.push(SubLink { child, label });
                }
                self.changed.insert(parent.into());
                Ok(Some(child.into()))
            }
            Mutation::UnlinkSubAcception { parent, child } => {
                let parent = self.axie_ref(parent)?;
                let child = self.axie_ref(child)?;
                self.state.axies.get_mut(&parent).expect("checked").subs.retain(|s| s.child != child);
                self.changed.insert(parent.into());
                Ok(None)
            }
            Mutation::AddQuasiSynonym { a, b } | Mutation::RemoveQuasiSynonym { a, b } => {
                let a = self.axie_ref(a)?;
                let b = self.axie_ref(b)?;
                if a == b {
                    return Err(StoreError::InvalidMutation(format!("{a} cannot be a quasi-synonym of itself")));
                }
                let add = matches!(m, Mutation::AddQuasiSynonym { .. });
                for (x, y) in [(a, b), (b, a)] {
                    let set = &mut self.state.axies.get_mut(&x).expect("checked").quasi;
                    if add {
                        set.insert(y);
                    } else {
                        set.remove(&y);
                    }
                }
                self.changed.insert(a.into());
                self.changed.insert(b.into());
                Ok(None)
            }
            Mutation::UpdateAxie { axie, name, gloss, tags } => {
                let id = self.axie_ref(axie)?;
                if let Some(name) = name {
                    let name = nfc(name.trim());
                    if name.is_empty() {
                        return Err(StoreError::InvalidMutation("axie name is empty".into()));
                    }
                    if let Some(other) = self.state.axie_by_name(&name).filter(|x| x.id != id) {
                        self.immediate.push(Violation::new(
                            Code::DuplicateName,
                            Strength::Critical,
                            vec![id.into(), other.id.into()],
                            format!("name {name} is already used by {}", other.id),
                        ));
                    }
                    self.state.axies.get_mut(&id).expect("checked").name = name;
                }
                let node = self.state.axies.get_mut(&id).expect("checked");
                if let Some(gloss) = gloss {
                    node.gloss = gloss.clone();
                }
                if let Some(tags) = tags {
                    node.tags = tags.clone();
                }
                self.changed.insert(id.into());
                Ok(Some(id.into()))
            }
            Mutation::ValidateEntry { entry } => {
                let id = self.entry_ref(entry)?;
                self.state.entries.get_mut(&id).expect("checked").validated = true;
                Ok(Some(id.into()))
            }
            Mutation::SetCoverage { from, to, enabled } => {
                let key = |l: &String| {
                    self.schema
                        .dictionary(l)
                        .map(|d| d.key.clone())
                        .ok_or_else(|| StoreError::UnknownLanguage(l.clone()))
                };
                let pair = (key(from)?, key(to)?);
                if *enabled {
                    self.state.coverage.insert(pair);
                } else {
                    self.state.coverage.remove(&pair);
                }
                Ok(None)
            }
        }
    }

    fn default_acception_name(&self, entry: &EntryId) -> String {
        let e = &self.state.entries[entry];
        let taken: BTreeSet<&str> = e
            .acception_ids()
            .into_iter()
            .filter_map(|a| self.state.acceptions.get(a))
            .map(|a| a.name.as_str())
            .collect();
        (e.acception_ids().len() + 1..)
            .map(|k| format!("{}_{k}", e.lemma))
            .find(|n| !taken.contains(n.as_str()))
            .expect("unbounded search")
    }

    /// Merges two distinct axies. The one with a gloss survives; if both or
    /// neither have one, the older (lower id) survives.
    fn merge(&mut self, x: AxieId, y: AxieId) -> AxieId {
        let (gx, gy) = (!self.state.axies[&x].gloss.is_empty(), !self.state.axies[&y].gloss.is_empty());
        let (keep, gone) = match (gx, gy) {
            (true, false) => (x, y),
            (false, true) => (y, x),
            _ => (x.min(y), x.max(y)),
        };
        let absorbed = self.state.axies.remove(&gone).expect("exists");
        let swap = |id: AxieId| if id == gone { keep } else { id };

        for acc in self.state.acceptions.values_mut() {
            if acc.axie == gone {
                acc.axie = keep;
                self.moved.insert(acc.id.clone());
                self.changed.insert(acc.id.clone().into());
            }
        }
        for node in self.state.axies.values_mut() {
            let mut seen = BTreeSet::new();
            let subs = std::mem::take(&mut node.subs);
            node.subs = subs
                .into_iter()
                .map(|s| SubLink { child: swap(s.child), label: s.label })
                .filter(|s| seen.insert(s.child))
                .collect();
            if node.quasi.remove(&gone) {
                node.quasi.insert(keep);
            }
        }
        let survivor = self.state.axies.get_mut(&keep).expect("exists");
        if survivor.gloss.is_empty() {
            survivor.gloss = absorbed.gloss;
        }
        survivor.tags.extend(absorbed.tags);
        for sub in absorbed.subs {
            let child = swap(sub.child);
            if !survivor.subs.iter().any(|s| s.child == child) {
                survivor.subs.push(SubLink { child, label: sub.label });
            }
        }
        survivor.quasi.extend(absorbed.quasi.into_iter().map(swap));
        survivor.quasi.remove(&keep);
        // Quasi links are symmetric; self-links created by the merge are dropped.
        for node in self.state.axies.values_mut() {
            let id = node.id;
            node.quasi.remove(&id);
        }
        let partners: Vec<AxieId> = self.state.axies[&keep].quasi.iter().copied().collect();
        for p in partners {
            if let Some(n) = self.state.axies.get_mut(&p) {
                n.quasi.insert(keep);
            }
        }
        self.retired.push(gone);
        self.changed.remove(&ObjectId::Axie(gone));
        self.changed.insert(keep.into());
        keep
    }

    /// Removes axies with no acception and no parent, until none remain.
    pub fn collect_orphans(&mut self) {
        loop {
            let used: BTreeSet<AxieId> = self.state.acceptions.values().map(|a| a.axie).collect();
            let parented: BTreeSet<AxieId> =
                self.state.axies.values().flat_map(|x| x.subs.iter().map(|s| s.child)).collect();
            let orphans: Vec<AxieId> = self
                .state
                .axies
                .keys()
                .filter(|id| !used.contains(id) && !parented.contains(id))
                .copied()
                .collect();
            if orphans.is_empty() {
                break;
            }
            for id in orphans {
                self.state.axies.remove(&id);
                for node in self.state.axies.values_mut() {
                    node.quasi.remove(&id);
                }
                self.changed.remove(&ObjectId::Axie(id));
                self.collected.push(id);
            }
        }
    }

    /// Feature validation of every changed entry and acception.
    pub fn validation_violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for id in &self.changed {
            let (features, class) = match id {
                ObjectId::Entry(e) => match (self.state.entries.get(e), self.schema.dictionary(&e.lang)) {
                    (Some(entry), Some(d)) => (&entry.features, &d.entry_class),
                    _ => continue,
                },
                ObjectId::Acception(a) => match (self.state.acceptions.get(a), self.schema.dictionary(&a.lang)) {
                    (Some(acc), Some(d)) => (&acc.features, &d.acception_class),
                    _ => continue,
                },
                ObjectId::Axie(_) => continue,
            };
            let report = match validate_features(features, class, self.schema) {
                Ok(r) => r,
                Err(e) => {
                    out.push(Violation::new(Code::Validation, Strength::Critical, vec![id.clone()], e.kind.to_string()));
                    continue;
                }
            };
            if !report.is_ok() {
                let faults: Vec<String> = report.faults.iter().map(ToString::to_string).collect();
                out.push(Violation::new(
                    Code::Validation,
                    Strength::Critical,
                    vec![id.clone()],
                    format!("features do not match class {class}: {}", faults.join("; ")),
                ));
            }
        }
        out
    }

    /// Warnings for changed entries sharing language, lemma and features with another entry.
    pub fn homograph_violations(&self) -> Vec<Violation> {
        let mut groups: BTreeMap<(&str, &str, &Features), Vec<&EntryId>> = BTreeMap::new();
        for e in self.state.entries.values() {
            groups.entry((&e.id.lang, &e.lemma, &e.features)).or_default().push(&e.id);
        }
        let mut out = Vec::new();
        for ((_, lemma, _), ids) in groups {
            if ids.len() > 1 && ids.iter().any(|id| self.changed.contains(&ObjectId::Entry((*id).clone()))) {
                out.push(Violation::new(
                    Code::Homograph,
                    Strength::Warning,
                    ids.into_iter().map(|id| ObjectId::Entry(id.clone())).collect(),
                    format!("{lemma} has homograph entries with identical features"),
                ));
            }
        }
        out
    }
}
