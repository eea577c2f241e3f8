//! Read-side operations: translation, browsing, lookup and counts.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;

use crate::dls::{Features, Schema};
use crate::ids::{AcceptionId, AxieId, EntryId};
use crate::violation::Violation;

use super::state::{nfc, DbState, Entry, SenseNode};
use super::wellformed::t2_violation;
use super::StoreError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HitKind {
    Direct,
    Sub,
    Quasi,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hit {
    pub via: HitKind,
    /// Contrastive labels from the source axie down to `axie`; empty unless `via` is `Sub`.
    pub path: Vec<String>,
    pub axie: AxieId,
    pub acception: AcceptionId,
    pub name: String,
    pub entry: EntryId,
    pub lemma: String,
    pub delayed: bool,
}

/// Target-language acceptions reachable from `axie`: direct members first;
/// failing that, members of sub-acceptions (breadth first); failing that,
/// direct members of quasi-synonyms.
pub fn counterparts(state: &DbState, axie: AxieId, lang: &str) -> Vec<Hit> {
    let hit = |via, path: Vec<String>, at: AxieId| {
        state.member_in(at, lang).map(|acc| {
            let entry = state.entry(&acc.entry);
            Hit {
                via,
                path,
                axie: at,
                acception: acc.id.clone(),
                name: acc.name.clone(),
                entry: acc.entry.clone(),
                lemma: entry.map(|e| e.lemma.clone()).unwrap_or_default(),
                delayed: entry.is_some_and(|e| state.is_entry_delayed(e)),
            }
        })
    };

    if let Some(h) = hit(HitKind::Direct, Vec::new(), axie) {
        return vec![h];
    }

    let mut hits = Vec::new();
    let mut seen = BTreeSet::from([axie]);
    let mut queue: VecDeque<(AxieId, Vec<String>)> = VecDeque::from([(axie, Vec::new())]);
    while let Some((at, path)) = queue.pop_front() {
        let Some(node) = state.axie(&at) else { continue };
        for sub in &node.subs {
            if !seen.insert(sub.child) {
                continue;
            }
            let mut child_path = path.clone();
            child_path.push(sub.label.clone());
            if let Some(h) = hit(HitKind::Sub, child_path.clone(), sub.child) {
                hits.push(h);
            }
            queue.push_back((sub.child, child_path));
        }
    }
    if !hits.is_empty() {
        return hits;
    }

    state
        .axie(&axie)
        .map(|x| x.quasi.iter().filter_map(|q| hit(HitKind::Quasi, Vec::new(), *q)).collect())
        .unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SenseTranslation {
    pub entry: EntryId,
    pub lemma: String,
    pub acception: AcceptionId,
    pub name: String,
    pub axie: AxieId,
    pub axie_name: String,
    pub hits: Vec<Hit>,
    pub untranslatable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TranslationResult {
    pub lemma: String,
    pub from: String,
    pub to: String,
    pub senses: Vec<SenseTranslation>,
}

impl TranslationResult {
    pub fn hits(&self) -> impl Iterator<Item = &Hit> {
        self.senses.iter().flat_map(|s| s.hits.iter())
    }

    pub fn direct_hits(&self) -> impl Iterator<Item = &Hit> {
        self.hits().filter(|h| h.via == HitKind::Direct)
    }
}

fn dictionary_key(schema: &Schema, language: &str) -> Result<String, StoreError> {
    schema
        .dictionary(language)
        .map(|d| d.key.clone())
        .ok_or_else(|| StoreError::UnknownLanguage(language.to_string()))
}

/// Translates every acception of every source entry spelled `lemma`.
/// Returns the result and the T2 warnings for untranslatable senses.
pub fn translate(
    state: &DbState,
    schema: &Schema,
    lemma: &str,
    from: &str,
    to: &str,
) -> Result<(TranslationResult, Vec<Violation>), StoreError> {
    let from = dictionary_key(schema, from)?;
    let to = dictionary_key(schema, to)?;
    let lemma = nfc(lemma);
    let entries: Vec<&Entry> = state.entries_of(&from).filter(|e| e.lemma == lemma).collect();
    if entries.is_empty() {
        return Err(StoreError::UnknownLemma { lemma, language: from });
    }
    let mut senses = Vec::new();
    let mut warnings = Vec::new();
    for entry in entries {
        for acc_id in entry.acception_ids() {
            let Some(acc) = state.acception(acc_id) else { continue };
            let axie_name = state.axie(&acc.axie).map(|x| x.name.clone()).unwrap_or_default();
            let hits = counterparts(state, acc.axie, &to);
            if hits.is_empty() {
                warnings.push(t2_violation(acc.axie, &axie_name, &from, &to));
            }
            senses.push(SenseTranslation {
                entry: entry.id.clone(),
                lemma: entry.lemma.clone(),
                acception: acc.id.clone(),
                name: acc.name.clone(),
                axie: acc.axie,
                axie_name,
                untranslatable: hits.is_empty(),
                hits,
            });
        }
    }
    Ok((TranslationResult { lemma, from, to, senses }, warnings))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AcceptionView {
    pub id: AcceptionId,
    pub name: String,
    pub features: Features,
    pub axie: AxieId,
    pub axie_name: String,
    pub gloss: String,
    pub delayed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntryView {
    pub id: EntryId,
    pub language: String,
    pub lemma: String,
    pub features: Features,
    pub senses: Vec<SenseNode>,
    pub acceptions: Vec<AcceptionView>,
    pub validated: bool,
    pub delayed: bool,
    pub delay_reasons: Vec<String>,
}

pub fn entry_view(state: &DbState, entry: &Entry) -> EntryView {
    let mut reasons = BTreeSet::new();
    let mut own = |id: crate::ids::ObjectId| {
        if let Some(r) = state.delay_reasons(&id) {
            reasons.extend(r.iter().cloned());
            true
        } else {
            false
        }
    };
    own(entry.id.clone().into());
    let acceptions = entry
        .acception_ids()
        .into_iter()
        .filter_map(|id| state.acception(id))
        .map(|acc| {
            let axie = state.axie(&acc.axie);
            AcceptionView {
                id: acc.id.clone(),
                name: acc.name.clone(),
                features: acc.features.clone(),
                axie: acc.axie,
                axie_name: axie.map(|x| x.name.clone()).unwrap_or_default(),
                gloss: axie.map(|x| x.gloss.clone()).unwrap_or_default(),
                delayed: own(acc.id.clone().into()),
            }
        })
        .collect();
    EntryView {
        id: entry.id.clone(),
        language: entry.id.lang.clone(),
        lemma: entry.lemma.clone(),
        features: entry.features.clone(),
        senses: entry.senses.clone(),
        acceptions,
        validated: entry.validated,
        delayed: !reasons.is_empty(),
        delay_reasons: reasons.into_iter().collect(),
    }
}

/// Entries of `language` whose lemma starts with `prefix` (after NFC),
/// ordered by lemma then id. Delayed entries are included and flagged.
pub fn lookup_entry(
    state: &DbState,
    schema: &Schema,
    language: &str,
    prefix: &str,
) -> Result<Vec<EntryView>, StoreError> {
    let lang = dictionary_key(schema, language)?;
    let prefix = nfc(prefix);
    let mut found: Vec<&Entry> = state.entries_of(&lang).filter(|e| e.lemma.starts_with(&prefix)).collect();
    found.sort_by(|a, b| (&a.lemma, &a.id).cmp(&(&b.lemma, &b.id)));
    Ok(found.into_iter().map(|e| entry_view(state, e)).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MemberView {
    pub acception: AcceptionId,
    pub name: String,
    pub entry: EntryId,
    pub lemma: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubView {
    pub label: String,
    pub child: AxieId,
    /// Present while the depth bound allows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axie: Option<Box<AxieView>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AxieView {
    pub id: AxieId,
    pub name: String,
    pub gloss: String,
    pub tags: BTreeSet<String>,
    /// Language key -> acceptions (more than one only in ill-formed data).
    pub languages: BTreeMap<String, Vec<MemberView>>,
    pub subs: Vec<SubView>,
    pub quasi: Vec<AxieId>,
    pub parents: Vec<AxieId>,
}

pub fn browse_axie(state: &DbState, id: AxieId, depth: usize) -> Result<AxieView, StoreError> {
    let axie = state.axie(&id).ok_or_else(|| StoreError::UnknownId(id.to_string()))?;
    let mut languages: BTreeMap<String, Vec<MemberView>> = BTreeMap::new();
    for acc in state.members(id) {
        languages.entry(acc.id.lang.clone()).or_default().push(MemberView {
            acception: acc.id.clone(),
            name: acc.name.clone(),
            entry: acc.entry.clone(),
            lemma: state.entry(&acc.entry).map(|e| e.lemma.clone()).unwrap_or_default(),
        });
    }
    let subs = axie
        .subs
        .iter()
        .map(|s| SubView {
            label: s.label.clone(),
            child: s.child,
            axie: if depth == 0 {
                None
            } else {
                browse_axie(state, s.child, depth - 1).ok().map(Box::new)
            },
        })
        .collect();
    Ok(AxieView {
        id,
        name: axie.name.clone(),
        gloss: axie.gloss.clone(),
        tags: axie.tags.clone(),
        languages,
        subs,
        quasi: axie.quasi.iter().copied().collect(),
        parents: state.parents(id),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct DictionaryStats {
    pub language: String,
    pub entries: usize,
    pub acceptions: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Stats {
    pub dictionaries: Vec<DictionaryStats>,
    pub axies: usize,
    /// Axies with at least one incoming sub-acception link.
    pub sub_acceptions: usize,
}

impl Stats {
    pub fn for_language(&self, key: &str) -> Option<&DictionaryStats> {
        self.dictionaries.iter().find(|d| d.language == key)
    }
}

pub fn stats(state: &DbState, schema: &Schema) -> Stats {
    let dictionaries = schema
        .dictionaries
        .iter()
        .map(|d| DictionaryStats {
            language: d.key.clone(),
            entries: state.entries_of(&d.key).count(),
            acceptions: state.acceptions().filter(|a| a.id.lang == d.key).count(),
        })
        .collect();
    let children: BTreeSet<AxieId> = state
        .axies()
        .flat_map(|x| x.subs.iter().map(|s| s.child))
        .filter(|c| state.axie(c).is_some())
        .collect();
    Stats { dictionaries, axies: state.axies().count(), sub_acceptions: children.len() }
}
