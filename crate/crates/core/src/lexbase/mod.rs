//! Transactional store for entries, monolingual acceptions and axies.

pub mod mutation;
pub mod query;
pub mod state;
pub mod store;
pub mod wellformed;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::Serialize;

use crate::dls::{FeatureValue, Features, Schema};
use crate::ids::{AcceptionId, AxieId, EntryId, ObjectId};
use crate::rules::{apply_defaults, run_all_rules, run_rules, ArticleKind, ArticleView, Mode, Proposal, RuleSet, Strength};
use crate::violation::{sort_violations, Code, SuggestedFix, Violation};

pub use mutation::{Mutation, Ref};
pub use query::{AxieView, EntryView, Hit, HitKind, SenseTranslation, Stats, TranslationResult};
pub use state::{Acception, Axie, DbState, Entry, LogRecord, SenseNode, SubLink};
pub use wellformed::check_wellformed;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown id `{0}`")]
    UnknownId(String),
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("no entry `{lemma}` in {language}")]
    UnknownLemma { lemma: String, language: String },
    #[error("invalid mutation: {0}")]
    InvalidMutation(String),
    #[error("transaction rolled back: {}", summary(.0))]
    RolledBack(Box<Transaction>),
    #[error("corrupt store: {0}")]
    CorruptStore(String),
    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn summary(txn: &Transaction) -> String {
    let critical: Vec<String> = txn
        .violations
        .iter()
        .filter(|v| v.strength == Strength::Critical)
        .map(ToString::to_string)
        .collect();
    critical.join("; ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Outcome {
    Committed,
    RolledBack,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Transaction {
    /// Sequence number the transaction committed as (or would have).
    pub seq: u64,
    pub mutations: Vec<Mutation>,
    /// Id produced by each mutation, if any.
    pub results: Vec<Option<String>>,
    pub violations: Vec<Violation>,
    pub outcome: Outcome,
    /// Axies removed because nothing referenced them any more.
    pub collected: Vec<AxieId>,
    /// Axies absorbed by merges.
    pub retired: Vec<AxieId>,
}

impl Transaction {
    pub fn committed(&self) -> bool {
        self.outcome == Outcome::Committed
    }

    pub fn result(&self, index: usize) -> Option<&str> {
        self.results.get(index).and_then(|r| r.as_deref())
    }
}

/// A committed transaction together with the id the convenience call produced.
#[derive(Clone, Debug)]
pub struct Applied<T> {
    pub value: T,
    pub txn: Transaction,
}

/// Shared handle. Readers take snapshots; writers are serialized.
pub struct Database {
    schema: Arc<Schema>,
    rules: Arc<RuleSet>,
    location: Option<PathBuf>,
    state: RwLock<Arc<DbState>>,
    writer: Mutex<()>,
}

impl Database {
    pub fn in_memory(schema: Arc<Schema>, rules: Arc<RuleSet>) -> Database {
        Database::from_state(schema, rules, DbState::default())
    }

    pub fn from_state(schema: Arc<Schema>, rules: Arc<RuleSet>, mut state: DbState) -> Database {
        state.reset_counters();
        Database { schema, rules, location: None, state: RwLock::new(Arc::new(state)), writer: Mutex::new(()) }
    }

    /// Opens the database stored in `location`, or initializes an empty
    /// one there if the directory is missing or empty.
    pub fn open(location: &Path, schema: Arc<Schema>, rules: Arc<RuleSet>) -> Result<Database, StoreError> {
        let state = store::load(location, &schema)?;
        let mut db = Database::from_state(schema, rules, state);
        db.location = Some(location.to_path_buf());
        if !store::exists(location) {
            store::persist(location, &db.schema, &db.snapshot())?;
        }
        Ok(db)
    }

    /// Attaches storage to an in-memory database and writes it out.
    pub fn persist_to(&mut self, location: &Path) -> Result<(), StoreError> {
        store::persist(location, &self.schema, &self.snapshot())?;
        self.location = Some(location.to_path_buf());
        Ok(())
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn rules(&self) -> &Arc<RuleSet> {
        &self.rules
    }

    pub fn location(&self) -> Option<&Path> {
        self.location.as_deref()
    }

    pub fn snapshot(&self) -> Arc<DbState> {
        self.state.read().expect("state lock poisoned").clone()
    }

    fn publish(&self, next: DbState) -> Result<(), StoreError> {
        if let Some(dir) = &self.location {
            store::persist(dir, &self.schema, &next)?;
        }
        *self.state.write().expect("state lock poisoned") = Arc::new(next);
        Ok(())
    }

    /// Applies `mutations` atomically. Reference errors abort with `Err`
    /// and no change; otherwise the returned transaction says whether it
    /// committed.
    pub fn apply(&self, mutations: Vec<Mutation>, actor: Option<&str>) -> Result<Transaction, StoreError> {
        let _guard = self.writer.lock().expect("writer lock poisoned");
        let before = self.snapshot();
        let (txn, next) = run_transaction(&self.schema, &self.rules, &before, mutations, actor)?;
        if let Some(next) = next {
            self.publish(next)?;
        }
        Ok(txn)
    }

    fn apply_one<T>(
        &self,
        m: Mutation,
        actor: Option<&str>,
        pick: impl FnOnce(&str) -> Option<T>,
    ) -> Result<Applied<T>, StoreError> {
        let txn = self.apply(vec![m], actor)?;
        if !txn.committed() {
            return Err(StoreError::RolledBack(Box::new(txn)));
        }
        let value = txn
            .result(0)
            .and_then(pick)
            .ok_or_else(|| StoreError::InvalidMutation("mutation produced no id".into()))?;
        Ok(Applied { value, txn })
    }

    pub fn create_entry(&self, language: &str, lemma: &str, features: Features) -> Result<Applied<EntryId>, StoreError> {
        let m = Mutation::CreateEntry { language: language.into(), lemma: lemma.into(), features };
        self.apply_one(m, None, |s| s.parse().ok())
    }

    pub fn add_acception(
        &self,
        entry: &EntryId,
        sense_path: Vec<usize>,
        features: Features,
        name: Option<&str>,
    ) -> Result<Applied<AcceptionId>, StoreError> {
        let m = Mutation::AddAcception { entry: entry.into(), sense_path, features, name: name.map(Into::into) };
        self.apply_one(m, None, |s| s.parse().ok())
    }

    pub fn link_translation(&self, a: &AcceptionId, b: &AcceptionId) -> Result<Applied<AxieId>, StoreError> {
        self.apply_one(Mutation::LinkTranslation { a: a.into(), b: b.into() }, None, |s| s.parse().ok())
    }

    pub fn make_sub_acception(
        &self,
        parent: AxieId,
        label: &str,
        gloss: &str,
        tags: &[&str],
    ) -> Result<Applied<AxieId>, StoreError> {
        let m = Mutation::MakeSubAcception {
            parent: parent.into(),
            label: label.into(),
            gloss: gloss.into(),
            tags: tags.iter().map(|t| t.to_string()).collect(),
            name: None,
        };
        self.apply_one(m, None, |s| s.parse().ok())
    }

    pub fn add_quasi_synonym(&self, a: AxieId, b: AxieId) -> Result<Transaction, StoreError> {
        let txn = self.apply(vec![Mutation::AddQuasiSynonym { a: a.into(), b: b.into() }], None)?;
        if txn.committed() {
            Ok(txn)
        } else {
            Err(StoreError::RolledBack(Box::new(txn)))
        }
    }

    /// Translates and logs a missing-counterpart warning for every
    /// untranslatable sense (once per axie and language pair).
    pub fn translate(&self, lemma: &str, from: &str, to: &str) -> Result<TranslationResult, StoreError> {
        let _guard = self.writer.lock().expect("writer lock poisoned");
        let snap = self.snapshot();
        let (result, warnings) = query::translate(&snap, &self.schema, lemma, from, to)?;
        let fresh: Vec<Violation> =
            warnings.into_iter().filter(|w| !snap.log.iter().any(|r| r.violation.key() == w.key() && r.violation.message == w.message)).collect();
        if !fresh.is_empty() {
            let mut next = (*snap).clone();
            let seq = next.seq;
            next.log.extend(fresh.into_iter().map(|violation| LogRecord { seq, actor: None, violation }));
            self.publish(next)?;
        }
        Ok(result)
    }

    pub fn lookup_entry(&self, language: &str, prefix: &str) -> Result<Vec<EntryView>, StoreError> {
        query::lookup_entry(&self.snapshot(), &self.schema, language, prefix)
    }

    pub fn entry_view(&self, id: &EntryId) -> Result<EntryView, StoreError> {
        let snap = self.snapshot();
        let entry = snap.entry(id).ok_or_else(|| StoreError::UnknownId(id.to_string()))?;
        Ok(query::entry_view(&snap, entry))
    }

    pub fn browse_axie(&self, id: AxieId, depth: usize) -> Result<AxieView, StoreError> {
        query::browse_axie(&self.snapshot(), id, depth)
    }

    pub fn check_wellformed(&self) -> Vec<Violation> {
        check_wellformed(&self.snapshot())
    }

    /// Well-formedness plus every registered rule over the whole store.
    pub fn check_all(&self) -> Vec<Violation> {
        let snap = self.snapshot();
        let mut out = check_wellformed(&snap);
        out.extend(run_all_rules(&snap, &self.schema, &self.rules.rules));
        sort_violations(&mut out);
        out
    }

    pub fn stats(&self) -> Stats {
        query::stats(&self.snapshot(), &self.schema)
    }

    /// Logged warnings and current delays at or above `min`.
    pub fn violations(&self, min: Strength) -> Vec<LogRecord> {
        self.snapshot().logged(min).cloned().collect()
    }

    /// Default proposals for a prospective article of `language`.
    pub fn preview_defaults(&self, language: &str, kind: ArticleKind, features: Features) -> Result<Vec<Proposal>, StoreError> {
        let dict = self
            .schema
            .dictionary(language)
            .ok_or_else(|| StoreError::UnknownLanguage(language.to_string()))?;
        let probe: ObjectId = match kind {
            ArticleKind::Entry => EntryId { lang: dict.key.clone(), n: 0 }.into(),
            ArticleKind::Acception => AcceptionId { lang: dict.key.clone(), n: 0 }.into(),
            ArticleKind::Axie => AxieId(0).into(),
        };
        let defaults = self.defaults_for(&probe);
        let mut view = ArticleView::bare(features);
        view.language = Some(dict.key.clone());
        Ok(apply_defaults(&view, &defaults, Mode::Interactive).1)
    }

    fn defaults_for(&self, id: &ObjectId) -> Vec<&crate::rules::CompiledDefault> {
        self.rules
            .defaults
            .iter()
            .filter(|d| crate::rules::matches_target(&self.schema, &d.target, id))
            .collect()
    }

    /// Runs the defaulter over every entry and acception and commits the
    /// filled features as one transaction.
    pub fn default_batch(&self, actor: Option<&str>) -> Result<(Transaction, usize), StoreError> {
        let snap = self.snapshot();
        let mut mutations = Vec::new();
        for e in snap.entries() {
            let id: ObjectId = e.id.clone().into();
            let (out, applied) = apply_defaults(&ArticleView::of_entry(e), &self.defaults_for(&id), Mode::Batch);
            if !applied.is_empty() {
                mutations.push(Mutation::UpdateEntry { entry: (&e.id).into(), lemma: None, features: Some(out.features) });
            }
        }
        for a in snap.acceptions() {
            let id: ObjectId = a.id.clone().into();
            let (out, applied) =
                apply_defaults(&ArticleView::of_acception(&snap, a), &self.defaults_for(&id), Mode::Batch);
            if !applied.is_empty() {
                mutations.push(Mutation::UpdateAcception { acception: (&a.id).into(), name: None, features: Some(out.features) });
            }
        }
        let count = mutations.len();
        Ok((self.apply(mutations, actor)?, count))
    }
}

/// Runs one transaction against `before`. Returns the report and, when it
/// commits, the next state.
pub(crate) fn run_transaction(
    schema: &Schema,
    rules: &RuleSet,
    before: &DbState,
    mutations: Vec<Mutation>,
    actor: Option<&str>,
) -> Result<(Transaction, Option<DbState>), StoreError> {
    let mut work = mutation::Work::new(schema, before.clone());
    for m in &mutations {
        work.apply(m)?;
    }
    work.collect_orphans();

    let mut violations = std::mem::take(&mut work.immediate);
    violations.extend(work.validation_violations());
    violations.extend(work.homograph_violations());

    let pre: BTreeSet<_> = wellformed::structural_violations(before).iter().map(Violation::key).collect();
    for v in wellformed::structural_violations(&work.state) {
        if pre.contains(&v.key()) {
            continue;
        }
        violations.push(if v.code == Code::Wf2 { with_split_fix(&work, v) } else { v });
    }

    let changed: BTreeSet<ObjectId> = work.changed.iter().filter(|id| work.state.contains(id)).cloned().collect();
    let rule_violations = run_rules(&work.state, schema, &rules.rules, &changed);
    violations.extend(rule_violations.iter().cloned());
    sort_violations(&mut violations);
    violations.dedup_by(|a, b| a.key() == b.key() && a.message == b.message);

    let outcome =
        if violations.iter().any(|v| v.strength == Strength::Critical) { Outcome::RolledBack } else { Outcome::Committed };
    let txn = Transaction {
        seq: before.seq + 1,
        results: work.results.iter().map(|r| r.as_ref().map(ToString::to_string)).collect(),
        mutations,
        violations,
        outcome,
        collected: work.collected.clone(),
        retired: work.retired.clone(),
    };
    if outcome == Outcome::RolledBack {
        return Ok((txn, None));
    }

    let mut next = work.state;
    next.seq = txn.seq;

    // Delay flags: re-running a delay rule on an article clears its old verdict.
    let delay_rules: BTreeSet<String> =
        rules.rules.iter().filter(|r| r.decl.strength == Strength::Delay).map(|r| r.decl.name.clone()).collect();
    let mut cleared: Vec<(ObjectId, String)> = Vec::new();
    for id in &changed {
        if let Some(reasons) = next.delayed.get_mut(id) {
            for r in reasons.iter().filter(|r| delay_rules.contains(*r)) {
                cleared.push((id.clone(), r.clone()));
            }
            reasons.retain(|r| !delay_rules.contains(r));
        }
    }
    let live = next.clone();
    next.delayed.retain(|id, reasons| live.contains(id) && !reasons.is_empty());
    next.log.retain(|rec| {
        let v = &rec.violation;
        if v.strength == Strength::Delay {
            if let Code::Rule(name) = &v.code {
                if v.subjects.iter().any(|s| cleared.contains(&(s.clone(), name.clone()))) {
                    return false;
                }
            }
        }
        true
    });

    let mut flagged: BTreeMap<ObjectId, BTreeSet<String>> = BTreeMap::new();
    for v in txn.violations.iter().filter(|v| v.strength == Strength::Delay) {
        for s in &v.subjects {
            flagged.entry(s.clone()).or_default().insert(v.code.to_string());
        }
    }
    for (id, reasons) in flagged {
        next.delayed.entry(id).or_default().extend(reasons);
    }

    // Validation clears the warnings attached to the entry and its acceptions.
    let validated: Vec<EntryId> = txn
        .mutations
        .iter()
        .enumerate()
        .filter(|(_, m)| matches!(m, Mutation::ValidateEntry { .. }))
        .filter_map(|(i, _)| txn.result(i)?.parse().ok())
        .filter(|id| next.entry(id).is_some_and(|e| e.validated))
        .collect();
    let mut owned: BTreeSet<ObjectId> = BTreeSet::new();
    for id in &validated {
        owned.insert(id.clone().into());
        if let Some(e) = next.entry(id) {
            owned.extend(e.acception_ids().into_iter().map(|a| ObjectId::from(a.clone())));
        }
    }
    let is_owned = |v: &Violation| v.strength == Strength::Warning && v.subjects.iter().any(|s| owned.contains(s));
    next.log.retain(|rec| !is_owned(&rec.violation));

    for v in &txn.violations {
        if v.strength == Strength::Critical || is_owned(v) {
            continue;
        }
        next.log.push(LogRecord { seq: txn.seq, actor: actor.map(Into::into), violation: v.clone() });
    }
    // Drop log records whose subjects no longer exist.
    let live = next.clone();
    next.log.retain(|rec| rec.violation.subjects.iter().any(|s| live.contains(s)));

    Ok((txn, Some(next)))
}

/// Attaches the default solution to a WF2 conflict: move the acception that
/// arrived last onto a new contrastive sub-acception of the shared axie.
fn with_split_fix(work: &mutation::Work<'_>, v: Violation) -> Violation {
    let Some(ObjectId::Axie(parent)) = v.subjects.first().cloned() else { return v };
    let accs: Vec<&AcceptionId> = v
        .subjects
        .iter()
        .filter_map(|s| match s {
            ObjectId::Acception(a) => Some(a),
            _ => None,
        })
        .collect();
    let pick = accs
        .iter()
        .filter(|a| work.moved.contains(**a))
        .max()
        .or_else(|| accs.iter().filter(|a| work.changed.contains(&ObjectId::Acception((**a).clone()))).max())
        .or_else(|| accs.iter().max())
        .map(|a| (*a).clone());
    let Some(acception) = pick else { return v };
    let label = work.state.acception(&acception).map(|a| a.name.clone()).unwrap_or_default();
    v.with_fix(SuggestedFix::CreateSubAcception { parent, acception, label })
}

/// Builds a feature map from `(name, value)` pairs. Handy in tests and fixtures.
pub fn features<'a>(pairs: impl IntoIterator<Item = (&'a str, FeatureValue)>) -> Features {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Checks a whole state as if every article had just changed. Critical
/// findings reject it; otherwise delays are flagged and warnings logged.
pub fn admit_state(schema: &Schema, rules: &RuleSet, state: DbState) -> Result<DbState, Vec<Violation>> {
    let mut work = mutation::Work::new(schema, state);
    work.changed = work.state.entries().map(|e| ObjectId::from(e.id.clone())).collect();
    work.changed.extend(work.state.acceptions().map(|a| ObjectId::from(a.id.clone())));
    work.changed.extend(work.state.axies().map(|x| ObjectId::from(x.id)));
    let mut violations = work.validation_violations();
    for e in work.state.entries() {
        if e.lemma.trim().is_empty() {
            violations.push(Violation::new(Code::EmptyLemma, Strength::Critical, vec![e.id.clone().into()], "lemma is empty"));
        }
    }
    violations.extend(wellformed::structural_violations(&work.state));
    violations.extend(run_all_rules(&work.state, schema, &rules.rules));
    sort_violations(&mut violations);
    if violations.iter().any(|v| v.strength == Strength::Critical) {
        return Err(violations);
    }
    let mut state = work.state;
    for v in violations {
        if v.strength == Strength::Delay {
            for s in &v.subjects {
                state.delayed.entry(s.clone()).or_default().insert(v.code.to_string());
            }
        }
        state.log.push(LogRecord { seq: state.seq, actor: None, violation: v });
    }
    Ok(state)
}
