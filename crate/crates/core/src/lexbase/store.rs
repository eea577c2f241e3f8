//! On-disk layout: `db.meta` (JSON), one `<key>.dict.xml` per dictionary
//! and `axies.xml`. A commit writes every file to `*.tmp`, records the
//! file list in `commit.intent`, renames the temporaries into place and
//! removes the intent. Opening a directory with a leftover intent finishes
//! the renames first.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dls::Schema;
use crate::ids::ObjectId;
use crate::interchange::{export_axies, export_dictionary, read_documents, ExportOptions, HashCheck};

use super::state::{DbState, LogRecord};
use super::StoreError;

pub const META_FILE: &str = "db.meta";
pub const AXIES_FILE: &str = "axies.xml";
const INTENT_FILE: &str = "commit.intent";

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    database: String,
    schema_hash: String,
    seq: u64,
    next_entry: BTreeMap<String, u64>,
    next_acception: BTreeMap<String, u64>,
    next_axie: u64,
    #[serde(default)]
    delayed: BTreeMap<ObjectId, BTreeSet<String>>,
    #[serde(default)]
    coverage: BTreeSet<(String, String)>,
    #[serde(default)]
    log: Vec<LogRecord>,
}

pub fn dictionary_file(key: &str) -> String {
    format!("{key}.dict.xml")
}

/// True when `dir` holds a stored database.
pub fn exists(dir: &Path) -> bool {
    dir.join(META_FILE).is_file()
}

fn corrupt(detail: impl Into<String>) -> StoreError {
    StoreError::CorruptStore(detail.into())
}

fn write_synced(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let mut f = File::create(path)?;
    f.write_all(contents)?;
    f.sync_all()
}

fn sync_dir(dir: &Path) {
    // Not every platform allows opening a directory for syncing.
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}

/// Writes `state` to `dir` atomically.
pub fn persist(dir: &Path, schema: &Schema, state: &DbState) -> Result<(), StoreError> {
    fs::create_dir_all(dir)?;
    let opts = ExportOptions { include_delayed: true };
    let meta = Meta {
        database: schema.database.clone(),
        schema_hash: schema.hash(),
        seq: state.seq,
        next_entry: state.next_entry.clone(),
        next_acception: state.next_acception.clone(),
        next_axie: state.next_axie,
        delayed: state.delayed.clone(),
        coverage: state.coverage.clone(),
        log: state.log.clone(),
    };
    let mut files: Vec<(String, String)> = schema
        .dictionaries
        .iter()
        .map(|d| (dictionary_file(&d.key), export_dictionary(state, schema, &d.key, opts)))
        .collect();
    files.push((AXIES_FILE.to_string(), export_axies(state, schema, opts)));
    files.push((META_FILE.to_string(), serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n"));

    for (name, contents) in &files {
        write_synced(&dir.join(format!("{name}.tmp")), contents.as_bytes())?;
    }
    let names: Vec<&String> = files.iter().map(|(n, _)| n).collect();
    write_synced(&dir.join(INTENT_FILE), serde_json::to_string(&names).expect("names serialize").as_bytes())?;
    sync_dir(dir);
    finish_commit(dir)
}

/// Renames the temporaries listed in the intent file, then drops the intent.
fn finish_commit(dir: &Path) -> Result<(), StoreError> {
    let intent = dir.join(INTENT_FILE);
    let text = fs::read_to_string(&intent)?;
    let names: Vec<String> = serde_json::from_str(&text).map_err(|e| corrupt(format!("{INTENT_FILE}: {e}")))?;
    for name in names {
        let tmp = dir.join(format!("{name}.tmp"));
        if tmp.exists() {
            fs::rename(&tmp, dir.join(&name))?;
        }
    }
    sync_dir(dir);
    fs::remove_file(&intent)?;
    sync_dir(dir);
    Ok(())
}

/// Loads the database stored in `dir`. A missing or empty directory yields
/// an empty state.
pub fn load(dir: &Path, schema: &Schema) -> Result<DbState, StoreError> {
    if !dir.exists() {
        return Ok(DbState::default());
    }
    if dir.join(INTENT_FILE).exists() {
        finish_commit(dir)?;
    }
    // Temporaries without an intent belong to a commit that never happened.
    for item in fs::read_dir(dir)? {
        let path = item?.path();
        if path.extension().is_some_and(|e| e == "tmp") {
            fs::remove_file(path)?;
        }
    }
    if !exists(dir) {
        if fs::read_dir(dir)?.next().is_some() {
            return Err(corrupt(format!("{} has files but no {META_FILE}", dir.display())));
        }
        return Ok(DbState::default());
    }
    let meta_text = fs::read_to_string(dir.join(META_FILE))?;
    let meta: Meta = serde_json::from_str(&meta_text).map_err(|e| corrupt(format!("{META_FILE}: {e}")))?;
    if meta.database != schema.database {
        return Err(StoreError::SchemaMismatch { expected: schema.database.clone(), found: meta.database });
    }

    let mut texts = Vec::new();
    for d in &schema.dictionaries {
        let path = dir.join(dictionary_file(&d.key));
        if path.exists() {
            texts.push(fs::read_to_string(path)?);
        }
    }
    let axies = dir.join(AXIES_FILE);
    if !axies.exists() {
        return Err(corrupt(format!("missing {AXIES_FILE}")));
    }
    texts.push(fs::read_to_string(axies)?);
    let docs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let mut state = read_documents(schema, &docs, HashCheck::Ignore).map_err(|e| corrupt(e.to_string()))?;

    state.seq = meta.seq;
    for (k, v) in meta.next_entry {
        let n = state.next_entry.entry(k).or_insert(1);
        *n = (*n).max(v);
    }
    for (k, v) in meta.next_acception {
        let n = state.next_acception.entry(k).or_insert(1);
        *n = (*n).max(v);
    }
    state.next_axie = state.next_axie.max(meta.next_axie);
    state.delayed = meta.delayed;
    state.coverage = meta.coverage;
    state.log = meta.log;
    Ok(state)
}
