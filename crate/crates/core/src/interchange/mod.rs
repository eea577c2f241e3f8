//! Canonical XML interchange format.
//!
//! Documents have a `<mldb name=".." schema-hash="..">` root holding
//! `<dictionary language="..">` sections (entries with features and a sense
//! tree of `<sense>` groups and `<acception>` leaves) and an `<axies>`
//! section. Output is canonical: alphabetical attributes, two-space
//! indentation, entries by lemma then id, axies by id, features in schema
//! declaration order. Exporting the same state twice gives identical bytes.

mod export;
mod import;
pub mod xml;

use crate::dls::Schema;
use crate::lexbase::{admit_state, DbState};
use crate::rules::RuleSet;
use crate::violation::Violation;

pub use export::{export_axies, export_bundle, export_dictionary, ExportOptions};
pub(crate) use import::{read_documents, HashCheck};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImportMode {
    /// Reject the document if it violates well-formedness or a critical rule.
    Strict,
    /// Load as-is, for inspection and repair.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterchangeError {
    #[error("{path}: {detail}")]
    Format { path: String, detail: String },
    #[error("schema mismatch: expected {expected}, found {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("import rejected: {} critical violation(s)", .0.iter().filter(|v| v.strength == crate::rules::Strength::Critical).count())]
    Rejected(Vec<Violation>),
}

/// Imports a bundle, or per-dictionary documents plus the axie document.
pub fn import_documents(
    docs: &[&str],
    schema: &Schema,
    rules: &RuleSet,
    mode: ImportMode,
) -> Result<DbState, InterchangeError> {
    let state = read_documents(schema, docs, HashCheck::Strict)?;
    match mode {
        ImportMode::Raw => Ok(state),
        ImportMode::Strict => admit_state(schema, rules, state).map_err(InterchangeError::Rejected),
    }
}

pub fn import_bundle(text: &str, schema: &Schema, rules: &RuleSet, mode: ImportMode) -> Result<DbState, InterchangeError> {
    import_documents(&[text], schema, rules, mode)
}
