//! Acception-based multilingual lexical database.
//!
//! Dictionaries of entries whose word senses (monolingual acceptions) point
//! at language-neutral interlingual acceptions ("axies"). Schemas are
//! declared in a small s-expression language ([`dls`]), coherence and
//! defaulting rules are compiled by [`rules`], the transactional store and
//! its queries live in [`lexbase`], and [`interchange`] reads and writes
//! the canonical XML format.

pub mod dls;
pub mod ids;
pub mod interchange;
pub mod lexbase;
pub mod rules;
pub mod violation;

use std::sync::Arc;

pub use ids::{AcceptionId, AxieId, EntryId, ObjectId};
pub use lexbase::{Database, StoreError};
pub use violation::{Code, SuggestedFix, Violation};

/// A resolved schema with its compiled rules.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub schema: Arc<dls::Schema>,
    pub rules: Arc<rules::RuleSet>,
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{0}")]
    Syntax(#[from] dls::SyntaxError),
    #[error("{0}")]
    Resolve(#[from] dls::ResolveError),
    #[error("{0}")]
    Compile(#[from] rules::CompileError),
}

impl LoadError {
    pub fn to_diagnostic(&self) -> dls::Diagnostic {
        match self {
            LoadError::Syntax(e) => e.to_diagnostic(),
            LoadError::Resolve(e) => e.to_diagnostic(),
            LoadError::Compile(e) => e.to_diagnostic(),
        }
    }
}

/// Parses, resolves and compiles a DLS source text.
pub fn load_dls(text: &str) -> Result<Loaded, LoadError> {
    let decls = dls::parse_dls(text)?;
    let schema = dls::resolve_schema(&decls)?;
    let rules = rules::compile_all(&decls, &schema)?;
    Ok(Loaded { schema: Arc::new(schema), rules: Arc::new(rules) })
}
