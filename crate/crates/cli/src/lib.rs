//! Command-line front end and HTTP service for the lexical database.

pub mod server;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mldb_core::interchange::InterchangeError;
use mldb_core::{load_dls, Database, Loaded, StoreError};

/// File name of the schema kept next to the stored dictionaries.
pub const SCHEMA_FILE: &str = "schema.dls";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Rendered `file:line:col: severity: message`.
    #[error("{0}")]
    Schema(String),
    /// The request was understood but cannot be carried out.
    #[error("{0}")]
    Refused(String),
    #[error("{0}")]
    Store(#[from] StoreError),
    #[error("{0}")]
    Interchange(#[from] InterchangeError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// The schema given explicitly, or the one stored in the database directory.
pub fn schema_path(db: Option<&Path>, dls: Option<&Path>) -> Result<PathBuf, CliError> {
    match (dls, db) {
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(db)) => Ok(db.join(SCHEMA_FILE)),
        (None, None) => Err(CliError::Usage("no schema: pass --dls or --db".into())),
    }
}

pub fn load_schema(path: &Path) -> Result<Loaded, CliError> {
    let text = read_file(path)?;
    load_dls(&text).map_err(|e| CliError::Schema(e.to_diagnostic().render(&path.display().to_string())))
}

pub fn open_database(db: &Path, dls: Option<&Path>) -> Result<Arc<Database>, CliError> {
    let loaded = load_schema(&schema_path(Some(db), dls)?)?;
    Ok(Arc::new(Database::open(db, loaded.schema, loaded.rules)?))
}
