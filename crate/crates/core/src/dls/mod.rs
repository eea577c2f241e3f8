//! The schema language: database, dictionary and class declarations, plus
//! the rule and default forms consumed by [`crate::rules`].

pub mod ast;
pub mod parse;
pub mod print;
pub mod schema;
pub mod sexpr;
pub mod value;

use std::fmt;

pub use ast::{ClassDecl, DatabaseDecl, DictionaryDecl, DlsDecl, TypeExpr};
pub use parse::parse_dls;
pub use print::{print_decl, print_decls};
pub use schema::{resolve_schema, Class, Dictionary, ResolveError, ResolveErrorKind, Schema};
pub use sexpr::Pos;
pub use value::{
    get_path, set_path, validate_features, validate_value, AutomatonVal, Fault, FaultKind, FeatureValue, Features, GraphVal,
    TreeVal, ValidationReport,
};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> SyntaxError {
        SyntaxError { line: pos.line, column: pos.column, message: message.into() }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic {
            pos: Pos::new(self.line, self.column),
            severity: Severity::Error,
            message: self.message.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    /// `file:line:col: severity: message`
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}:{}: {}: {}", self.pos.line, self.pos.column, self.severity, self.message)
    }
}
