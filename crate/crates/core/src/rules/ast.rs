use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dls::sexpr::Pos;
use crate::dls::FeatureValue;

/// How a failed check is handled. Ordered from mildest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strength {
    Warning,
    Delay,
    Critical,
}

impl Strength {
    pub fn as_str(self) -> &'static str {
        match self {
            Strength::Warning => "warning",
            Strength::Delay => "delay",
            Strength::Critical => "critical",
        }
    }

    pub fn parse(s: &str) -> Option<Strength> {
        match s {
            "warning" => Some(Strength::Warning),
            "delay" => Some(Strength::Delay),
            "critical" => Some(Strength::Critical),
            _ => None,
        }
    }
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Integrity,
    Local,
    Global,
}

impl RuleKind {
    pub fn form_name(self) -> &'static str {
        match self {
            RuleKind::Integrity => "def-integrity",
            RuleKind::Local => "def-local-coherence",
            RuleKind::Global => "def-global-coherence",
        }
    }
}

/// An article variable: `(acception french-acception)` optionally narrowed
/// to one dictionary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleParam {
    pub var: String,
    pub class: String,
    /// `None` means any dictionary (`*`).
    pub dictionary: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleDecl {
    pub name: String,
    pub kind: RuleKind,
    pub strength: Strength,
    pub params: Vec<RuleParam>,
    pub body: RuleExpr,
    pub pos: Pos,
}

/// Accessors that read store-level facts rather than features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SysField {
    Id,
    Entry,
    Axie,
    Lemma,
    Language,
    Features,
}

impl SysField {
    pub fn form_name(self) -> &'static str {
        match self {
            SysField::Id => "id-of",
            SysField::Entry => "entry-of",
            SysField::Axie => "axie-of",
            SysField::Lemma => "lemma-of",
            SysField::Language => "language-of",
            SysField::Features => "features-of",
        }
    }

    pub fn from_form(s: &str) -> Option<SysField> {
        Some(match s {
            "id-of" => SysField::Id,
            "entry-of" => SysField::Entry,
            "axie-of" => SysField::Axie,
            "lemma-of" => SysField::Lemma,
            "language-of" => SysField::Language,
            "features-of" => SysField::Features,
            _ => return None,
        })
    }
}

/// `(deriv-kind (drvv acception))` is `var = acception, path = [drvv, deriv-kind]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Access {
    pub var: String,
    pub sys: Option<SysField>,
    pub path: Vec<String>,
}

impl Access {
    pub fn feature(var: &str, path: &[&str]) -> Access {
        Access {
            var: var.to_string(),
            sys: None,
            path: path.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn dotted(&self) -> String {
        match self.sys {
            Some(sys) => format!("{}({})", sys.form_name(), self.var),
            None => self.path.join("."),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleExpr {
    True,
    False,
    And(Vec<RuleExpr>),
    Or(Vec<RuleExpr>),
    Not(Box<RuleExpr>),
    /// Branches are tried in order; no matching branch yields false.
    Cond(Vec<(RuleExpr, RuleExpr)>),
    Equal(Box<RuleExpr>, Box<RuleExpr>),
    IsOneOf(Box<RuleExpr>, Vec<String>),
    EmptyP(Box<RuleExpr>),
    Access(Access),
    Sym(String),
    Str(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DefaultDecl {
    pub name: String,
    pub param: RuleParam,
    pub guard: RuleExpr,
    pub assignments: Vec<(Access, FeatureValue)>,
    pub pos: Pos,
}
