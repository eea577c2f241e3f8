use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ids::{AcceptionId, AxieId, ObjectId};
use crate::rules::Strength;

/// What a violation is about. Built-in checks sort before rule names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    /// Interlingual acception with no monolingual acception and no parent.
    Wf1,
    /// Two acceptions of one language on the same interlingual acception.
    Wf2,
    /// Acception whose interlingual acception is missing.
    Wf3,
    CyclicContrastive,
    /// Sub-acception or quasi-synonym link to a missing interlingual acception.
    DanglingLink,
    /// No counterpart in a language with requested coverage.
    T2,
    EmptyLemma,
    Homograph,
    /// Feature value does not match its declared class.
    Validation,
    DuplicateName,
    Rule(String),
}

impl Code {
    pub fn as_str(&self) -> &str {
        match self {
            Code::Wf1 => "WF1",
            Code::Wf2 => "WF2",
            Code::Wf3 => "WF3",
            Code::CyclicContrastive => "CyclicContrastive",
            Code::DanglingLink => "DanglingLink",
            Code::T2 => "T2",
            Code::EmptyLemma => "EmptyLemma",
            Code::Homograph => "Homograph",
            Code::Validation => "Validation",
            Code::DuplicateName => "DuplicateName",
            Code::Rule(name) => name,
        }
    }

    pub fn parse(s: &str) -> Code {
        match s {
            "WF1" => Code::Wf1,
            "WF2" => Code::Wf2,
            "WF3" => Code::Wf3,
            "CyclicContrastive" => Code::CyclicContrastive,
            "DanglingLink" => Code::DanglingLink,
            "T2" => Code::T2,
            "EmptyLemma" => Code::EmptyLemma,
            "Homograph" => Code::Homograph,
            "Validation" => Code::Validation,
            "DuplicateName" => Code::DuplicateName,
            other => Code::Rule(other.to_string()),
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Code {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Code::parse(&String::deserialize(d)?))
    }
}

/// The default solution proposed alongside a violation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case")]
pub enum SuggestedFix {
    /// Move `acception` onto a new contrastive sub-acception of `parent`.
    CreateSubAcception { parent: AxieId, acception: AcceptionId, label: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: Code,
    pub strength: Strength,
    pub subjects: Vec<ObjectId>,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none", rename = "suggestedFix")]
    pub suggested_fix: Option<SuggestedFix>,
}

impl Violation {
    pub fn new(code: Code, strength: Strength, subjects: Vec<ObjectId>, message: impl Into<String>) -> Violation {
        Violation { code, strength, subjects, message: message.into(), suggested_fix: None }
    }

    pub fn with_fix(mut self, fix: SuggestedFix) -> Violation {
        self.suggested_fix = Some(fix);
        self
    }

    /// Identity used to compare violations across states: code and subjects.
    pub fn key(&self) -> (Code, Vec<ObjectId>) {
        (self.code.clone(), self.subjects.clone())
    }

    pub fn mentions(&self, id: &ObjectId) -> bool {
        self.subjects.contains(id)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let subjects: Vec<String> = self.subjects.iter().map(ToString::to_string).collect();
        write!(f, "{} {} [{}]: {}", self.code, self.strength, subjects.join(", "), self.message)
    }
}

/// Sorts by code, then subjects.
pub fn sort_violations(v: &mut [Violation]) {
    v.sort_by(|a, b| (&a.code, &a.subjects).cmp(&(&b.code, &b.subjects)));
}
