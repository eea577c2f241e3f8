//! Opaque, monotonically allocated identifiers.
//!
//! Text forms are `<lang>:entry:<n>`, `<lang>:acc:<n>` and `axie:<n>`.
//! Ordering is numeric within a language, so `axie:9 < axie:10`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntryId {
    pub lang: String,
    pub n: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AcceptionId {
    pub lang: String,
    pub n: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AxieId(pub u64);

/// Any addressable article. Orders entries before acceptions before axies.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectId {
    Entry(EntryId),
    Acception(AcceptionId),
    Axie(AxieId),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("malformed id `{0}`")]
pub struct IdError(pub String);

impl fmt::Display for EntryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:entry:{}", self.lang, self.n)
    }
}

impl fmt::Display for AcceptionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:acc:{}", self.lang, self.n)
    }
}

impl fmt::Display for AxieId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "axie:{}", self.0)
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectId::Entry(id) => id.fmt(f),
            ObjectId::Acception(id) => id.fmt(f),
            ObjectId::Axie(id) => id.fmt(f),
        }
    }
}

fn split_lang<'a>(s: &'a str, tag: &str) -> Option<(&'a str, u64)> {
    let (head, n) = s.rsplit_once(':')?;
    let lang = head.strip_suffix(tag)?.strip_suffix(':')?;
    if lang.is_empty() || lang.contains(':') {
        return None;
    }
    Some((lang, n.parse().ok()?))
}

impl FromStr for EntryId {
    type Err = IdError;
    fn from_str(s: &str) -> Result<Self, IdError> {
        split_lang(s, "entry")
            .map(|(lang, n)| EntryId { lang: lang.to_string(), n })
            .ok_or_else(|| IdError(s.to_string()))
    }
}

impl FromStr for AcceptionId {
    type Err = IdError;
    fn from_str(s: &str) -> Result<Self, IdError> {
        split_lang(s, "acc")
            .map(|(lang, n)| AcceptionId { lang: lang.to_string(), n })
            .ok_or_else(|| IdError(s.to_string()))
    }
}

impl FromStr for AxieId {
    type Err = IdError;
    fn from_str(s: &str) -> Result<Self, IdError> {
        s.strip_prefix("axie:")
            .and_then(|n| n.parse().ok())
            .map(AxieId)
            .ok_or_else(|| IdError(s.to_string()))
    }
}

impl FromStr for ObjectId {
    type Err = IdError;
    fn from_str(s: &str) -> Result<Self, IdError> {
        if let Ok(id) = s.parse() {
            return Ok(ObjectId::Axie(id));
        }
        if let Ok(id) = s.parse() {
            return Ok(ObjectId::Entry(id));
        }
        s.parse().map(ObjectId::Acception)
    }
}

macro_rules! string_serde {
    ($($t:ty),*) => {$(
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

string_serde!(EntryId, AcceptionId, AxieId, ObjectId);

impl From<EntryId> for ObjectId {
    fn from(id: EntryId) -> Self {
        ObjectId::Entry(id)
    }
}

impl From<AcceptionId> for ObjectId {
    fn from(id: AcceptionId) -> Self {
        ObjectId::Acception(id)
    }
}

impl From<AxieId> for ObjectId {
    fn from(id: AxieId) -> Self {
        ObjectId::Axie(id)
    }
}
