use crate::rules::ast::{DefaultDecl, RuleDecl};

use super::sexpr::Pos;

/// One top-level declaration of a `.dls` source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DlsDecl {
    Database(DatabaseDecl),
    Dictionary(DictionaryDecl),
    Class(ClassDecl),
    Rule(RuleDecl),
    Default(DefaultDecl),
}

impl DlsDecl {
    pub fn pos(&self) -> Pos {
        match self {
            DlsDecl::Database(d) => d.pos,
            DlsDecl::Dictionary(d) => d.pos,
            DlsDecl::Class(d) => d.pos,
            DlsDecl::Rule(d) => d.pos,
            DlsDecl::Default(d) => d.pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatabaseDecl {
    pub name: String,
    pub owner: Option<String>,
    pub comment: Option<String>,
    pub dictionaries: Vec<DictionaryDecl>,
    /// The dictionary list ended with a `...` elision marker.
    pub elided: bool,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DictionaryDecl {
    pub name: String,
    pub language: Option<String>,
    pub owner: Option<String>,
    pub comment: Option<String>,
    pub entry_class: String,
    pub acception_class: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub parents: Vec<String>,
    /// `None` for a class declared without a body.
    pub body: Option<TypeExpr>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TypeExpr {
    String,
    Symbol,
    OneOf(Vec<String>),
    AnyOf(Vec<String>),
    ClassRef(String),
    FeatureStructure(Vec<(String, TypeExpr)>),
    ListOf(Box<TypeExpr>),
    SetOf(Box<TypeExpr>),
    TreeOf(Box<TypeExpr>),
    GraphOf(Box<TypeExpr>),
    Automaton,
}

impl TypeExpr {
    pub fn empty_structure() -> TypeExpr {
        TypeExpr::FeatureStructure(Vec::new())
    }

    pub fn features(&self) -> Option<&[(String, TypeExpr)]> {
        match self {
            TypeExpr::FeatureStructure(fs) => Some(fs),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TypeExpr::String => "string",
            TypeExpr::Symbol => "symbol",
            TypeExpr::OneOf(_) => "one-of",
            TypeExpr::AnyOf(_) => "any-of",
            TypeExpr::ClassRef(_) => "class",
            TypeExpr::FeatureStructure(_) => "feature-structure",
            TypeExpr::ListOf(_) => "list-of",
            TypeExpr::SetOf(_) => "set-of",
            TypeExpr::TreeOf(_) => "tree-of",
            TypeExpr::GraphOf(_) => "graph-of",
            TypeExpr::Automaton => "automaton",
        }
    }
}
