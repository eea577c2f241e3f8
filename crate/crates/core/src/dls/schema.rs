//! Resolution of declarations into an immutable [`Schema`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use super::ast::{ClassDecl, DictionaryDecl, DlsDecl, TypeExpr};
use super::print::print_type;
use super::sexpr::Pos;
use super::{Diagnostic, Severity};

/// Names of the classes every schema starts with.
pub const ENTRY_CLASS: &str = "entry";
pub const ACCEPTION_CLASS: &str = "acception";
/// Rule-visible view of an interlingual acception.
pub const AXIE_CLASS: &str = "axie";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dictionary {
    /// Lowercased dictionary name, used in ids and file names.
    pub key: String,
    /// Human-facing language label, e.g. `Français`.
    pub language: String,
    pub owner: Option<String>,
    pub comment: Option<String>,
    pub entry_class: String,
    pub acception_class: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Class {
    pub name: String,
    pub parent: Option<String>,
    /// Flattened body: inherited features first, then the class's own.
    pub body: TypeExpr,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    pub database: String,
    pub owner: Option<String>,
    pub comment: Option<String>,
    pub dictionaries: Vec<Dictionary>,
    classes: BTreeMap<String, Class>,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResolveErrorKind {
    NoDatabase,
    MultipleDatabases,
    DuplicateDictionary(String),
    UnknownClass(String),
    DuplicateClass(String),
    DuplicateFeature { class: String, feature: String },
    MissingPredefinedParent { class: String, expected: String },
    MultipleParents(String),
    InvalidInheritance(String),
    IllegalRecursion(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: {kind}")]
pub struct ResolveError {
    pub pos: Pos,
    pub kind: ResolveErrorKind,
}

impl fmt::Display for ResolveErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolveErrorKind::NoDatabase => write!(f, "no define-database declaration"),
            ResolveErrorKind::MultipleDatabases => write!(f, "more than one define-database declaration"),
            ResolveErrorKind::DuplicateDictionary(d) => write!(f, "dictionary `{d}` declared twice"),
            ResolveErrorKind::UnknownClass(c) => write!(f, "unknown class `{c}`"),
            ResolveErrorKind::DuplicateClass(c) => write!(f, "class `{c}` declared twice"),
            ResolveErrorKind::DuplicateFeature { class, feature } => {
                write!(f, "feature `{feature}` declared twice in class `{class}`")
            }
            ResolveErrorKind::MissingPredefinedParent { class, expected } => {
                write!(f, "class `{class}` must inherit `{expected}`")
            }
            ResolveErrorKind::MultipleParents(c) => write!(f, "class `{c}` has more than one parent"),
            ResolveErrorKind::InvalidInheritance(c) => {
                write!(f, "class `{c}` cannot combine its body with its parent's")
            }
            ResolveErrorKind::IllegalRecursion(path) => {
                write!(f, "class contains itself: {}", path.join(" -> "))
            }
        }
    }
}

impl ResolveError {
    fn at(pos: Pos, kind: ResolveErrorKind) -> ResolveError {
        ResolveError { pos, kind }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic { pos: self.pos, severity: Severity::Error, message: self.kind.to_string() }
    }
}

fn predefined() -> Vec<Class> {
    let axie = TypeExpr::FeatureStructure(vec![
        ("name".into(), TypeExpr::String),
        ("gloss".into(), TypeExpr::String),
        ("tags".into(), TypeExpr::SetOf(Box::new(TypeExpr::Symbol))),
    ]);
    [(ENTRY_CLASS, TypeExpr::empty_structure()), (ACCEPTION_CLASS, TypeExpr::empty_structure()), (AXIE_CLASS, axie)]
        .into_iter()
        .map(|(name, body)| Class { name: name.into(), parent: None, body, pos: Pos::default() })
        .collect()
}

/// Resolves parsed declarations. Rule and default declarations are ignored
/// here; see [`crate::rules::RuleSet`].
pub fn resolve_schema(decls: &[DlsDecl]) -> Result<Schema, ResolveError> {
    let databases: Vec<_> = decls
        .iter()
        .filter_map(|d| match d {
            DlsDecl::Database(db) => Some(db),
            _ => None,
        })
        .collect();
    let db = match databases.as_slice() {
        [db] => *db,
        [] => return Err(ResolveError::at(Pos::default(), ResolveErrorKind::NoDatabase)),
        [_, second, ..] => return Err(ResolveError::at(second.pos, ResolveErrorKind::MultipleDatabases)),
    };

    let mut dict_decls: Vec<&DictionaryDecl> = db.dictionaries.iter().collect();
    dict_decls.extend(decls.iter().filter_map(|d| match d {
        DlsDecl::Dictionary(dd) => Some(dd),
        _ => None,
    }));

    let mut class_decls: BTreeMap<&str, &ClassDecl> = BTreeMap::new();
    for decl in decls {
        if let DlsDecl::Class(c) = decl {
            let clash = class_decls.insert(&c.name, c).is_some()
                || [ENTRY_CLASS, ACCEPTION_CLASS, AXIE_CLASS].contains(&c.name.as_str());
            if clash {
                return Err(ResolveError::at(c.pos, ResolveErrorKind::DuplicateClass(c.name.clone())));
            }
        }
    }

    let mut resolver = Resolver { decls: &class_decls, done: BTreeMap::new() };
    for class in predefined() {
        resolver.done.insert(class.name.clone(), class);
    }
    for name in class_decls.keys() {
        resolver.flatten(name, &mut Vec::new())?;
    }
    let classes = resolver.done;

    for class in classes.values() {
        check_refs(&class.body, &classes, class)?;
    }
    check_recursion(&classes)?;

    let mut warnings = Vec::new();
    let mut dictionaries = Vec::new();
    let mut keys = BTreeSet::new();
    for dd in dict_decls {
        if !keys.insert(dd.name.clone()) {
            return Err(ResolveError::at(dd.pos, ResolveErrorKind::DuplicateDictionary(dd.name.clone())));
        }
        let mut bind = |class: &str, root: &str| -> Result<String, ResolveError> {
            if !classes.contains_key(class) {
                warnings.push(Diagnostic {
                    pos: dd.pos,
                    severity: Severity::Warning,
                    message: format!(
                        "dictionary `{}` uses undeclared class `{class}`; using the bare `{root}` class",
                        dd.name
                    ),
                });
                return Ok(root.to_string());
            }
            if !is_a(&classes, class, root) {
                return Err(ResolveError::at(
                    classes[class].pos,
                    ResolveErrorKind::MissingPredefinedParent { class: class.to_string(), expected: root.into() },
                ));
            }
            Ok(class.to_string())
        };
        let entry_class = bind(&dd.entry_class, ENTRY_CLASS)?;
        let acception_class = bind(&dd.acception_class, ACCEPTION_CLASS)?;
        dictionaries.push(Dictionary {
            key: dd.name.clone(),
            language: dd.language.clone().unwrap_or_else(|| dd.name.clone()),
            owner: dd.owner.clone(),
            comment: dd.comment.clone(),
            entry_class,
            acception_class,
        });
    }

    Ok(Schema {
        database: db.name.clone(),
        owner: db.owner.clone(),
        comment: db.comment.clone(),
        dictionaries,
        classes,
        warnings,
    })
}

struct Resolver<'a> {
    decls: &'a BTreeMap<&'a str, &'a ClassDecl>,
    done: BTreeMap<String, Class>,
}

impl Resolver<'_> {
    fn flatten(&mut self, name: &str, stack: &mut Vec<String>) -> Result<(), ResolveError> {
        if self.done.contains_key(name) {
            return Ok(());
        }
        let decl = self.decls[name];
        if stack.iter().any(|s| s == name) {
            let mut path = stack.clone();
            path.push(name.to_string());
            return Err(ResolveError::at(decl.pos, ResolveErrorKind::IllegalRecursion(path)));
        }
        let parent = match decl.parents.as_slice() {
            [] => None,
            [p] => Some(p.clone()),
            _ => return Err(ResolveError::at(decl.pos, ResolveErrorKind::MultipleParents(name.into()))),
        };
        let own = decl.body.clone();
        if let Some(own) = &own {
            check_unique_features(own, name, decl.pos)?;
        }
        let body = match &parent {
            None => own.unwrap_or_else(TypeExpr::empty_structure),
            Some(p) => {
                if !self.done.contains_key(p.as_str()) {
                    if !self.decls.contains_key(p.as_str()) {
                        return Err(ResolveError::at(decl.pos, ResolveErrorKind::UnknownClass(p.clone())));
                    }
                    stack.push(name.to_string());
                    self.flatten(p, stack)?;
                    stack.pop();
                }
                let inherited = self.done[p.as_str()].body.clone();
                match (inherited, own) {
                    (inherited, None) => inherited,
                    (TypeExpr::FeatureStructure(mut feats), Some(TypeExpr::FeatureStructure(mine))) => {
                        for (fname, fty) in mine {
                            if feats.iter().any(|(n, _)| *n == fname) {
                                return Err(ResolveError::at(
                                    decl.pos,
                                    ResolveErrorKind::DuplicateFeature { class: name.into(), feature: fname },
                                ));
                            }
                            feats.push((fname, fty));
                        }
                        TypeExpr::FeatureStructure(feats)
                    }
                    _ => return Err(ResolveError::at(decl.pos, ResolveErrorKind::InvalidInheritance(name.into()))),
                }
            }
        };
        self.done.insert(name.to_string(), Class { name: name.to_string(), parent, body, pos: decl.pos });
        Ok(())
    }
}

fn check_unique_features(ty: &TypeExpr, class: &str, pos: Pos) -> Result<(), ResolveError> {
    let mut stack = vec![ty];
    while let Some(t) = stack.pop() {
        match t {
            TypeExpr::FeatureStructure(feats) => {
                let mut seen = BTreeSet::new();
                for (n, inner) in feats {
                    if !seen.insert(n) {
                        return Err(ResolveError::at(
                            pos,
                            ResolveErrorKind::DuplicateFeature { class: class.into(), feature: n.clone() },
                        ));
                    }
                    stack.push(inner);
                }
            }
            TypeExpr::ListOf(e) | TypeExpr::SetOf(e) | TypeExpr::TreeOf(e) | TypeExpr::GraphOf(e) => stack.push(e),
            _ => {}
        }
    }
    Ok(())
}

fn check_refs(ty: &TypeExpr, classes: &BTreeMap<String, Class>, owner: &Class) -> Result<(), ResolveError> {
    match ty {
        TypeExpr::ClassRef(name) if !classes.contains_key(name) => {
            Err(ResolveError::at(owner.pos, ResolveErrorKind::UnknownClass(name.clone())))
        }
        TypeExpr::FeatureStructure(feats) => feats.iter().try_for_each(|(_, t)| check_refs(t, classes, owner)),
        TypeExpr::ListOf(e) | TypeExpr::SetOf(e) | TypeExpr::TreeOf(e) | TypeExpr::GraphOf(e) => {
            check_refs(e, classes, owner)
        }
        _ => Ok(()),
    }
}

/// Class references reached without passing through a collection type.
fn containment_refs<'a>(ty: &'a TypeExpr, out: &mut BTreeSet<&'a str>) {
    match ty {
        TypeExpr::ClassRef(name) => {
            out.insert(name);
        }
        TypeExpr::FeatureStructure(feats) => feats.iter().for_each(|(_, t)| containment_refs(t, out)),
        _ => {}
    }
}

fn check_recursion(classes: &BTreeMap<String, Class>) -> Result<(), ResolveError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        name: &'a str,
        classes: &'a BTreeMap<String, Class>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Result<(), ResolveError> {
        match marks.get(name) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = stack.iter().position(|s| *s == name).unwrap_or(0);
                let mut path: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                path.push(name.to_string());
                return Err(ResolveError::at(classes[name].pos, ResolveErrorKind::IllegalRecursion(path)));
            }
            None => {}
        }
        marks.insert(name, Mark::Active);
        stack.push(name);
        let mut refs = BTreeSet::new();
        containment_refs(&classes[name].body, &mut refs);
        for r in refs {
            visit(r, classes, marks, stack)?;
        }
        stack.pop();
        marks.insert(name, Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for name in classes.keys() {
        visit(name, classes, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

fn is_a(classes: &BTreeMap<String, Class>, class: &str, ancestor: &str) -> bool {
    let mut current = Some(class);
    while let Some(c) = current {
        if c == ancestor {
            return true;
        }
        current = classes.get(c).and_then(|k| k.parent.as_deref());
    }
    false
}

fn fold(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

impl Schema {
    pub fn class(&self, name: &str) -> Option<&Class> {
        self.classes.get(name)
    }

    pub fn classes(&self) -> impl Iterator<Item = &Class> {
        self.classes.values()
    }

    /// True when `class` is `ancestor` or inherits from it.
    pub fn is_a(&self, class: &str, ancestor: &str) -> bool {
        is_a(&self.classes, class, ancestor)
    }

    /// Finds a dictionary by key or language label, ignoring case.
    pub fn dictionary(&self, query: &str) -> Option<&Dictionary> {
        let q = fold(query);
        self.dictionaries
            .iter()
            .find(|d| d.key == q)
            .or_else(|| self.dictionaries.iter().find(|d| fold(&d.language) == q))
    }

    /// Features of a class body, or an empty slice for non-structure classes.
    pub fn features_of(&self, class: &str) -> &[(String, TypeExpr)] {
        self.class(class).and_then(|c| c.body.features()).unwrap_or(&[])
    }

    /// Follows class references until a non-reference type is reached.
    pub fn deref<'a>(&'a self, ty: &'a TypeExpr) -> &'a TypeExpr {
        let mut t = ty;
        let mut hops = 0;
        while let TypeExpr::ClassRef(name) = t {
            match self.class(name) {
                Some(c) if hops < self.classes.len() => {
                    t = &c.body;
                    hops += 1;
                }
                _ => break,
            }
        }
        t
    }

    /// Type of the feature at `path` below `class`, following references.
    pub fn type_at(&self, class: &str, path: &[String]) -> Option<&TypeExpr> {
        let mut ty = &self.class(class)?.body;
        for step in path {
            let feats = self.deref(ty).features()?;
            ty = &feats.iter().find(|(n, _)| n == step)?.1;
        }
        Some(self.deref(ty))
    }

    /// Deterministic text form of the resolved schema; the input of [`Schema::hash`].
    pub fn canonical_text(&self) -> String {
        let mut out = format!("database {}\n", self.database);
        for d in &self.dictionaries {
            out.push_str(&format!(
                "dictionary {} language={:?} entry={} acception={}\n",
                d.key, d.language, d.entry_class, d.acception_class
            ));
        }
        for c in self.classes.values() {
            out.push_str(&format!(
                "class {} parent={} {}\n",
                c.name,
                c.parent.as_deref().unwrap_or("-"),
                print_type(&c.body, 0)
            ));
        }
        out
    }

    /// Short stable hash identifying the schema in stored and exported data.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        hex::encode(&digest[..8])
    }
}
