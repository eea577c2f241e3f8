//! Type-checking of rule and default declarations against a resolved schema.

use std::collections::BTreeSet;
use std::fmt;

use crate::dls::schema::{ACCEPTION_CLASS, AXIE_CLASS, ENTRY_CLASS};
use crate::dls::{validate_features, Diagnostic, DlsDecl, Features, Pos, Schema, Severity, TypeExpr};
use crate::dls::value::set_path;

use super::ast::{Access, DefaultDecl, RuleDecl, RuleExpr, RuleKind, RuleParam};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArticleKind {
    Entry,
    Acception,
    Axie,
}

/// A rule parameter resolved against the schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Target {
    pub var: String,
    pub kind: ArticleKind,
    pub class: String,
    /// Dictionary key, if the parameter is narrowed to one dictionary.
    pub dictionary: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledRule {
    pub decl: RuleDecl,
    pub targets: Vec<Target>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledDefault {
    pub decl: DefaultDecl,
    pub target: Target,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    pub rules: Vec<CompiledRule>,
    pub defaults: Vec<CompiledDefault>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompileErrorKind {
    UnknownPath { var: String, path: String },
    UnknownClass(String),
    UnknownDictionary(String),
    UnknownVariable(String),
    KindViolation(String),
    UnknownSymbol { path: String, symbol: String },
    BadDefaultValue { path: String, detail: String },
    DuplicateName(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{pos}: rule `{rule}`: {kind}")]
pub struct CompileError {
    pub pos: Pos,
    pub rule: String,
    pub kind: CompileErrorKind,
}

impl fmt::Display for CompileErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompileErrorKind::UnknownPath { var, path } => write!(f, "no feature `{path}` on `{var}`"),
            CompileErrorKind::UnknownClass(c) => write!(f, "unknown class `{c}`"),
            CompileErrorKind::UnknownDictionary(d) => write!(f, "unknown dictionary `{d}`"),
            CompileErrorKind::UnknownVariable(v) => write!(f, "unbound variable `{v}`"),
            CompileErrorKind::KindViolation(detail) => f.write_str(detail),
            CompileErrorKind::UnknownSymbol { path, symbol } => {
                write!(f, "`{symbol}` is not in the domain of `{path}`")
            }
            CompileErrorKind::BadDefaultValue { path, detail } => write!(f, "default for `{path}`: {detail}"),
            CompileErrorKind::DuplicateName(n) => write!(f, "`{n}` is declared twice"),
        }
    }
}

impl CompileError {
    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic {
            pos: self.pos,
            severity: Severity::Error,
            message: format!("rule `{}`: {}", self.rule, self.kind),
        }
    }
}

struct Ctx<'a> {
    schema: &'a Schema,
    rule: &'a str,
    pos: Pos,
    targets: &'a [Target],
}

impl Ctx<'_> {
    fn fail<T>(&self, kind: CompileErrorKind) -> Result<T, CompileError> {
        Err(CompileError { pos: self.pos, rule: self.rule.to_string(), kind })
    }

    fn target(&self, var: &str) -> Result<&Target, CompileError> {
        match self.targets.iter().find(|t| t.var == var) {
            Some(t) => Ok(t),
            None => self.fail(CompileErrorKind::UnknownVariable(var.to_string())),
        }
    }

    /// Declared type of a feature access; `None` for store-level fields.
    fn access_type(&self, access: &Access) -> Result<Option<&TypeExpr>, CompileError> {
        let target = self.target(&access.var)?;
        if access.sys.is_some() {
            return Ok(None);
        }
        match self.schema.type_at(&target.class, &access.path) {
            Some(ty) => Ok(Some(ty)),
            None => self.fail(CompileErrorKind::UnknownPath {
                var: access.var.clone(),
                path: access.path.join("."),
            }),
        }
    }

    fn check_symbols<'s>(&self, subject: &RuleExpr, symbols: impl IntoIterator<Item = &'s String>) -> Result<(), CompileError> {
        let RuleExpr::Access(access) = subject else { return Ok(()) };
        let domain = match self.access_type(access)? {
            Some(TypeExpr::OneOf(d) | TypeExpr::AnyOf(d)) => d,
            _ => return Ok(()),
        };
        for s in symbols {
            if !domain.contains(s) {
                return self.fail(CompileErrorKind::UnknownSymbol { path: access.path.join("."), symbol: s.clone() });
            }
        }
        Ok(())
    }

    fn check(&self, e: &RuleExpr) -> Result<(), CompileError> {
        match e {
            RuleExpr::True | RuleExpr::False | RuleExpr::Sym(_) | RuleExpr::Str(_) => Ok(()),
            RuleExpr::And(xs) | RuleExpr::Or(xs) => xs.iter().try_for_each(|x| self.check(x)),
            RuleExpr::Not(x) | RuleExpr::EmptyP(x) => self.check(x),
            RuleExpr::Cond(branches) => branches.iter().try_for_each(|(t, b)| {
                self.check(t)?;
                self.check(b)
            }),
            RuleExpr::Equal(a, b) => {
                self.check(a)?;
                self.check(b)?;
                match (&**a, &**b) {
                    (subject, RuleExpr::Sym(s)) | (RuleExpr::Sym(s), subject) => self.check_symbols(subject, [s]),
                    _ => Ok(()),
                }
            }
            RuleExpr::IsOneOf(subject, symbols) => {
                self.check(subject)?;
                self.check_symbols(subject, symbols)
            }
            RuleExpr::Access(access) => self.access_type(access).map(|_| ()),
        }
    }
}

fn resolve_target(schema: &Schema, rule: &str, pos: Pos, p: &RuleParam) -> Result<Target, CompileError> {
    let fail = |kind| Err(CompileError { pos, rule: rule.to_string(), kind });
    if schema.class(&p.class).is_none() {
        return fail(CompileErrorKind::UnknownClass(p.class.clone()));
    }
    let kind = if schema.is_a(&p.class, ENTRY_CLASS) {
        ArticleKind::Entry
    } else if schema.is_a(&p.class, ACCEPTION_CLASS) {
        ArticleKind::Acception
    } else if p.class == AXIE_CLASS {
        ArticleKind::Axie
    } else {
        return fail(CompileErrorKind::KindViolation(format!(
            "parameter `{}` has class `{}`, which is not an entry, acception or axie class",
            p.var, p.class
        )));
    };
    let dictionary = match &p.dictionary {
        None => None,
        Some(_) if kind == ArticleKind::Axie => {
            return fail(CompileErrorKind::KindViolation(format!(
                "axie parameter `{}` cannot be narrowed to a dictionary",
                p.var
            )))
        }
        Some(d) => match schema.dictionary(d) {
            Some(dict) => Some(dict.key.clone()),
            None => return fail(CompileErrorKind::UnknownDictionary(d.clone())),
        },
    };
    Ok(Target { var: p.var.clone(), kind, class: p.class.clone(), dictionary })
}

pub fn compile_rule(decl: &RuleDecl, schema: &Schema) -> Result<CompiledRule, CompileError> {
    let fail = |kind| Err(CompileError { pos: decl.pos, rule: decl.name.clone(), kind });
    let targets = decl
        .params
        .iter()
        .map(|p| resolve_target(schema, &decl.name, decl.pos, p))
        .collect::<Result<Vec<_>, _>>()?;

    match decl.kind {
        RuleKind::Integrity if targets.len() != 1 => {
            return fail(CompileErrorKind::KindViolation(format!(
                "an integrity rule binds exactly one article, found {}",
                targets.len()
            )))
        }
        RuleKind::Integrity if targets[0].kind == ArticleKind::Axie => {
            return fail(CompileErrorKind::KindViolation(
                "an integrity rule applies to an article of a dictionary".into(),
            ))
        }
        RuleKind::Local => {
            if targets.is_empty() {
                return fail(CompileErrorKind::KindViolation("a local rule binds at least one article".into()));
            }
            if targets.iter().any(|t| t.kind == ArticleKind::Axie) {
                return fail(CompileErrorKind::KindViolation(
                    "a local rule binds articles of one dictionary, not axies".into(),
                ));
            }
            let dicts: BTreeSet<&String> = targets.iter().filter_map(|t| t.dictionary.as_ref()).collect();
            if dicts.len() > 1 {
                return fail(CompileErrorKind::KindViolation(
                    "a local rule binds articles of one dictionary only".into(),
                ));
            }
        }
        RuleKind::Global if targets.is_empty() => {
            return fail(CompileErrorKind::KindViolation("a global rule binds at least one article".into()))
        }
        _ => {}
    }

    let ctx = Ctx { schema, rule: &decl.name, pos: decl.pos, targets: &targets };
    ctx.check(&decl.body)?;
    Ok(CompiledRule { decl: decl.clone(), targets })
}

pub fn compile_default(decl: &DefaultDecl, schema: &Schema) -> Result<CompiledDefault, CompileError> {
    let target = resolve_target(schema, &decl.name, decl.pos, &decl.param)?;
    let targets = [target];
    let ctx = Ctx { schema, rule: &decl.name, pos: decl.pos, targets: &targets };
    ctx.check(&decl.guard)?;
    for (access, value) in &decl.assignments {
        ctx.access_type(access)?;
        let path = access.path.join(".");
        let mut probe = Features::new();
        if !set_path(&mut probe, &access.path, value.clone()) {
            return ctx.fail(CompileErrorKind::BadDefaultValue { path, detail: "path not assignable".into() });
        }
        let report = validate_features(&probe, &targets[0].class, schema).map_err(|e| CompileError {
            pos: decl.pos,
            rule: decl.name.clone(),
            kind: CompileErrorKind::UnknownClass(e.kind.to_string()),
        })?;
        if let Some(fault) = report.faults.first() {
            return ctx.fail(CompileErrorKind::BadDefaultValue { path, detail: fault.to_string() });
        }
    }
    let [target] = targets;
    Ok(CompiledDefault { decl: decl.clone(), target })
}

/// Compiles every rule and default declaration in `decls`, in order.
pub fn compile_all(decls: &[DlsDecl], schema: &Schema) -> Result<RuleSet, CompileError> {
    let mut set = RuleSet::default();
    let mut names = BTreeSet::new();
    for decl in decls {
        let (name, pos) = match decl {
            DlsDecl::Rule(r) => (&r.name, r.pos),
            DlsDecl::Default(d) => (&d.name, d.pos),
            _ => continue,
        };
        if !names.insert(name.clone()) {
            return Err(CompileError { pos, rule: name.clone(), kind: CompileErrorKind::DuplicateName(name.clone()) });
        }
        match decl {
            DlsDecl::Rule(r) => set.rules.push(compile_rule(r, schema)?),
            DlsDecl::Default(d) => set.defaults.push(compile_default(d, schema)?),
            _ => {}
        }
    }
    Ok(set)
}

impl RuleSet {
    pub fn rule(&self, name: &str) -> Option<&CompiledRule> {
        self.rules.iter().find(|r| r.decl.name == name)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.defaults.is_empty()
    }
}
