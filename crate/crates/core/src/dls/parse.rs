//! Turns reader forms into declarations.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::rules::ast::{
    Access, DefaultDecl, RuleDecl, RuleExpr, RuleKind, RuleParam, Strength, SysField,
};

use super::ast::{ClassDecl, DatabaseDecl, DictionaryDecl, DlsDecl, TypeExpr};
use super::sexpr::{read_all, Pos, Sexp};
use super::value::{FeatureValue, TreeVal};
use super::SyntaxError;

/// Parses a `.dls` source into its top-level declarations, in order.
pub fn parse_dls(text: &str) -> Result<Vec<DlsDecl>, SyntaxError> {
    read_all(text)?.iter().map(parse_top_level).collect()
}

fn err<T>(pos: Pos, message: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError::new(pos, message))
}

fn expect_list<'a>(form: &'a Sexp, what: &str) -> Result<&'a [Sexp], SyntaxError> {
    form.as_list()
        .ok_or_else(|| SyntaxError::new(form.pos(), format!("expected {what}, found {}", form.describe())))
}

fn expect_name(form: &Sexp, what: &str) -> Result<String, SyntaxError> {
    form.as_name()
        .map(str::to_string)
        .ok_or_else(|| SyntaxError::new(form.pos(), format!("expected {what}, found {}", form.describe())))
}

fn expect_string(form: &Sexp, what: &str) -> Result<String, SyntaxError> {
    match form {
        Sexp::Str(s, _) => Ok(s.clone()),
        other => err(other.pos(), format!("expected string for {what}, found {}", other.describe())),
    }
}

fn parse_top_level(form: &Sexp) -> Result<DlsDecl, SyntaxError> {
    let items = expect_list(form, "a declaration form")?;
    let Some(head) = items.first().and_then(Sexp::as_symbol) else {
        return err(form.pos(), "declaration form must start with a symbol");
    };
    let pos = form.pos();
    match head {
        "define-database" => parse_database(items, pos).map(DlsDecl::Database),
        "define-dictionary" => parse_dictionary(items, pos).map(DlsDecl::Dictionary),
        "def-linguistic-class" => parse_class(items, pos).map(DlsDecl::Class),
        "def-integrity" => parse_rule(items, pos, RuleKind::Integrity).map(DlsDecl::Rule),
        "def-local-coherence" => parse_rule(items, pos, RuleKind::Local).map(DlsDecl::Rule),
        "def-global-coherence" => parse_rule(items, pos, RuleKind::Global).map(DlsDecl::Rule),
        "def-default" => parse_default(items, pos).map(DlsDecl::Default),
        other => err(pos, format!("unknown top-level form `{other}`")),
    }
}

type KeywordArgs<'a> = (BTreeMap<String, &'a Sexp>, Option<&'a [Sexp]>);

/// Collects `:key value` pairs. Stops at `rest_key`, returning the forms after it.
fn keyword_args<'a>(
    items: &'a [Sexp],
    allowed: &[&str],
    rest_key: Option<&str>,
) -> Result<KeywordArgs<'a>, SyntaxError> {
    let mut args = BTreeMap::new();
    let mut seen = HashSet::new();
    let mut i = 0;
    while i < items.len() {
        let Sexp::Keyword(key, kpos) = &items[i] else {
            return err(items[i].pos(), format!("expected keyword, found {}", items[i].describe()));
        };
        if !seen.insert(key.clone()) {
            return err(*kpos, format!("duplicate keyword argument :{key}"));
        }
        if rest_key == Some(key.as_str()) {
            return Ok((args, Some(&items[i + 1..])));
        }
        if !allowed.contains(&key.as_str()) {
            return err(*kpos, format!("unknown keyword argument :{key}"));
        }
        let Some(value) = items.get(i + 1) else {
            return err(*kpos, format!("keyword :{key} has no value"));
        };
        args.insert(key.clone(), value);
        i += 2;
    }
    Ok((args, None))
}

fn parse_database(items: &[Sexp], pos: Pos) -> Result<DatabaseDecl, SyntaxError> {
    let Some(name) = items.get(1) else {
        return err(pos, "define-database needs a name");
    };
    let name = expect_name(name, "database name")?;
    let (args, rest) = keyword_args(&items[2..], &["owner", "comment"], Some("dictionaries"))?;
    let owner = args.get("owner").map(|v| expect_string(v, ":owner")).transpose()?;
    let comment = args.get("comment").map(|v| expect_string(v, ":comment")).transpose()?;
    let mut dictionaries = Vec::new();
    let mut elided = false;
    for form in rest.unwrap_or_default() {
        match form {
            Sexp::Symbol(s, _) if s == "..." => elided = true,
            Sexp::List(inner, p)
                if inner.first().and_then(Sexp::as_symbol) == Some("define-dictionary") =>
            {
                if elided {
                    return err(*p, "dictionary declared after the `...` elision marker");
                }
                dictionaries.push(parse_dictionary(inner, *p)?);
            }
            other => {
                return err(other.pos(), "expected (define-dictionary ...) in :dictionaries");
            }
        }
    }
    if dictionaries.is_empty() {
        return err(pos, format!("database `{name}` declares no dictionaries"));
    }
    Ok(DatabaseDecl { name, owner, comment, dictionaries, elided, pos })
}

fn parse_dictionary(items: &[Sexp], pos: Pos) -> Result<DictionaryDecl, SyntaxError> {
    let Some(name) = items.get(1) else {
        return err(pos, "define-dictionary needs a name");
    };
    let name = expect_name(name, "dictionary name")?;
    let (args, _) = keyword_args(
        &items[2..],
        &["language", "owner", "comment", "entry", "acception"],
        None,
    )?;
    let string_arg = |key: &str| args.get(key).map(|v| expect_string(v, key)).transpose();
    let class_arg = |key: &str| -> Result<String, SyntaxError> {
        match args.get(key) {
            Some(v) => expect_name(v, "class name"),
            None => err(pos, format!("dictionary `{name}` is missing :{key}")),
        }
    };
    Ok(DictionaryDecl {
        language: string_arg("language")?,
        owner: string_arg("owner")?,
        comment: string_arg("comment")?,
        entry_class: class_arg("entry")?,
        acception_class: class_arg("acception")?,
        name,
        pos,
    })
}

fn parse_class(items: &[Sexp], pos: Pos) -> Result<ClassDecl, SyntaxError> {
    if items.len() < 3 || items.len() > 4 {
        return err(pos, "expected (def-linguistic-class name (parents...) [body])");
    }
    let name = expect_name(&items[1], "class name")?;
    let parents = expect_list(&items[2], "parent list")?
        .iter()
        .map(|p| expect_name(p, "parent class name"))
        .collect::<Result<Vec<_>, _>>()?;
    let body = items.get(3).map(parse_type).transpose()?;
    Ok(ClassDecl { name, parents, body, pos })
}

fn symbol_set(items: &[Sexp], pos: Pos, form: &str) -> Result<Vec<String>, SyntaxError> {
    if items.is_empty() {
        return err(pos, format!("{form} needs at least one symbol"));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let sym = expect_name(item, "symbol")?;
        if !seen.insert(sym.clone()) {
            return err(item.pos(), format!("duplicate symbol '{sym} in {form}"));
        }
        out.push(sym);
    }
    Ok(out)
}

pub(crate) fn parse_type(form: &Sexp) -> Result<TypeExpr, SyntaxError> {
    match form {
        Sexp::Symbol(s, _) => Ok(match s.as_str() {
            "string" => TypeExpr::String,
            "symbol" => TypeExpr::Symbol,
            "automaton" => TypeExpr::Automaton,
            other => TypeExpr::ClassRef(other.to_string()),
        }),
        Sexp::Quote(inner, _) if inner.as_symbol().is_some() => {
            Ok(TypeExpr::ClassRef(inner.as_symbol().unwrap().to_string()))
        }
        Sexp::List(items, pos) => {
            let Some(head) = items.first().and_then(Sexp::as_symbol) else {
                return err(*pos, "type expression must start with a symbol");
            };
            let args = &items[1..];
            let single = |ctor: fn(Box<TypeExpr>) -> TypeExpr| -> Result<TypeExpr, SyntaxError> {
                match args {
                    [elem] => Ok(ctor(Box::new(parse_type(elem)?))),
                    _ => err(*pos, format!("{head} takes exactly one element type")),
                }
            };
            match head {
                "one-of" => Ok(TypeExpr::OneOf(symbol_set(args, *pos, head)?)),
                "any-of" => Ok(TypeExpr::AnyOf(symbol_set(args, *pos, head)?)),
                "feature-structure" => {
                    let mut features = Vec::with_capacity(args.len());
                    for feat in args {
                        match feat.as_list() {
                            Some([name, ty]) => {
                                features.push((expect_name(name, "feature name")?, parse_type(ty)?))
                            }
                            _ => return err(feat.pos(), "expected (feature-name type)"),
                        }
                    }
                    Ok(TypeExpr::FeatureStructure(features))
                }
                "list-of" => single(TypeExpr::ListOf),
                "set-of" => single(TypeExpr::SetOf),
                "tree-of" => single(TypeExpr::TreeOf),
                "graph-of" => single(TypeExpr::GraphOf),
                other => err(*pos, format!("unknown type constructor `{other}`")),
            }
        }
        other => err(other.pos(), format!("expected a type expression, found {}", other.describe())),
    }
}

fn parse_params(form: &Sexp) -> Result<Vec<RuleParam>, SyntaxError> {
    let items = expect_list(form, "parameter list")?;
    let mut params: Vec<RuleParam> = Vec::new();
    let mut shared_dictionary = None;
    for item in items {
        let parts = expect_list(item, "(variable class [dictionary])")?;
        let names = parts
            .iter()
            .map(|p| expect_name(p, "parameter component"))
            .collect::<Result<Vec<_>, _>>()?;
        let dict = |s: &str| if s == "*" { None } else { Some(s.to_string()) };
        match names.as_slice() {
            [var, dictionary] if var == "dictionary" => {
                if shared_dictionary.is_some() {
                    return err(item.pos(), "duplicate (dictionary ...) parameter");
                }
                shared_dictionary = Some(dict(dictionary));
            }
            [var, class] => params.push(RuleParam {
                var: var.clone(),
                class: class.clone(),
                dictionary: None,
            }),
            [var, class, dictionary] => params.push(RuleParam {
                var: var.clone(),
                class: class.clone(),
                dictionary: dict(dictionary),
            }),
            _ => return err(item.pos(), "expected (variable class [dictionary])"),
        }
    }
    let mut seen = HashSet::new();
    for param in &params {
        if !seen.insert(param.var.clone()) {
            return err(form.pos(), format!("variable `{}` bound twice", param.var));
        }
    }
    if let Some(Some(shared)) = shared_dictionary {
        for p in params.iter_mut().filter(|p| p.dictionary.is_none()) {
            p.dictionary = Some(shared.clone());
        }
    }
    Ok(params)
}

fn parse_rule(items: &[Sexp], pos: Pos, kind: RuleKind) -> Result<RuleDecl, SyntaxError> {
    if items.len() != 5 {
        return err(pos, format!("expected ({} name (params...) strength body)", kind.form_name()));
    }
    let name = expect_name(&items[1], "rule name")?;
    let params = parse_params(&items[2])?;
    let strength_name = expect_name(&items[3], "rule strength")?;
    let Some(strength) = Strength::parse(&strength_name) else {
        return err(items[3].pos(), format!("unknown strength `{strength_name}` (warning, delay, critical)"));
    };
    let body = parse_expr(&items[4])?;
    Ok(RuleDecl { name, kind, strength, params, body, pos })
}

fn parse_default(items: &[Sexp], pos: Pos) -> Result<DefaultDecl, SyntaxError> {
    if items.len() < 4 {
        return err(pos, "expected (def-default name (param) guard (path value)...)");
    }
    let name = expect_name(&items[1], "default name")?;
    let mut params = parse_params(&items[2])?;
    if params.len() != 1 {
        return err(items[2].pos(), "a default rule binds exactly one article");
    }
    let param = params.remove(0);
    let guard = parse_expr(&items[3])?;
    let mut assignments = Vec::new();
    for form in &items[4..] {
        match form.as_list() {
            Some([target, value]) => {
                let RuleExpr::Access(access) = parse_expr(target)? else {
                    return err(target.pos(), "assignment target must be a feature path");
                };
                if access.sys.is_some() || access.path.is_empty() || access.var != param.var {
                    return err(target.pos(), format!("assignment target must be a feature of `{}`", param.var));
                }
                assignments.push((access, parse_literal(value)?));
            }
            _ => return err(form.pos(), "expected (path value)"),
        }
    }
    Ok(DefaultDecl { name, param, guard, assignments, pos })
}

pub(crate) fn parse_expr(form: &Sexp) -> Result<RuleExpr, SyntaxError> {
    match form {
        Sexp::Symbol(s, pos) => match s.as_str() {
            "t" => Ok(RuleExpr::True),
            "nil" => Ok(RuleExpr::False),
            other => err(*pos, format!("bare symbol `{other}`; quote constants as '{other}")),
        },
        Sexp::Quote(inner, pos) => match inner.as_symbol() {
            Some(s) => Ok(RuleExpr::Sym(s.to_string())),
            None => err(*pos, "only symbols may be quoted in rule bodies"),
        },
        Sexp::Str(s, _) => Ok(RuleExpr::Str(s.clone())),
        Sexp::Keyword(_, pos) => err(*pos, "unexpected keyword in rule body"),
        Sexp::List(items, pos) => {
            let Some(head) = items.first().and_then(Sexp::as_symbol) else {
                return err(*pos, "expression must start with an operator or feature name");
            };
            let args = &items[1..];
            let exprs = || args.iter().map(parse_expr).collect::<Result<Vec<_>, _>>();
            match head {
                "and" => Ok(RuleExpr::And(exprs()?)),
                "or" => Ok(RuleExpr::Or(exprs()?)),
                "not" => match args {
                    [x] => Ok(RuleExpr::Not(Box::new(parse_expr(x)?))),
                    _ => err(*pos, "not takes one argument"),
                },
                "equal" => match args {
                    [a, b] => Ok(RuleExpr::Equal(Box::new(parse_expr(a)?), Box::new(parse_expr(b)?))),
                    _ => err(*pos, "equal takes two arguments"),
                },
                "is-one-of" => match args.split_first() {
                    Some((subject, symbols)) => Ok(RuleExpr::IsOneOf(
                        Box::new(parse_expr(subject)?),
                        symbol_set(symbols, *pos, head)?,
                    )),
                    None => err(*pos, "is-one-of needs a subject and symbols"),
                },
                "empty-p" => match args {
                    [x] => match parse_expr(x)? {
                        RuleExpr::Access(a) => Ok(RuleExpr::EmptyP(Box::new(RuleExpr::Access(a)))),
                        _ => err(x.pos(), "empty-p takes a feature path"),
                    },
                    _ => err(*pos, "empty-p takes one argument"),
                },
                "cond" => {
                    let mut branches = Vec::with_capacity(args.len());
                    for branch in args {
                        match branch.as_list() {
                            Some([test]) => branches.push((parse_expr(test)?, RuleExpr::True)),
                            Some([test, body]) => branches.push((parse_expr(test)?, parse_expr(body)?)),
                            _ => return err(branch.pos(), "cond branch must be (test [result])"),
                        }
                    }
                    Ok(RuleExpr::Cond(branches))
                }
                feature => match args {
                    [Sexp::Symbol(var, vpos)] => {
                        if var == "t" || var == "nil" {
                            return err(*vpos, "feature access needs a variable");
                        }
                        Ok(RuleExpr::Access(Access {
                            var: var.clone(),
                            sys: SysField::from_form(feature),
                            path: if SysField::from_form(feature).is_some() {
                                Vec::new()
                            } else {
                                vec![feature.to_string()]
                            },
                        }))
                    }
                    [inner @ Sexp::List(..)] if SysField::from_form(feature).is_none() => {
                        match parse_expr(inner)? {
                            RuleExpr::Access(mut a) if a.sys.is_none() => {
                                a.path.push(feature.to_string());
                                Ok(RuleExpr::Access(a))
                            }
                            _ => err(inner.pos(), format!("`{feature}` must be applied to a variable or feature path")),
                        }
                    }
                    _ => err(*pos, format!("unknown operator `{feature}`")),
                },
            }
        }
    }
}

/// Parses a constant feature value: `'sym`, `"text"`, `(set ...)`,
/// `(list ...)`, `(fs (name value) ...)`, `(tree value child...)`.
pub(crate) fn parse_literal(form: &Sexp) -> Result<FeatureValue, SyntaxError> {
    match form {
        Sexp::Quote(inner, pos) => match inner.as_symbol() {
            Some(s) => Ok(FeatureValue::Atom(s.to_string())),
            None => err(*pos, "only symbols may be quoted"),
        },
        Sexp::Str(s, _) => Ok(FeatureValue::Text(s.clone())),
        Sexp::List(items, pos) => {
            let Some(head) = items.first().and_then(Sexp::as_symbol) else {
                return err(*pos, "value literal must start with set, list, fs or tree");
            };
            let args = &items[1..];
            match head {
                "set" => Ok(FeatureValue::Set(
                    args.iter().map(parse_literal).collect::<Result<BTreeSet<_>, _>>()?,
                )),
                "list" => Ok(FeatureValue::List(
                    args.iter().map(parse_literal).collect::<Result<Vec<_>, _>>()?,
                )),
                "fs" => {
                    let mut map = BTreeMap::new();
                    for f in args {
                        match f.as_list() {
                            Some([n, v]) => {
                                let name = expect_name(n, "feature name")?;
                                if map.insert(name.clone(), parse_literal(v)?).is_some() {
                                    return err(f.pos(), format!("duplicate feature `{name}`"));
                                }
                            }
                            _ => return err(f.pos(), "expected (feature value)"),
                        }
                    }
                    Ok(FeatureValue::Fs(map))
                }
                "tree" => parse_tree(items, *pos).map(FeatureValue::Tree),
                other => err(*pos, format!("unknown value constructor `{other}`")),
            }
        }
        other => err(other.pos(), format!("expected a value literal, found {}", other.describe())),
    }
}

fn parse_tree(items: &[Sexp], pos: Pos) -> Result<TreeVal, SyntaxError> {
    let Some(node) = items.get(1) else {
        return err(pos, "tree needs a node value");
    };
    let mut children = Vec::new();
    for child in &items[2..] {
        match child.as_list() {
            Some(inner) if inner.first().and_then(Sexp::as_symbol) == Some("tree") => {
                children.push(parse_tree(inner, child.pos())?)
            }
            _ => return err(child.pos(), "tree children must be (tree ...) forms"),
        }
    }
    Ok(TreeVal { node: Box::new(parse_literal(node)?), children })
}
