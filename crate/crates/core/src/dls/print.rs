//! Canonical printing of declarations. Printing then re-parsing yields
//! structurally equal declarations.

use crate::rules::ast::{Access, DefaultDecl, RuleDecl, RuleExpr, RuleParam};

use super::ast::{ClassDecl, DatabaseDecl, DictionaryDecl, DlsDecl, TypeExpr};
use super::sexpr::quote_string;
use super::value::{FeatureValue, TreeVal};

pub fn print_decls(decls: &[DlsDecl]) -> String {
    let mut out = String::new();
    for d in decls {
        out.push_str(&print_decl(d));
        out.push_str("\n\n");
    }
    out
}

pub fn print_decl(decl: &DlsDecl) -> String {
    match decl {
        DlsDecl::Database(d) => print_database(d),
        DlsDecl::Dictionary(d) => print_dictionary(d),
        DlsDecl::Class(c) => print_class(c),
        DlsDecl::Rule(r) => print_rule(r),
        DlsDecl::Default(d) => print_default(d),
    }
}

fn print_database(d: &DatabaseDecl) -> String {
    let mut out = format!("(define-database {}", d.name);
    if let Some(owner) = &d.owner {
        out.push_str(&format!("\n  :owner {}", quote_string(owner)));
    }
    if let Some(comment) = &d.comment {
        out.push_str(&format!("\n  :comment {}", quote_string(comment)));
    }
    out.push_str("\n  :dictionaries");
    for dict in &d.dictionaries {
        out.push_str("\n  ");
        out.push_str(&print_dictionary(dict).replace('\n', "\n  "));
    }
    if d.elided {
        out.push_str("\n  ...");
    }
    out.push(')');
    out
}

fn print_dictionary(d: &DictionaryDecl) -> String {
    let mut out = format!("(define-dictionary {}", d.name);
    for (key, value) in [("language", &d.language), ("owner", &d.owner), ("comment", &d.comment)] {
        if let Some(v) = value {
            out.push_str(&format!("\n  :{key} {}", quote_string(v)));
        }
    }
    out.push_str(&format!("\n  :entry '{}\n  :acception '{})", d.entry_class, d.acception_class));
    out
}

fn print_class(c: &ClassDecl) -> String {
    let mut out = format!("(def-linguistic-class {} ({})", c.name, c.parents.join(" "));
    if let Some(body) = &c.body {
        out.push_str("\n  ");
        out.push_str(&print_type(body, 1));
    }
    out.push(')');
    out
}

fn symbols(syms: &[String]) -> String {
    syms.iter().map(|s| format!("'{s}")).collect::<Vec<_>>().join(" ")
}

/// Prints a type expression; `indent` is the nesting level of the first line.
pub fn print_type(ty: &TypeExpr, indent: usize) -> String {
    match ty {
        TypeExpr::String => "string".into(),
        TypeExpr::Symbol => "symbol".into(),
        TypeExpr::Automaton => "automaton".into(),
        TypeExpr::ClassRef(name) => name.clone(),
        TypeExpr::OneOf(s) => format!("(one-of {})", symbols(s)),
        TypeExpr::AnyOf(s) => format!("(any-of {})", symbols(s)),
        TypeExpr::ListOf(e) => format!("(list-of {})", print_type(e, indent)),
        TypeExpr::SetOf(e) => format!("(set-of {})", print_type(e, indent)),
        TypeExpr::TreeOf(e) => format!("(tree-of {})", print_type(e, indent)),
        TypeExpr::GraphOf(e) => format!("(graph-of {})", print_type(e, indent)),
        TypeExpr::FeatureStructure(feats) => {
            let pad = "  ".repeat(indent + 1);
            let mut out = String::from("(feature-structure");
            for (name, t) in feats {
                out.push_str(&format!("\n{pad}({name} {})", print_type(t, indent + 1)));
            }
            out.push(')');
            out
        }
    }
}

fn print_params(params: &[RuleParam]) -> String {
    let items: Vec<String> = params
        .iter()
        .map(|p| match &p.dictionary {
            Some(d) => format!("({} {} {})", p.var, p.class, d),
            None => format!("({} {})", p.var, p.class),
        })
        .collect();
    format!("({})", items.join(" "))
}

fn print_rule(r: &RuleDecl) -> String {
    format!(
        "({} {}\n  {}\n  {}\n  {})",
        r.kind.form_name(),
        r.name,
        print_params(&r.params),
        r.strength,
        print_expr(&r.body)
    )
}

fn print_default(d: &DefaultDecl) -> String {
    let mut out = format!(
        "(def-default {}\n  {}\n  {}",
        d.name,
        print_params(std::slice::from_ref(&d.param)),
        print_expr(&d.guard)
    );
    for (access, value) in &d.assignments {
        out.push_str(&format!("\n  ({} {})", print_access(access), print_literal(value)));
    }
    out.push(')');
    out
}

fn print_access(a: &Access) -> String {
    if let Some(sys) = a.sys {
        return format!("({} {})", sys.form_name(), a.var);
    }
    let mut out = a.var.clone();
    for step in &a.path {
        out = format!("({step} {out})");
    }
    out
}

pub fn print_expr(e: &RuleExpr) -> String {
    let list = |head: &str, items: &[RuleExpr]| {
        let mut parts = vec![head.to_string()];
        parts.extend(items.iter().map(print_expr));
        format!("({})", parts.join(" "))
    };
    match e {
        RuleExpr::True => "t".into(),
        RuleExpr::False => "nil".into(),
        RuleExpr::And(xs) => list("and", xs),
        RuleExpr::Or(xs) => list("or", xs),
        RuleExpr::Not(x) => format!("(not {})", print_expr(x)),
        RuleExpr::Equal(a, b) => format!("(equal {} {})", print_expr(a), print_expr(b)),
        RuleExpr::IsOneOf(x, syms) => format!("(is-one-of {} {})", print_expr(x), symbols(syms)),
        RuleExpr::EmptyP(x) => format!("(empty-p {})", print_expr(x)),
        RuleExpr::Cond(branches) => {
            let parts: Vec<String> = branches
                .iter()
                .map(|(t, b)| format!("({} {})", print_expr(t), print_expr(b)))
                .collect();
            format!("(cond {})", parts.join(" "))
        }
        RuleExpr::Access(a) => print_access(a),
        RuleExpr::Sym(s) => format!("'{s}"),
        RuleExpr::Str(s) => quote_string(s),
    }
}

/// Prints a value in the literal syntax accepted by `def-default`.
/// Graphs and automata have no literal form and print as `nil`.
pub fn print_literal(v: &FeatureValue) -> String {
    match v {
        FeatureValue::Atom(s) => format!("'{s}"),
        FeatureValue::Text(s) => quote_string(s),
        FeatureValue::Set(items) => wrap("set", items.iter().map(print_literal)),
        FeatureValue::List(items) => wrap("list", items.iter().map(print_literal)),
        FeatureValue::Fs(map) => wrap("fs", map.iter().map(|(k, v)| format!("({k} {})", print_literal(v)))),
        FeatureValue::Tree(t) => print_tree(t),
        FeatureValue::Graph(_) | FeatureValue::Automaton(_) => "nil".into(),
    }
}

fn wrap(head: &str, parts: impl Iterator<Item = String>) -> String {
    let mut out = format!("({head}");
    for p in parts {
        out.push(' ');
        out.push_str(&p);
    }
    out.push(')');
    out
}

fn print_tree(t: &TreeVal) -> String {
    let mut out = format!("(tree {}", print_literal(&t.node));
    for c in &t.children {
        out.push(' ');
        out.push_str(&print_tree(c));
    }
    out.push(')');
    out
}
