//! Coherence rules (integrity, local, global) and defaulting rules.

pub mod ast;
pub mod compile;
pub mod defaults;
pub mod eval;

pub use ast::{Access, DefaultDecl, RuleDecl, RuleExpr, RuleKind, RuleParam, Strength, SysField};
pub use compile::{
    compile_all, compile_default, compile_rule, ArticleKind, CompileError, CompileErrorKind, CompiledDefault,
    CompiledRule, RuleSet, Target,
};
pub use defaults::{apply_defaults, Mode, Proposal};
pub use eval::{eval_expr, matches_target, run_all_rules, run_rules, ArticleView, Bindings};
