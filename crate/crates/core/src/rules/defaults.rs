//! The defaulter: fills absent features from `def-default` rules.

use serde::{Deserialize, Serialize};

use crate::dls::value::{get_path, set_path};
use crate::dls::FeatureValue;

use super::compile::CompiledDefault;
use super::eval::{eval_expr, ArticleView, Bindings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Return the defaulted article.
    Batch,
    /// Leave the article untouched and return proposals.
    Interactive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Proposal {
    pub rule: String,
    pub path: Vec<String>,
    pub value: FeatureValue,
}

/// Applies `defaults` in declaration order. A rule fires when its guard
/// holds and every path it assigns is absent; it never overwrites. Passes
/// repeat until nothing fires, so a rule whose guard reads a feature filled
/// by a later rule still gets its turn. Each rule fires at most once.
pub fn apply_defaults(
    article: &ArticleView,
    defaults: &[&CompiledDefault],
    mode: Mode,
) -> (ArticleView, Vec<Proposal>) {
    let mut working = article.clone();
    let mut fired = vec![false; defaults.len()];
    let mut proposals = Vec::new();
    loop {
        let mut progress = false;
        for (i, rule) in defaults.iter().enumerate() {
            if fired[i] {
                continue;
            }
            let decl = &rule.decl;
            if decl.assignments.iter().any(|(a, _)| get_path(&working.features, &a.path).is_some()) {
                continue;
            }
            let bindings: Bindings = [(decl.param.var.clone(), working.clone())].into_iter().collect();
            if !eval_expr(&decl.guard, &bindings) {
                continue;
            }
            let mut next = working.features.clone();
            if !decl.assignments.iter().all(|(a, v)| set_path(&mut next, &a.path, v.clone())) {
                continue;
            }
            working.features = next;
            fired[i] = true;
            progress = true;
            proposals.extend(decl.assignments.iter().map(|(a, v)| Proposal {
                rule: decl.name.clone(),
                path: a.path.clone(),
                value: v.clone(),
            }));
        }
        if !progress {
            break;
        }
    }
    match mode {
        Mode::Batch => (working, proposals),
        Mode::Interactive => (article.clone(), proposals),
    }
}
