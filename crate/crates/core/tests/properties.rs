mod common;

use std::collections::BTreeSet;

use proptest::collection::{btree_map, btree_set, vec};
use proptest::prelude::*;

use common::*;
use mldb_core::dls::{parse_dls, print_decls, resolve_schema, ClassDecl, DlsDecl, Features, Pos, TypeExpr};
use mldb_core::lexbase::{Mutation, Ref};
use mldb_core::rules::{Access, RuleDecl, RuleExpr, RuleKind, RuleParam, Strength};
use mldb_core::AxieId;

fn name(prefix: &'static str) -> impl Strategy<Value = String> {
    "[a-zé][a-z0-9é-]{0,6}".prop_map(move |s| format!("{prefix}{s}"))
}

fn symbol() -> impl Strategy<Value = String> {
    "[a-zé][a-z0-9+é-]{0,6}"
}

fn symbols() -> impl Strategy<Value = Vec<String>> {
    btree_set(symbol(), 1..4).prop_map(|s| s.into_iter().collect())
}

fn type_expr() -> impl Strategy<Value = TypeExpr> {
    let leaf = prop_oneof![
        Just(TypeExpr::String),
        Just(TypeExpr::Symbol),
        Just(TypeExpr::Automaton),
        symbols().prop_map(TypeExpr::OneOf),
        symbols().prop_map(TypeExpr::AnyOf),
        name("c-").prop_map(TypeExpr::ClassRef),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            btree_map(name("f-"), inner.clone(), 0..4)
                .prop_map(|m| TypeExpr::FeatureStructure(m.into_iter().collect())),
            inner.clone().prop_map(|t| TypeExpr::ListOf(Box::new(t))),
            inner.clone().prop_map(|t| TypeExpr::SetOf(Box::new(t))),
            inner.clone().prop_map(|t| TypeExpr::TreeOf(Box::new(t))),
            inner.prop_map(|t| TypeExpr::GraphOf(Box::new(t))),
        ]
    })
}

fn class_decl() -> impl Strategy<Value = DlsDecl> {
    (name("c-"), vec(name("c-"), 0..2), proptest::option::of(type_expr())).prop_map(|(name, parents, body)| {
        DlsDecl::Class(ClassDecl { name, parents, body, pos: Pos::default() })
    })
}

fn access() -> impl Strategy<Value = RuleExpr> {
    (name("v"), vec(name("f"), 1..3)).prop_map(|(var, path)| RuleExpr::Access(Access { var, sys: None, path }))
}

fn rule_expr() -> impl Strategy<Value = RuleExpr> {
    let leaf = prop_oneof![
        Just(RuleExpr::True),
        Just(RuleExpr::False),
        access(),
        (access(), symbol()).prop_map(|(a, s)| RuleExpr::Equal(Box::new(a), Box::new(RuleExpr::Sym(s)))),
        (access(), "[ -~é]{0,6}").prop_map(|(a, s)| RuleExpr::Equal(Box::new(a), Box::new(RuleExpr::Str(s)))),
        (access(), symbols()).prop_map(|(a, s)| RuleExpr::IsOneOf(Box::new(a), s)),
        access().prop_map(|a| RuleExpr::EmptyP(Box::new(a))),
    ];
    leaf.prop_recursive(3, 20, 3, |inner| {
        prop_oneof![
            vec(inner.clone(), 1..3).prop_map(RuleExpr::And),
            vec(inner.clone(), 1..3).prop_map(RuleExpr::Or),
            inner.clone().prop_map(|e| RuleExpr::Not(Box::new(e))),
            vec((inner.clone(), inner), 1..3).prop_map(RuleExpr::Cond),
        ]
    })
}

fn rule_decl() -> impl Strategy<Value = DlsDecl> {
    let kind = prop_oneof![Just(RuleKind::Integrity), Just(RuleKind::Local), Just(RuleKind::Global)];
    let strength = prop_oneof![Just(Strength::Warning), Just(Strength::Delay), Just(Strength::Critical)];
    let params = btree_map(name("v"), (name("c-"), proptest::option::of(name("d-"))), 1..3).prop_map(|m| {
        m.into_iter().map(|(var, (class, dictionary))| RuleParam { var, class, dictionary }).collect::<Vec<_>>()
    });
    (name("r-"), kind, strength, params, rule_expr()).prop_map(|(name, kind, strength, params, body)| {
        DlsDecl::Rule(RuleDecl { name, kind, strength, params, body, pos: Pos::default() })
    })
}

proptest! {
    #[test]
    fn printed_declarations_parse_back(decls in vec(prop_oneof![class_decl(), rule_decl()], 1..5)) {
        let text = print_decls(&decls);
        let parsed = parse_dls(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&parsed, &decls);
        prop_assert_eq!(print_decls(&parsed), text);
    }
}

#[test]
fn sample_schema_survives_print_and_parse() {
    let decls = parse_dls(&read_fixture("parax.dls")).unwrap();
    let again = parse_dls(&print_decls(&decls)).unwrap();
    assert_eq!(again, decls);
    assert_eq!(resolve_schema(&again).unwrap().hash(), resolve_schema(&decls).unwrap().hash());
}

#[derive(Clone, Debug)]
enum QuasiOp {
    Add(usize, usize),
    Remove(usize, usize),
}

fn quasi_op() -> impl Strategy<Value = QuasiOp> {
    prop_oneof![
        (0..5usize, 0..5usize).prop_map(|(a, b)| QuasiOp::Add(a, b)),
        (0..5usize, 0..5usize).prop_map(|(a, b)| QuasiOp::Remove(a, b)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quasi_synonymy_stays_symmetric(ops in vec(quasi_op(), 1..20)) {
        let db = parax_db_without_rules();
        let mut muts = vec![Mutation::CreateEntry { language: "french".into(), lemma: "q".into(), features: Features::new() }];
        for _ in 0..5 {
            muts.push(Mutation::AddAcception { entry: Ref::New { new: 0 }, sense_path: vec![], features: Features::new(), name: None });
        }
        let txn = db.apply(muts, None).unwrap();
        let snap = db.snapshot();
        let axies: Vec<AxieId> = (1..=5)
            .map(|i| snap.acception(&txn.result(i).unwrap().parse().unwrap()).unwrap().axie)
            .collect();

        let mut model: BTreeSet<(AxieId, AxieId)> = BTreeSet::new();
        for op in ops {
            let (m, a, b, add) = match op {
                QuasiOp::Add(a, b) => (Mutation::AddQuasiSynonym { a: axies[a].into(), b: axies[b].into() }, a, b, true),
                QuasiOp::Remove(a, b) => (Mutation::RemoveQuasiSynonym { a: axies[a].into(), b: axies[b].into() }, a, b, false),
            };
            let result = db.apply(vec![m], None);
            if a == b {
                prop_assert!(result.is_err());
                continue;
            }
            prop_assert!(result.unwrap().committed());
            let pair = (axies[a].min(axies[b]), axies[a].max(axies[b]));
            if add { model.insert(pair); } else { model.remove(&pair); }
        }
        let snap = db.snapshot();
        for x in snap.axies() {
            prop_assert!(!x.quasi.contains(&x.id));
            for y in &x.quasi {
                prop_assert!(snap.axie(y).unwrap().quasi.contains(&x.id));
                prop_assert!(model.contains(&(x.id.min(*y), x.id.max(*y))));
            }
        }
        let stored: usize = snap.axies().map(|x| x.quasi.len()).sum();
        prop_assert_eq!(stored, model.len() * 2);
    }

    #[test]
    fn sense_trees_track_acceptions(ops in vec((any::<bool>(), 0..4usize, 0..4usize), 1..16)) {
        let db = parax_db_without_rules();
        let txn = db
            .apply(vec![Mutation::CreateEntry { language: "french".into(), lemma: "s".into(), features: Features::new() }], None)
            .unwrap();
        let entry: mldb_core::EntryId = txn.result(0).unwrap().parse().unwrap();
        for (add, x, y) in ops {
            let snap = db.snapshot();
            let e = snap.entry(&entry).unwrap();
            if add {
                let top = e.senses.len();
                let path = if x % 2 == 0 { vec![x.min(top)] } else { vec![x.min(top), y] };
                // Out-of-range paths are refused; either way the tree stays consistent.
                let _ = db.apply(
                    vec![Mutation::AddAcception { entry: (&entry).into(), sense_path: path, features: Features::new(), name: None }],
                    None,
                );
            } else if let Some(victim) = e.acception_ids().get(x).map(|a| (*a).clone()) {
                let txn = db.apply(vec![Mutation::DeleteAcception { acception: (&victim).into() }], None).unwrap();
                prop_assert!(txn.committed());
            }
            let snap = db.snapshot();
            let e = snap.entry(&entry).unwrap();
            let leaves: BTreeSet<String> = e.acception_ids().iter().map(|a| a.to_string()).collect();
            let owned: BTreeSet<String> =
                snap.acceptions().filter(|a| a.entry == entry).map(|a| a.id.to_string()).collect();
            prop_assert_eq!(leaves.len(), e.acception_ids().len());
            prop_assert_eq!(leaves, owned);
            prop_assert!(!has_empty_group(&e.senses));
            prop_assert!(snap.axies().count() == snap.acceptions().count());
            prop_assert!(mldb_core::lexbase::check_wellformed(&snap).is_empty());
        }
    }
}

fn has_empty_group(nodes: &[mldb_core::lexbase::SenseNode]) -> bool {
    nodes.iter().any(|n| match n {
        mldb_core::lexbase::SenseNode::Leaf(_) => false,
        mldb_core::lexbase::SenseNode::Group(c) => c.is_empty() || has_empty_group(c),
    })
}
