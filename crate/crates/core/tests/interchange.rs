mod common;

use std::sync::Arc;

use common::*;
use mldb_core::dls::{AutomatonVal, FeatureValue, Features, GraphVal, TreeVal};
use mldb_core::interchange::{
    export_axies, export_bundle, export_dictionary, import_bundle, import_documents, ExportOptions, ImportMode,
    InterchangeError,
};
use mldb_core::lexbase::{features, Mutation, Ref};
use mldb_core::rules::RuleSet;
use mldb_core::{load_dls, Code, Database};

#[test]
fn per_file_documents_round_trip() {
    let db = parax_db();
    build_fig3(&db);
    let snap = db.snapshot();
    let schema = db.schema();
    let opts = ExportOptions::default();
    let mut docs: Vec<String> =
        schema.dictionaries.iter().map(|d| export_dictionary(&snap, schema, &d.key, opts)).collect();
    docs.push(export_axies(&snap, schema, opts));
    let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
    let state = import_documents(&refs, schema, db.rules(), ImportMode::Strict).unwrap();
    assert_eq!(export_bundle(&state, schema, opts), export_bundle(&snap, schema, opts));
}

#[test]
fn exporting_twice_gives_identical_bytes() {
    let db = parax_db();
    build_fig3(&db);
    let a = export_bundle(&db.snapshot(), db.schema(), ExportOptions::default());
    let b = export_bundle(&db.snapshot(), db.schema(), ExportOptions::default());
    assert_eq!(a, b);
}

#[test]
fn unknown_feature_is_a_format_error_with_a_path() {
    let l = parax();
    let text = read_fixture("parax-fig3.mldb.xml").replacen("<f n=\"category\">", "<f n=\"colour\">", 1);
    let Err(InterchangeError::Format { path, detail }) = import_bundle(&text, &l.schema, &l.rules, ImportMode::Raw)
    else {
        panic!("accepted an undeclared feature");
    };
    assert!(path.contains("dictionary[@language=\"french\"]"), "{path}");
    assert!(path.contains("f[@n=\"colour\"]"), "{path}");
    assert!(detail.contains("colour"), "{detail}");
}

#[test]
fn malformed_xml_is_a_format_error() {
    let l = parax();
    let err = import_bundle("<mldb name=\"parax\"", &l.schema, &l.rules, ImportMode::Raw).unwrap_err();
    assert!(matches!(err, InterchangeError::Format { .. }));
}

#[test]
fn foreign_schema_hash_is_refused() {
    let l = parax();
    let text = read_fixture("parax-fig3.mldb.xml");
    let hash = l.schema.hash();
    let text = text.replacen(&format!("schema-hash=\"{hash}\""), "schema-hash=\"0000000000000000\"", 1);
    let err = import_bundle(&text, &l.schema, &l.rules, ImportMode::Raw).unwrap_err();
    assert!(matches!(err, InterchangeError::SchemaMismatch { .. }), "{err}");
}

#[test]
fn dangling_axie_reference_strict_versus_raw() {
    let l = parax();
    let text = read_fixture("parax-fig3.mldb.xml").replacen(
        "<acception axie=\"axie:2\" id=\"french:acc:2\"",
        "<acception axie=\"axie:77\" id=\"french:acc:2\"",
        1,
    );
    match import_bundle(&text, &l.schema, &l.rules, ImportMode::Strict) {
        Err(InterchangeError::Rejected(v)) => {
            assert!(v.iter().any(|v| v.code == Code::Wf3 && v.subjects == vec!["french:acc:2".parse::<mldb_core::AcceptionId>().unwrap().into()]));
            // The axie it used to point at is now an orphan.
            assert!(v.iter().any(|v| v.code == Code::Wf1));
        }
        other => panic!("strict import gave {other:?}"),
    }
    let raw = import_bundle(&text, &l.schema, &l.rules, ImportMode::Raw).unwrap();
    let found = mldb_core::lexbase::check_wellformed(&raw);
    let codes: Vec<&Code> = found.iter().map(|v| &v.code).collect();
    assert_eq!(codes, [&Code::Wf1, &Code::Wf3]);
}

#[test]
fn critical_rule_failures_reject_strict_import() {
    let l = parax();
    let text = read_fixture("parax-fig3.mldb.xml").replacen(
        "<f n=\"cat\">vb</f>\n      </acception>",
        "<f n=\"cat\">vb</f>\n        <fs n=\"drvn\">\n          <f n=\"deriv-kind\">ncond</f>\n        </fs>\n      </acception>",
        1,
    );
    assert_ne!(text, read_fixture("parax-fig3.mldb.xml"));
    let Err(InterchangeError::Rejected(v)) = import_bundle(&text, &l.schema, &l.rules, ImportMode::Strict) else {
        panic!("rule failure admitted");
    };
    assert!(v.iter().any(|v| v.code == Code::Rule("drv-cat-coherence".into())));
    assert!(import_bundle(&text, &l.schema, &l.rules, ImportMode::Raw).is_ok());
}

#[test]
fn provisional_axies_are_dropped_on_import() {
    let delay = "
(def-integrity no-np
  ((a german-acception german))
  delay
  (not (equal (cat a) 'np)))
";
    let l = load_dls(&(read_fixture("parax.dls") + delay)).unwrap();
    let db = Database::in_memory(l.schema.clone(), l.rules.clone());
    let txn = db
        .apply(
            vec![
                Mutation::CreateEntry { language: "german".into(), lemma: "Berlin".into(), features: Features::new() },
                Mutation::AddAcception {
                    entry: Ref::New { new: 0 },
                    sense_path: vec![],
                    features: features([("cat", atom("np"))]),
                    name: None,
                },
            ],
            None,
        )
        .unwrap();
    assert!(txn.committed());
    let text = export_bundle(&db.snapshot(), &l.schema, ExportOptions::default());
    assert!(!text.contains("lemma=\"Berlin\""));
    assert!(text.contains("provisional=\"true\""));
    let state = import_bundle(&text, &l.schema, &l.rules, ImportMode::Strict).unwrap();
    assert_eq!(state.axies().count(), 0);
    assert_eq!(state.entries().count(), 0);
}

const RICH: &str = r#"
(define-database Rich
  :dictionaries
  (define-dictionary Test :language "Test" :entry 'test-entry :acception 'test-acception))

(def-linguistic-class test-entry (entry)
  (feature-structure
    (note string)
    (forms (list-of string))
    (tags (set-of (one-of 'a 'b 'c)))
    (marks (any-of 'x 'y 'z))
    (parse (tree-of symbol))
    (net (graph-of string))
    (fsa automaton)
    (inner (feature-structure (depth symbol) (label string)))))

(def-linguistic-class test-acception (acception)
  (feature-structure (sym symbol)))
"#;

#[test]
fn every_value_kind_round_trips() {
    let l = load_dls(RICH).unwrap();
    let db = Database::in_memory(l.schema.clone(), Arc::new(RuleSet::default()));
    let leaf = |s: &str| TreeVal { node: Box::new(atom(s)), children: vec![] };
    let value_features = features([
        ("note", FeatureValue::text("a < b & \"c\"")),
        ("forms", FeatureValue::List(vec![FeatureValue::text("un"), FeatureValue::text("deux")])),
        ("tags", FeatureValue::atoms(["a", "c"])),
        ("marks", FeatureValue::atoms(["y"])),
        (
            "parse",
            FeatureValue::Tree(TreeVal { node: Box::new(atom("s")), children: vec![leaf("np"), leaf("vp")] }),
        ),
        (
            "net",
            FeatureValue::Graph(GraphVal {
                nodes: [("n1".to_string(), FeatureValue::text("one")), ("n2".to_string(), FeatureValue::text("two"))]
                    .into(),
                edges: [("n1".to_string(), "n2".to_string(), "next".to_string())].into(),
            }),
        ),
        (
            "fsa",
            FeatureValue::Automaton(AutomatonVal {
                states: ["q0".to_string(), "q1".to_string()].into(),
                alphabet: ["a".to_string(), "b".to_string()].into(),
                transitions: [("q0".to_string(), "a".to_string(), "q1".to_string())].into(),
                start: "q0".into(),
                finals: ["q1".to_string()].into(),
            }),
        ),
        ("inner", FeatureValue::Fs(features([("depth", atom("deep")), ("label", FeatureValue::text("x"))]))),
    ]);
    let txn = db
        .apply(
            vec![
                Mutation::CreateEntry { language: "test".into(), lemma: "rich".into(), features: value_features.clone() },
                Mutation::AddAcception {
                    entry: Ref::New { new: 0 },
                    sense_path: vec![],
                    features: features([("sym", atom("s"))]),
                    name: None,
                },
            ],
            None,
        )
        .unwrap();
    assert!(txn.committed(), "{:?}", txn.violations);
    let text = export_bundle(&db.snapshot(), &l.schema, ExportOptions::default());
    let state = import_bundle(&text, &l.schema, db.rules(), ImportMode::Strict).unwrap();
    let entry = state.entries().next().unwrap();
    assert_eq!(entry.features, value_features);
    assert_eq!(export_bundle(&state, &l.schema, ExportOptions::default()), text);

    // Features come out in declaration order, not alphabetically.
    let order: Vec<usize> = ["\"note\"", "\"forms\"", "\"tags\"", "\"marks\"", "\"parse\"", "\"net\"", "\"fsa\"", "\"inner\""]
        .iter()
        .map(|n| text.find(&format!("n={n}")).unwrap())
        .collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]), "{text}");
}

#[test]
fn nested_sense_groups_round_trip() {
    let db = parax_db_without_rules();
    let txn = db
        .apply(
            vec![
                Mutation::CreateEntry { language: "french".into(), lemma: "tenir".into(), features: Features::new() },
                Mutation::AddAcception { entry: Ref::New { new: 0 }, sense_path: vec![], features: Features::new(), name: None },
                Mutation::AddAcception { entry: Ref::New { new: 0 }, sense_path: vec![1, 0], features: Features::new(), name: None },
                Mutation::AddAcception { entry: Ref::New { new: 0 }, sense_path: vec![1, 1], features: Features::new(), name: None },
            ],
            None,
        )
        .unwrap();
    assert!(txn.committed(), "{:?}", txn.violations);
    let text = export_bundle(&db.snapshot(), db.schema(), ExportOptions::default());
    assert!(text.contains("<sense>"), "{text}");
    let state = import_bundle(&text, db.schema(), db.rules(), ImportMode::Strict).unwrap();
    assert_eq!(state.entries().next().unwrap().senses, db.snapshot().entries().next().unwrap().senses);
}
