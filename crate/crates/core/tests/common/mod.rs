#![allow(dead_code)]

pub mod gen;
pub mod xmledit;

use std::path::PathBuf;
use std::sync::Arc;

use mldb_core::dls::FeatureValue;
use mldb_core::lexbase::{features, Mutation, Ref};
use mldb_core::rules::RuleSet;
use mldb_core::{load_dls, AcceptionId, AxieId, Database, EntryId, Loaded};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn parax() -> Loaded {
    load_dls(&read_fixture("parax.dls")).expect("parax.dls loads")
}

pub fn parax_db() -> Database {
    let l = parax();
    Database::in_memory(l.schema, l.rules)
}

/// Same schema, no rules or defaults.
pub fn parax_db_without_rules() -> Database {
    let l = parax();
    Database::in_memory(l.schema, Arc::new(RuleSet::default()))
}

pub fn atom(s: &str) -> FeatureValue {
    FeatureValue::atom(s)
}

pub struct Fig3 {
    pub epouser: EntryId,
    pub senses: [AcceptionId; 3],
    pub semarier: AxieId,
    pub forme: AxieId,
    pub idees: AxieId,
    pub homme: AxieId,
    pub femme: AxieId,
    pub relig: AxieId,
    pub heiraten: AcceptionId,
    pub zhenitsya: AcceptionId,
    pub zamuzh: AcceptionId,
}

pub const SEMARIER_GLOSS: &str = "prendre pour époux, épouse, se marier avec (le prince épouse une cousette.)";

/// French "épouser" with three senses, German "heiraten" sharing the first
/// one, and Russian verbs on the `homme` / `femme` refinements of it.
pub fn build_fig3(db: &Database) -> Fig3 {
    let new = |k| Ref::New { new: k };
    let verb = || features([("cat", atom("vb"))]);
    let txn = db
        .apply(
            vec![
                Mutation::CreateEntry {
                    language: "français".into(),
                    lemma: "épouser".into(),
                    features: features([("graphic-form", FeatureValue::text("épouser")), ("category", atom("vb"))]),
                },
                Mutation::AddAcception { entry: new(0), sense_path: vec![], features: verb(), name: None },
                Mutation::AddAcception { entry: new(0), sense_path: vec![], features: verb(), name: None },
                Mutation::AddAcception { entry: new(0), sense_path: vec![], features: verb(), name: None },
            ],
            Some("fixture"),
        )
        .unwrap();
    assert!(txn.committed(), "{:?}", txn.violations);
    let epouser: EntryId = txn.result(0).unwrap().parse().unwrap();
    let senses: [AcceptionId; 3] = [1, 2, 3].map(|i| txn.result(i).unwrap().parse().unwrap());

    let snap = db.snapshot();
    let axie_of = |a: &AcceptionId| snap.acception(a).unwrap().axie;
    let (semarier, forme, idees) = (axie_of(&senses[0]), axie_of(&senses[1]), axie_of(&senses[2]));
    let glossed = |x: AxieId, name: &str, gloss: &str, tags: &[&str]| Mutation::UpdateAxie {
        axie: x.into(),
        name: Some(name.into()),
        gloss: Some(gloss.into()),
        tags: Some(tags.iter().map(|t| t.to_string()).collect()),
    };
    let sub = |label: &str, gloss: &str, tag: &str| Mutation::MakeSubAcception {
        parent: semarier.into(),
        label: label.into(),
        gloss: gloss.into(),
        tags: [tag.to_string()].into(),
        name: None,
    };
    let txn = db
        .apply(
            vec![
                glossed(semarier, "#épouser_semarier", SEMARIER_GLOSS, &["al", "an", "fr"]),
                glossed(
                    forme,
                    "#épouser_forme",
                    "s'adapter exactement à [une forme, un mouvement] (robe qui épouse les formes du corps.)",
                    &[],
                ),
                glossed(
                    idees,
                    "#épouser_idées",
                    "s'attacher de propos délibéré et avec ardeur à qqch (épouser les idées, les intérêts de qqun.)",
                    &[],
                ),
                sub("homme", "se marier (pour un homme)", "ru"),
                sub("femme", "se marier (pour une femme)", "ru"),
                sub("relig", "", "an"),
            ],
            Some("fixture"),
        )
        .unwrap();
    assert!(txn.committed(), "{:?}", txn.violations);
    let [homme, femme, relig]: [AxieId; 3] = [3, 4, 5].map(|i| txn.result(i).unwrap().parse().unwrap());

    let txn = db
        .apply(
            vec![
                Mutation::CreateEntry {
                    language: "allemand".into(),
                    lemma: "heiraten".into(),
                    features: features([("graphic-form", FeatureValue::text("heiraten")), ("category", atom("vb"))]),
                },
                Mutation::AddAcception { entry: new(0), sense_path: vec![], features: verb(), name: None },
                Mutation::LinkTranslation { a: new(1), b: (&senses[0]).into() },
                Mutation::CreateEntry {
                    language: "russe".into(),
                    lemma: "жениться".into(),
                    features: features([("graphic-form", FeatureValue::text("жениться")), ("category", atom("vb"))]),
                },
                Mutation::AddAcception {
                    entry: new(3),
                    sense_path: vec![],
                    features: features([("cat", atom("vb")), ("aspect", atom("imperf"))]),
                    name: None,
                },
                Mutation::AssignAxie { acception: new(4), axie: homme.into() },
                Mutation::CreateEntry {
                    language: "russe".into(),
                    lemma: "замуж (выйти - за)".into(),
                    features: features([
                        ("graphic-form", FeatureValue::text("замуж (выйти - за)")),
                        ("category", atom("vb")),
                    ]),
                },
                Mutation::AddAcception { entry: new(6), sense_path: vec![], features: verb(), name: None },
                Mutation::AssignAxie { acception: new(7), axie: femme.into() },
            ],
            Some("fixture"),
        )
        .unwrap();
    assert!(txn.committed(), "{:?}", txn.violations);
    let acc = |i: usize| -> AcceptionId { txn.result(i).unwrap().parse().unwrap() };
    Fig3 {
        epouser,
        senses,
        semarier,
        forme,
        idees,
        homme,
        femme,
        relig,
        heiraten: acc(1),
        zhenitsya: acc(4),
        zamuzh: acc(7),
    }
}
