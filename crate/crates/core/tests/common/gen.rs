//! Random well-formed databases over the Parax schema.

use rand::seq::SliceRandom;
use rand::Rng;

use mldb_core::dls::FeatureValue;
use mldb_core::lexbase::{features, Mutation, Ref};
use mldb_core::{AxieId, Database};

pub const LANGUAGES: [&str; 4] = ["french", "english", "german", "russian"];
const CATEGORIES: [&str; 11] = ["nc", "np", "vb", "vbimp", "vbrefl", "adj", "card", "deict", "repr", "sub", "coord"];

pub struct Generated {
    pub db: Database,
    pub languages: Vec<&'static str>,
}

fn cat(rng: &mut impl Rng) -> FeatureValue {
    FeatureValue::atom(CATEGORIES.choose(rng).unwrap())
}

/// Builds a database with 2 to 4 languages and at most 50 axies: some
/// concepts shared across languages, some entries with several senses,
/// contrastive refinements with their own members, and quasi-synonym links.
pub fn random_database(rng: &mut impl Rng) -> Generated {
    let db = super::parax_db();
    let n_langs = rng.gen_range(2..=4);
    let mut languages: Vec<&'static str> = LANGUAGES.choose_multiple(rng, n_langs).copied().collect();
    languages.sort();

    let concepts = rng.gen_range(1..=30);
    let mut muts: Vec<Mutation> = Vec::new();
    // (language, index of the CreateEntry mutation)
    let mut entries: Vec<(&str, usize)> = Vec::new();
    let mut word = 0;
    for _ in 0..concepts {
        let n = rng.gen_range(1..=languages.len());
        let chosen: Vec<&str> = languages.choose_multiple(rng, n).copied().collect();
        let mut first: Option<usize> = None;
        for lang in chosen {
            let reuse: Vec<usize> = entries.iter().filter(|(l, _)| *l == lang).map(|(_, i)| *i).collect();
            let entry = match reuse.choose(rng) {
                Some(&i) if rng.gen_bool(0.3) => i,
                _ => {
                    word += 1;
                    muts.push(Mutation::CreateEntry {
                        language: lang.into(),
                        lemma: format!("w{word}{}", &lang[..2]),
                        features: features([("category", cat(rng))]),
                    });
                    entries.push((lang, muts.len() - 1));
                    muts.len() - 1
                }
            };
            muts.push(Mutation::AddAcception {
                entry: Ref::New { new: entry },
                sense_path: vec![],
                features: features([("cat", cat(rng))]),
                name: None,
            });
            let acc = muts.len() - 1;
            match first {
                None => first = Some(acc),
                Some(f) => muts.push(Mutation::LinkTranslation { a: Ref::New { new: acc }, b: Ref::New { new: f } }),
            }
        }
    }
    let txn = db.apply(muts, Some("gen")).unwrap();
    assert!(txn.committed(), "{:?}", txn.violations);

    let axies: Vec<AxieId> = db.snapshot().axies().map(|x| x.id).collect();
    let mut muts: Vec<Mutation> = Vec::new();
    let mut parents: Vec<Ref> = axies.iter().map(|x| (*x).into()).collect();
    let subs = rng.gen_range(1..=8.min(50 - axies.len()));
    for s in 0..subs {
        let parent = parents.choose(rng).unwrap().clone();
        muts.push(Mutation::MakeSubAcception {
            parent,
            label: format!("s{s}"),
            gloss: String::new(),
            tags: Default::default(),
            name: None,
        });
        let sub = muts.len() - 1;
        parents.push(Ref::New { new: sub });
        if rng.gen_bool(0.6) {
            let lang = *languages.choose(rng).unwrap();
            word += 1;
            muts.push(Mutation::CreateEntry {
                language: lang.into(),
                lemma: format!("w{word}{}", &lang[..2]),
                features: features([("category", cat(rng))]),
            });
            muts.push(Mutation::AddAcception {
                entry: Ref::New { new: muts.len() - 1 },
                sense_path: vec![],
                features: features([("cat", cat(rng))]),
                name: None,
            });
            muts.push(Mutation::AssignAxie { acception: Ref::New { new: muts.len() - 1 }, axie: Ref::New { new: sub } });
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        let (a, b) = (*axies.choose(rng).unwrap(), *axies.choose(rng).unwrap());
        if a != b {
            muts.push(Mutation::AddQuasiSynonym { a: a.into(), b: b.into() });
        }
    }
    let txn = db.apply(muts, Some("gen")).unwrap();
    assert!(txn.committed(), "{:?}", txn.violations);
    Generated { db, languages }
}
