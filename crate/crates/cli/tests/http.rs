use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::routing::get;
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use mldb_cli::server::{self, ACTOR_HEADER};
use mldb_core::interchange::{import_bundle, ImportMode};
use mldb_core::{load_dls, Database};

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

fn fig3() -> Arc<Database> {
    let l = load_dls(&fixture("parax.dls")).unwrap();
    let state = import_bundle(&fixture("parax-fig3.mldb.xml"), &l.schema, &l.rules, ImportMode::Strict).unwrap();
    Arc::new(Database::from_state(l.schema, l.rules, state))
}

fn app(db: &Arc<Database>) -> Router {
    server::router(db.clone(), server::DEFAULT_TIMEOUT)
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get_json(app: &Router, uri: &str) -> (StatusCode, Value) {
    let (status, bytes) = send(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

async fn post_json(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    post_as(app, uri, body, None).await
}

async fn post_as(app: &Router, uri: &str, body: Value, actor: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::post(uri).header("content-type", "application/json");
    if let Some(actor) = actor {
        req = req.header(ACTOR_HEADER, actor);
    }
    let (status, bytes) = send(app, req.body(Body::from(body.to_string())).unwrap()).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

/// Entry features of the stored épouser, so a new entry with them is an identical homograph.
fn epouser_features() -> Value {
    json!({"graphic-form": {"text": "épouser"}, "category": {"atom": "vb"}})
}

fn codes(violations: &Value) -> Vec<&str> {
    violations.as_array().unwrap().iter().map(|v| v["code"].as_str().unwrap()).collect()
}

#[tokio::test]
async fn dictionaries_list_the_four_languages() {
    let db = fig3();
    let (status, body) = get_json(&app(&db), "/dictionaries").await;
    assert_eq!(status, StatusCode::OK);
    let got: Vec<(&str, &str, &str, &str)> = body
        .as_array()
        .unwrap()
        .iter()
        .map(|d| {
            (
                d["key"].as_str().unwrap(),
                d["language"].as_str().unwrap(),
                d["entryClass"].as_str().unwrap(),
                d["acceptionClass"].as_str().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        got,
        [
            ("french", "Français", "french-entry", "french-acception"),
            ("english", "English", "english-entry", "english-acception"),
            ("german", "Allemand", "german-entry", "german-acception"),
            ("russian", "Russe", "russian-entry", "russian-acception"),
        ]
    );
    assert!(body[0]["acceptionFeatures"].as_array().unwrap().contains(&json!("cat")));
}

#[tokio::test]
async fn translate_epouser_into_german() {
    let db = fig3();
    let (status, body) =
        post_json(&app(&db), "/translate", json!({"lemma": "épouser", "from": "français", "to": "allemand"})).await;
    assert_eq!(status, StatusCode::OK);
    let hits: Vec<&Value> = body["senses"].as_array().unwrap().iter().flat_map(|s| s["hits"].as_array().unwrap()).collect();
    assert_eq!(hits.len(), 1, "{body}");
    assert_eq!(hits[0]["lemma"], "heiraten");
    assert_eq!(hits[0]["via"], "direct");
}

#[tokio::test]
async fn translate_errors() {
    let db = fig3();
    let app = app(&db);
    let (status, body) = post_json(&app, "/translate", json!({"lemma": "nul", "from": "français", "to": "russe"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "UnknownLemma");
    let (status, body) = post_json(&app, "/translate", json!({"lemma": "épouser", "from": "klingon", "to": "russe"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "UnknownLanguage");
    let (status, body) = post_json(&app, "/translate", json!({"lemma": "épouser"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "BadRequest");
}

#[tokio::test]
async fn same_language_merge_is_a_conflict_with_a_suggested_fix() {
    let db = fig3();
    let app = app(&db);
    let (status, created) = post_json(
        &app,
        "/entries",
        json!({"language": "german", "lemma": "ehelichen", "acceptions": [{"features": {"cat": {"atom": "vb"}}}]}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{created}");
    let acc = created["results"][1].as_str().unwrap().to_string();
    let before = db.snapshot();

    let (status, body) = post_json(&app, "/link", json!({"a": acc, "b": "german:acc:1"})).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(body["code"], "WF2");
    assert_eq!(body["suggestedFix"]["action"], "create-sub-acception");
    assert_eq!(body["suggestedFix"]["acception"], json!(acc));
    assert!(codes(&body["violations"]).contains(&"WF2"));
    assert_eq!(db.snapshot().seq(), before.seq());

    // The suggested fix, applied as proposed, commits.
    let fix = &body["suggestedFix"];
    let (status, body) = post_json(
        &app,
        "/sub-acceptions",
        json!({"parent": fix["parent"], "label": fix["label"], "acception": fix["acception"]}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["outcome"], "committed");
    let sub = body["results"][0].as_str().unwrap();
    let snap = db.snapshot();
    let moved = snap.acception(&acc.parse().unwrap()).unwrap();
    assert_eq!(moved.axie.to_string(), sub);
    assert!(mldb_core::lexbase::check_wellformed(&snap).is_empty());
}

#[tokio::test]
async fn unknown_ids_are_not_found() {
    let db = fig3();
    let app = app(&db);
    for uri in ["/entries/french:entry:99", "/entries/nonsense", "/axies/axie:99", "/axies/99", "/axies/x"] {
        let (status, body) = get_json(&app, uri).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(body["code"], "UnknownId", "{uri}");
    }
    let (status, body) = post_json(&app, "/entries/french:entry:99/validate", json!({})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["subjects"], json!(["french:entry:99"]));
    let (status, _) = post_json(&app, "/link", json!({"a": "french:acc:1", "b": "german:acc:99"})).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_input_is_a_bad_request() {
    let db = fig3();
    let app = app(&db);
    let seq = db.snapshot().seq();
    let req = Request::post("/entries").header("content-type", "application/json").body(Body::from("{")).unwrap();
    let (status, bytes) = send(&app, req).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap()["code"], "BadRequest");

    let (status, body) = post_json(
        &app,
        "/entries",
        json!({"language": "french", "lemma": "x", "acceptions": [{"features": {"cat": {"atom": "verbe"}}}]}),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["code"], "Validation");

    let (status, body) = post_json(&app, "/entries", json!({"language": "french", "lemma": " "})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["code"], "EmptyLemma");

    let (status, body) = post_json(&app, "/quasi", json!({"a": "axie:1", "b": "axie:1"})).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
    assert_eq!(body["code"], "InvalidMutation");

    let (status, _) = get_json(&app, "/entries?prefix=é").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = get_json(&app, "/violations?strength=fatal").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(db.snapshot().seq(), seq);
}

#[tokio::test]
async fn warnings_come_back_with_the_committed_transaction() {
    let db = fig3();
    let app = app(&db);
    let (status, body) =
        post_as(&app, "/entries", json!({"language": "french", "lemma": "épouser", "features": epouser_features()}), Some("lexicographe")).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["outcome"], "committed");
    assert_eq!(codes(&body["violations"]), ["Homograph"]);
    assert_eq!(body["violations"][0]["strength"], "warning");

    let entry = body["results"][0].as_str().unwrap().to_string();
    let (_, logged) = get_json(&app, "/violations?strength=warning").await;
    let mine: Vec<&Value> = logged
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["violation"]["subjects"].as_array().unwrap().contains(&json!(entry)))
        .collect();
    assert_eq!(mine.len(), 1, "{logged}");
    assert_eq!(mine[0]["actor"], "lexicographe");
    let (_, none) = get_json(&app, "/violations?strength=critical").await;
    assert_eq!(none, json!([]));

    let (status, body) = post_json(&app, &format!("/entries/{entry}/validate"), json!({})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (_, view) = get_json(&app, &format!("/entries/{entry}")).await;
    assert_eq!(view["validated"], true);
    let (_, logged) = get_json(&app, "/violations").await;
    assert!(!logged.to_string().contains(&entry), "{logged}");
}

#[tokio::test]
async fn mutation_response_reports_the_transaction_violations_unfiltered() {
    let db = fig3();
    let app = app(&db);
    let (_, body) = post_json(&app, "/entries", json!({"language": "french", "lemma": "épouser", "features": epouser_features()})).await;
    let seq = body["seq"].as_u64().unwrap();
    let stored: Vec<Value> = db
        .violations(mldb_core::rules::Strength::Warning)
        .into_iter()
        .filter(|r| r.seq == seq)
        .map(|r| serde_json::to_value(r.violation).unwrap())
        .collect();
    assert_eq!(body["violations"], Value::Array(stored));
}

#[tokio::test]
async fn entries_and_acceptions_in_one_draft() {
    let db = fig3();
    let app = app(&db);
    let (status, body) = post_json(
        &app,
        "/entries",
        json!({
            "language": "english",
            "lemma": "marry",
            "features": {"category": {"atom": "vb"}},
            "acceptions": [{"features": {"cat": {"atom": "vb"}}, "linkTo": "french:acc:1"}]
        }),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (_, t) = post_json(&app, "/translate", json!({"lemma": "épouser", "from": "french", "to": "english"})).await;
    let lemmas: Vec<&str> = t["senses"][0]["hits"].as_array().unwrap().iter().map(|h| h["lemma"].as_str().unwrap()).collect();
    assert_eq!(lemmas, ["marry"]);

    let entry = body["results"][0].as_str().unwrap();
    let (status, body) = post_json(&app, "/acceptions", json!({"entry": entry, "features": {"cat": {"atom": "vb"}}})).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let (_, view) = get_json(&app, &format!("/entries/{entry}")).await;
    assert_eq!(view["acceptions"].as_array().unwrap().len(), 2);

    let (_, found) = get_json(&app, "/entries?lang=English&prefix=mar").await;
    assert_eq!(found.as_array().unwrap().len(), 1);
    assert_eq!(found[0]["lemma"], "marry");
}

#[tokio::test]
async fn browsing_axies_honours_depth() {
    let db = fig3();
    let app = app(&db);
    let (status, shallow) = get_json(&app, "/axies/axie:1?depth=0").await;
    assert_eq!(status, StatusCode::OK);
    let labels: Vec<&str> = shallow["subs"].as_array().unwrap().iter().map(|s| s["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["homme", "femme", "relig"]);
    assert!(shallow["subs"][0].get("axie").is_none());
    let (_, deep) = get_json(&app, "/axies/1?depth=1").await;
    assert_eq!(deep["subs"][0]["axie"]["languages"]["russian"][0]["lemma"], "жениться");
    assert_eq!(deep["languages"]["german"][0]["lemma"], "heiraten");
}

#[tokio::test]
async fn quasi_links_are_added_and_removed() {
    let db = fig3();
    let app = app(&db);
    let (status, _) = post_json(&app, "/quasi", json!({"a": "axie:2", "b": "axie:3"})).await;
    assert_eq!(status, StatusCode::OK);
    let (_, x) = get_json(&app, "/axies/axie:3").await;
    assert_eq!(x["quasi"], json!(["axie:2"]));
    let (status, _) = post_json(&app, "/quasi", json!({"a": "axie:3", "b": "axie:2", "remove": true})).await;
    assert_eq!(status, StatusCode::OK);
    let (_, x) = get_json(&app, "/axies/axie:2").await;
    assert_eq!(x["quasi"], json!([]));
}

#[tokio::test]
async fn default_preview_proposes_without_storing() {
    let db = fig3();
    let app = app(&db);
    let seq = db.snapshot().seq();
    let (status, body) = post_json(
        &app,
        "/defaults/preview",
        json!({"language": "français", "kind": "acception", "features": {"cat": {"atom": "vb"}}}),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body, json!([{"rule": "verb-aux", "path": ["aux"], "value": {"atom": "avoir"}}]));
    let (_, body) = post_json(
        &app,
        "/defaults/preview",
        json!({"language": "français", "kind": "acception", "features": {"cat": {"atom": "nc"}}}),
    )
    .await;
    assert_eq!(body, json!([]));
    assert_eq!(db.snapshot().seq(), seq);
}

#[tokio::test]
async fn stats_and_export() {
    let db = fig3();
    let app = app(&db);
    let (_, stats) = get_json(&app, "/stats").await;
    assert_eq!(stats["axies"], 6);
    assert_eq!(stats["subAcceptions"], 3);
    assert_eq!(stats["dictionaries"][0], json!({"language": "french", "entries": 1, "acceptions": 3}));

    let (status, bytes) = send(&app, Request::get("/export").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(String::from_utf8(bytes).unwrap(), fixture("parax-fig3.mldb.xml"));
}

#[tokio::test]
async fn slow_requests_time_out_with_503() {
    let slow = Router::new().route(
        "/slow",
        get(|| async {
            tokio::time::sleep(Duration::from_secs(5)).await;
            "late"
        }),
    );
    let app = server::with_timeout(slow, Duration::from_millis(20));
    let (status, bytes) = send(&app, Request::get("/slow").body(Body::empty()).unwrap()).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(serde_json::from_slice::<Value>(&bytes).unwrap()["code"], "Timeout");
}

#[tokio::test]
async fn concurrent_writers_are_serialized() {
    let db = fig3();
    let app = app(&db);
    let seq = db.snapshot().seq();
    let mut tasks = Vec::new();
    for i in 0..16 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            post_json(&app, "/entries", json!({"language": "german", "lemma": format!("wort{i}")})).await
        }));
    }
    let mut seqs = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        seqs.push(body["seq"].as_u64().unwrap());
    }
    seqs.sort();
    assert_eq!(seqs, ((seq + 1)..=(seq + 16)).collect::<Vec<_>>());
    assert_eq!(db.stats().for_language("german").unwrap().entries, 17);
}
