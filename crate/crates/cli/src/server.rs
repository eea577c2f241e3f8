//! JSON-over-HTTP interface used by the workbench.
//!
//! Reads come from snapshots. Every mutation is a single call to
//! [`Database::apply`], so the service goes through the same rule
//! enforcement as every other client.

use std::sync::Arc;
use std::time::Duration;

use axum::error_handling::HandleErrorLayer;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{BoxError, Json, Router};
use serde::{Deserialize, Serialize};
use tower::ServiceBuilder;

use mldb_core::dls::Features;
use mldb_core::interchange::{export_bundle, ExportOptions};
use mldb_core::lexbase::{Mutation, Ref, Transaction};
use mldb_core::rules::{ArticleKind, Strength};
use mldb_core::{AxieId, Code, Database, EntryId, ObjectId, StoreError, SuggestedFix, Violation};

/// Request header naming the lexicographer, recorded with logged violations.
pub const ACTOR_HEADER: &str = "x-actor";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

type Db = Arc<Database>;

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub subjects: Vec<ObjectId>,
    #[serde(rename = "suggestedFix", skip_serializing_if = "Option::is_none")]
    pub suggested_fix: Option<SuggestedFix>,
    /// Full violation set of a rolled-back transaction.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Debug)]
pub enum ApiError {
    Store(StoreError),
    BadRequest(String),
    NotFound(String),
    Internal(String),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> ApiError {
        ApiError::Store(e)
    }
}

fn plain(status: StatusCode, code: &str, message: String, subjects: Vec<ObjectId>) -> Response {
    let body = ErrorBody { code: code.into(), message, subjects, suggested_fix: None, violations: vec![] };
    (status, Json(body)).into_response()
}

/// Rejections made only of malformed values are the client's input error;
/// anything else critical is a conflict with the stored data.
fn rejection_status(txn: &Transaction) -> StatusCode {
    let critical = txn.violations.iter().filter(|v| v.strength == Strength::Critical);
    if critical.clone().all(|v| matches!(v.code, Code::Validation | Code::EmptyLemma)) && critical.count() > 0 {
        StatusCode::BAD_REQUEST
    } else {
        StatusCode::CONFLICT
    }
}

fn rolled_back(txn: Transaction) -> Response {
    let status = rejection_status(&txn);
    let critical: Vec<&Violation> = txn.violations.iter().filter(|v| v.strength == Strength::Critical).collect();
    let lead = critical
        .iter()
        .find(|v| v.suggested_fix.is_some())
        .or(critical.first())
        .copied()
        .cloned();
    let body = match lead {
        Some(v) => ErrorBody {
            code: v.code.to_string(),
            message: v.message,
            subjects: v.subjects,
            suggested_fix: v.suggested_fix,
            violations: txn.violations,
        },
        None => ErrorBody {
            code: "RolledBack".into(),
            message: "transaction rolled back".into(),
            subjects: vec![],
            suggested_fix: None,
            violations: txn.violations,
        },
    };
    (status, Json(body)).into_response()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::BadRequest(m) => plain(StatusCode::BAD_REQUEST, "BadRequest", m, vec![]),
            ApiError::NotFound(id) => {
                let subjects = id.parse().into_iter().collect();
                plain(StatusCode::NOT_FOUND, "UnknownId", format!("unknown id `{id}`"), subjects)
            }
            ApiError::Internal(m) => plain(StatusCode::INTERNAL_SERVER_ERROR, "Internal", m, vec![]),
            ApiError::Store(e) => {
                let message = e.to_string();
                match e {
                    StoreError::UnknownId(id) => ApiError::NotFound(id).into_response(),
                    StoreError::UnknownLemma { .. } => plain(StatusCode::NOT_FOUND, "UnknownLemma", message, vec![]),
                    StoreError::UnknownLanguage(_) => {
                        plain(StatusCode::BAD_REQUEST, "UnknownLanguage", message, vec![])
                    }
                    StoreError::InvalidMutation(_) => {
                        plain(StatusCode::BAD_REQUEST, "InvalidMutation", message, vec![])
                    }
                    StoreError::RolledBack(txn) => rolled_back(*txn),
                    StoreError::CorruptStore(_) | StoreError::SchemaMismatch { .. } | StoreError::Io(_) => {
                        plain(StatusCode::INTERNAL_SERVER_ERROR, "Store", message, vec![])
                    }
                }
            }
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn body<T>(r: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    r.map(|Json(t)| t).map_err(|e| ApiError::BadRequest(e.body_text()))
}

fn query<T>(r: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    r.map(|Query(t)| t).map_err(|e| ApiError::BadRequest(e.body_text()))
}

fn actor(headers: &HeaderMap) -> Option<String> {
    headers.get(ACTOR_HEADER).and_then(|v| v.to_str().ok()).map(str::to_string)
}

/// Runs store work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))?
}

/// Applies one transaction; a rollback becomes an error response carrying
/// every violation of the transaction.
async fn commit(db: Db, mutations: Vec<Mutation>, actor: Option<String>) -> ApiResult<Transaction> {
    blocking(move || {
        let txn = db.apply(mutations, actor.as_deref())?;
        if txn.committed() {
            Ok(Json(txn))
        } else {
            Err(StoreError::RolledBack(Box::new(txn)).into())
        }
    })
    .await
}

fn entry_id(s: &str) -> Result<EntryId, ApiError> {
    s.parse().map_err(|_| ApiError::NotFound(s.to_string()))
}

fn axie_id(s: &str) -> Result<AxieId, ApiError> {
    s.parse()
        .or_else(|_| s.parse::<u64>().map(AxieId))
        .map_err(|_| ApiError::NotFound(s.to_string()))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DictionaryInfo {
    key: String,
    language: String,
    entry_class: String,
    acception_class: String,
    entry_features: Vec<String>,
    acception_features: Vec<String>,
}

async fn dictionaries(State(db): State<Db>) -> Json<Vec<DictionaryInfo>> {
    let schema = db.schema();
    let names = |class: &str| schema.features_of(class).iter().map(|(n, _)| n.clone()).collect();
    Json(
        schema
            .dictionaries
            .iter()
            .map(|d| DictionaryInfo {
                key: d.key.clone(),
                language: d.language.clone(),
                entry_class: d.entry_class.clone(),
                acception_class: d.acception_class.clone(),
                entry_features: names(&d.entry_class),
                acception_features: names(&d.acception_class),
            })
            .collect(),
    )
}

#[derive(Deserialize)]
struct EntriesQuery {
    lang: String,
    #[serde(default)]
    prefix: String,
}

async fn entries(
    State(db): State<Db>,
    q: Result<Query<EntriesQuery>, QueryRejection>,
) -> ApiResult<Vec<mldb_core::lexbase::EntryView>> {
    let q = query(q)?;
    Ok(Json(db.lookup_entry(&q.lang, &q.prefix)?))
}

async fn entry(State(db): State<Db>, Path(id): Path<String>) -> ApiResult<mldb_core::lexbase::EntryView> {
    Ok(Json(db.entry_view(&entry_id(&id)?)?))
}

#[derive(Deserialize)]
struct DepthQuery {
    depth: Option<usize>,
}

async fn axie(
    State(db): State<Db>,
    Path(id): Path<String>,
    q: Result<Query<DepthQuery>, QueryRejection>,
) -> ApiResult<mldb_core::lexbase::AxieView> {
    let depth = query(q)?.depth.unwrap_or(1);
    Ok(Json(db.browse_axie(axie_id(&id)?, depth)?))
}

#[derive(Deserialize)]
struct TranslateRequest {
    lemma: String,
    from: String,
    to: String,
}

async fn translate(
    State(db): State<Db>,
    req: Result<Json<TranslateRequest>, JsonRejection>,
) -> ApiResult<mldb_core::lexbase::TranslationResult> {
    let req = body(req)?;
    blocking(move || Ok(Json(db.translate(&req.lemma, &req.from, &req.to)?))).await
}

/// One acception to add, optionally linked as a translation of `linkTo`.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct NewSense {
    #[serde(default)]
    sense_path: Vec<usize>,
    #[serde(default)]
    features: Features,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    link_to: Option<String>,
}

impl NewSense {
    fn push(self, entry: Ref, muts: &mut Vec<Mutation>) {
        let at = muts.len();
        muts.push(Mutation::AddAcception { entry, sense_path: self.sense_path, features: self.features, name: self.name });
        if let Some(target) = self.link_to {
            muts.push(Mutation::LinkTranslation { a: Ref::New { new: at }, b: Ref::Id(target) });
        }
    }
}

#[derive(Deserialize)]
struct NewEntry {
    language: String,
    lemma: String,
    #[serde(default)]
    features: Features,
    #[serde(default)]
    acceptions: Vec<NewSense>,
}

async fn create_entry(
    State(db): State<Db>,
    headers: HeaderMap,
    req: Result<Json<NewEntry>, JsonRejection>,
) -> ApiResult<Transaction> {
    let req = body(req)?;
    let mut muts = vec![Mutation::CreateEntry { language: req.language, lemma: req.lemma, features: req.features }];
    for sense in req.acceptions {
        sense.push(Ref::New { new: 0 }, &mut muts);
    }
    commit(db, muts, actor(&headers)).await
}

#[derive(Deserialize)]
struct NewAcception {
    entry: String,
    #[serde(flatten)]
    sense: NewSense,
}

async fn create_acception(
    State(db): State<Db>,
    headers: HeaderMap,
    req: Result<Json<NewAcception>, JsonRejection>,
) -> ApiResult<Transaction> {
    let req = body(req)?;
    let mut muts = Vec::new();
    req.sense.push(Ref::Id(req.entry), &mut muts);
    commit(db, muts, actor(&headers)).await
}

#[derive(Deserialize)]
struct Pair {
    a: String,
    b: String,
    #[serde(default)]
    remove: bool,
}

async fn link(State(db): State<Db>, headers: HeaderMap, req: Result<Json<Pair>, JsonRejection>) -> ApiResult<Transaction> {
    let req = body(req)?;
    commit(db, vec![Mutation::LinkTranslation { a: Ref::Id(req.a), b: Ref::Id(req.b) }], actor(&headers)).await
}

async fn quasi(State(db): State<Db>, headers: HeaderMap, req: Result<Json<Pair>, JsonRejection>) -> ApiResult<Transaction> {
    let req = body(req)?;
    let (a, b) = (Ref::Id(req.a), Ref::Id(req.b));
    let m = if req.remove { Mutation::RemoveQuasiSynonym { a, b } } else { Mutation::AddQuasiSynonym { a, b } };
    commit(db, vec![m], actor(&headers)).await
}

/// A contrastive sub-acception of `parent`. With `acception` set, that
/// acception moves onto it in the same transaction, which is how a
/// suggested fix for a same-language clash is applied.
#[derive(Deserialize)]
struct NewSub {
    parent: String,
    label: String,
    #[serde(default)]
    gloss: String,
    #[serde(default)]
    tags: std::collections::BTreeSet<String>,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    acception: Option<String>,
}

async fn create_sub(
    State(db): State<Db>,
    headers: HeaderMap,
    req: Result<Json<NewSub>, JsonRejection>,
) -> ApiResult<Transaction> {
    let req = body(req)?;
    let mut muts = vec![Mutation::MakeSubAcception {
        parent: Ref::Id(req.parent),
        label: req.label,
        gloss: req.gloss,
        tags: req.tags,
        name: req.name,
    }];
    if let Some(acception) = req.acception {
        muts.push(Mutation::AssignAxie { acception: Ref::Id(acception), axie: Ref::New { new: 0 } });
    }
    commit(db, muts, actor(&headers)).await
}

async fn validate(State(db): State<Db>, headers: HeaderMap, Path(id): Path<String>) -> ApiResult<Transaction> {
    let id = entry_id(&id)?;
    commit(db, vec![Mutation::ValidateEntry { entry: (&id).into() }], actor(&headers)).await
}

#[derive(Deserialize)]
struct StrengthQuery {
    strength: Option<String>,
}

async fn violations(
    State(db): State<Db>,
    q: Result<Query<StrengthQuery>, QueryRejection>,
) -> ApiResult<Vec<mldb_core::lexbase::LogRecord>> {
    let min = match query(q)?.strength {
        None => Strength::Warning,
        Some(s) => Strength::parse(&s).ok_or_else(|| ApiError::BadRequest(format!("unknown strength `{s}`")))?,
    };
    Ok(Json(db.violations(min)))
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum PreviewKind {
    Entry,
    Acception,
}

#[derive(Deserialize)]
struct PreviewRequest {
    language: String,
    kind: PreviewKind,
    #[serde(default)]
    features: Features,
}

async fn preview_defaults(
    State(db): State<Db>,
    req: Result<Json<PreviewRequest>, JsonRejection>,
) -> ApiResult<Vec<mldb_core::rules::Proposal>> {
    let req = body(req)?;
    let kind = match req.kind {
        PreviewKind::Entry => ArticleKind::Entry,
        PreviewKind::Acception => ArticleKind::Acception,
    };
    Ok(Json(db.preview_defaults(&req.language, kind, req.features)?))
}

async fn stats(State(db): State<Db>) -> Json<mldb_core::lexbase::Stats> {
    Json(db.stats())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ExportQuery {
    #[serde(default)]
    include_delayed: bool,
}

async fn export(State(db): State<Db>, q: Result<Query<ExportQuery>, QueryRejection>) -> Result<Response, ApiError> {
    let opts = ExportOptions { include_delayed: query(q)?.include_delayed };
    let text = blocking(move || Ok(export_bundle(&db.snapshot(), db.schema(), opts))).await?;
    Ok(([(header::CONTENT_TYPE, "application/xml; charset=utf-8")], text).into_response())
}

async fn timed_out(err: BoxError) -> Response {
    if err.is::<tower::timeout::error::Elapsed>() {
        plain(StatusCode::SERVICE_UNAVAILABLE, "Timeout", "request timed out".into(), vec![])
    } else {
        plain(StatusCode::INTERNAL_SERVER_ERROR, "Internal", err.to_string(), vec![])
    }
}

/// Wraps `router` so a request running longer than `limit` answers 503.
pub fn with_timeout(router: Router, limit: Duration) -> Router {
    router.layer(ServiceBuilder::new().layer(HandleErrorLayer::new(timed_out)).timeout(limit))
}

pub fn router(db: Db, limit: Duration) -> Router {
    let api = Router::new()
        .route("/dictionaries", get(dictionaries))
        .route("/entries", get(entries).post(create_entry))
        .route("/entries/{id}", get(entry))
        .route("/entries/{id}/validate", post(validate))
        .route("/axies/{id}", get(axie))
        .route("/translate", post(translate))
        .route("/acceptions", post(create_acception))
        .route("/link", post(link))
        .route("/sub-acceptions", post(create_sub))
        .route("/quasi", post(quasi))
        .route("/violations", get(violations))
        .route("/defaults/preview", post(preview_defaults))
        .route("/stats", get(stats))
        .route("/export", get(export))
        .with_state(db);
    with_timeout(api, limit)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(db: Db, addr: std::net::SocketAddr, limit: Duration) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(db, limit))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;
    use mldb_core::AcceptionId;

    #[test]
    fn axie_ids_accept_bare_numbers() {
        assert_eq!(axie_id("axie:7").unwrap(), AxieId(7));
        assert_eq!(axie_id("7").unwrap(), AxieId(7));
        assert!(axie_id("seven").is_err());
    }

    #[test]
    fn acception_ids_are_not_entry_ids() {
        assert!(entry_id("french:acc:1").is_err());
        assert!("french:acc:1".parse::<AcceptionId>().is_ok());
    }
}
