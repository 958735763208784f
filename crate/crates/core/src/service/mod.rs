//! Local JSON HTTP service over loaded datasets and analyst sessions.

pub mod session;

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::Dataset;
use crate::error::Error;
use crate::eval::{project_2d, ProjectionMethod, TsneConfig};
use crate::knn::{query, Aggregation, QueryResult, SearchSpace};
use crate::randstring::{default_model, predict, LogisticModel};

pub use session::{Flag, FlagState, QueryRecord, Session, SessionStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub datasets: Vec<PathBuf>,
    /// Session directory; sessions live only in memory when unset.
    pub sessions: Option<PathBuf>,
    /// Trained screen-name model; the built-in model is used when unset.
    pub randstring_model: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            datasets: Vec::new(),
            sessions: None,
            randstring_model: None,
        }
    }
}

type ProjectionKey = (String, String, ProjectionMethod);

pub struct AppState {
    datasets: BTreeMap<String, Arc<Dataset>>,
    sessions: SessionStore,
    randstring: OnceLock<LogisticModel>,
    projections: Mutex<HashMap<ProjectionKey, Arc<Value>>>,
}

impl AppState {
    pub fn new(datasets: Vec<Dataset>, sessions: SessionStore, randstring: Option<LogisticModel>) -> Self {
        let lock = OnceLock::new();
        if let Some(m) = randstring {
            let _ = lock.set(m);
        }
        AppState {
            datasets: datasets.into_iter().map(|d| (d.name().to_string(), Arc::new(d))).collect(),
            sessions,
            randstring: lock,
            projections: Mutex::new(HashMap::new()),
        }
    }

    /// Load datasets, sessions and the screen-name model named in `config`.
    pub fn from_config(config: &ServiceConfig) -> crate::Result<Self> {
        let datasets = config.datasets.iter().map(|p| Dataset::load(p)).collect::<crate::Result<Vec<_>>>()?;
        let sessions = match &config.sessions {
            Some(dir) => SessionStore::open(dir)?,
            None => SessionStore::in_memory(),
        };
        let model = match &config.randstring_model {
            Some(p) => Some(LogisticModel::from_json(&std::fs::read_to_string(p)?)?),
            None => None,
        };
        Ok(AppState::new(datasets, sessions, model))
    }

    fn randstring(&self) -> &LogisticModel {
        self.randstring.get_or_init(default_model)
    }

    fn dataset(&self, name: &str) -> Result<&Arc<Dataset>, ApiError> {
        self.datasets
            .get(name)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "dataset_not_found", format!("no dataset '{name}'")))
    }
}

/// Error body `{"code": ..., "message": ...}` with an HTTP status.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match &e {
            Error::UnknownSpace(_) => (StatusCode::NOT_FOUND, "space_not_found"),
            Error::UnknownAccount(_) => (StatusCode::NOT_FOUND, "account_not_found"),
            Error::InvalidArgument(_) | Error::Config(_) | Error::Mode(_) => (StatusCode::BAD_REQUEST, "invalid_argument"),
            Error::Format(_) => (StatusCode::BAD_REQUEST, "invalid_body"),
            Error::Size(_) => (StatusCode::UNPROCESSABLE_ENTITY, "too_large"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn session_not_found(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session '{id}'"))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", get(list_datasets))
        .route("/datasets/{d}/spaces", get(list_spaces))
        .route("/datasets/{d}/projection", get(projection))
        .route("/datasets/{d}/accounts/{id}", get(account))
        .route("/sessions", post(create_session))
        .route("/sessions/import", post(import_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/export", get(export_session))
        .route("/sessions/{id}/query", post(session_query))
        .route("/sessions/{id}/flags", post(session_flags))
        .with_state(state)
}

/// Bind and serve until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> crate::Result<()> {
    let state = Arc::new(AppState::from_config(&config)?);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn list_datasets(State(state): State<Arc<AppState>>) -> Json<Value> {
    let list: Vec<Value> = state
        .datasets
        .values()
        .map(|d| {
            json!({
                "name": d.name(),
                "accounts": d.graph().node_count(),
                "edges": d.graph().edge_count(),
                "labeled": d.labels().is_some(),
                "spaces": d.space_names(),
            })
        })
        .collect();
    Json(Value::Array(list))
}

fn space_summary(s: &SearchSpace) -> Value {
    json!({
        "name": s.name(),
        "kind": s.kind_label(),
        "metric": s.metric_label(),
        "dim": s.dim(),
        "accounts": s.len(),
    })
}

async fn list_spaces(State(state): State<Arc<AppState>>, Path(d): Path<String>) -> ApiResult<Json<Value>> {
    let ds = state.dataset(&d)?;
    Ok(Json(Value::Array(ds.spaces().map(|s| space_summary(s)).collect())))
}

#[derive(Debug, Deserialize)]
struct ProjectionParams {
    space: String,
    #[serde(default)]
    method: Option<String>,
    #[serde(default)]
    perplexity: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

async fn projection(
    State(state): State<Arc<AppState>>,
    Path(d): Path<String>,
    Query(params): Query<ProjectionParams>,
) -> ApiResult<Json<Value>> {
    let ds = state.dataset(&d)?.clone();
    let method: ProjectionMethod = params.method.as_deref().unwrap_or("pca").parse()?;
    let space = ds.space(&params.space)?.clone();
    let SearchSpace::Vectors(vectors) = space.as_ref() else {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "projection_unavailable",
            format!("space '{}' has no vectors to project", params.space),
        ));
    };
    let custom = params.perplexity.is_some() || params.seed.is_some();
    let key = (d.clone(), params.space.clone(), method);
    if !custom {
        if let Some(v) = state.projections.lock().expect("projection cache poisoned").get(&key) {
            return Ok(Json((**v).clone()));
        }
    }
    let mut cfg = TsneConfig::default();
    if let Some(p) = params.perplexity {
        cfg.perplexity = p;
    } else {
        cfg.perplexity = cfg.perplexity.min(((vectors.len() as f64) / 3.0 - 1.0).max(1.0));
    }
    cfg.seed = params.seed.unwrap_or(0);
    let vectors = vectors.clone();
    let ds2 = ds.clone();
    let value = tokio::task::spawn_blocking(move || -> crate::Result<Value> {
        let proj = project_2d(&vectors, method, &cfg)?;
        let points: Vec<Value> = proj
            .ids
            .iter()
            .enumerate()
            .map(|(i, id)| {
                json!({
                    "id": id,
                    "x": proj.coords[(i, 0)],
                    "y": proj.coords[(i, 1)],
                    "label": ds2.labels().and_then(|l| l.get(id)),
                })
            })
            .collect();
        Ok(json!({"space": vectors.name(), "method": method, "points": points}))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let value = Arc::new(value);
    if !custom {
        state.projections.lock().expect("projection cache poisoned").insert(key, value.clone());
    }
    Ok(Json((*value).clone()))
}

/// Summary card shown next to a hit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountCard {
    pub id: String,
    pub screen_name: String,
    pub n_posts: usize,
    pub in_degree: usize,
    pub out_degree: usize,
    pub retweet_fraction: f64,
    pub top_hashtags: Vec<String>,
    pub random_string_probability: Option<f64>,
    pub label: Option<bool>,
    pub flag: Option<FlagState>,
}

fn account_card(state: &AppState, ds: &Dataset, id: &str, session: Option<&Session>) -> Option<AccountCard> {
    let rec = ds.account(id)?;
    let node = ds.graph().index_of(id)?;
    let prob = if rec.screen_name.is_empty() { None } else { predict(state.randstring(), &rec.screen_name).ok() };
    Some(AccountCard {
        id: id.to_string(),
        screen_name: rec.screen_name.clone(),
        n_posts: rec.n_posts,
        in_degree: ds.graph().in_degree(node),
        out_degree: ds.graph().out_degree(node),
        retweet_fraction: rec.retweet_fraction,
        top_hashtags: rec.top_hashtags(5),
        random_string_probability: prob,
        label: ds.labels().and_then(|l| l.get(id)),
        flag: session.and_then(|s| s.flags.get(id)).map(|f| f.state),
    })
}

async fn account(State(state): State<Arc<AppState>>, Path((d, id)): Path<(String, String)>) -> ApiResult<Json<AccountCard>> {
    let ds = state.dataset(&d)?;
    account_card(&state, ds, &id, None)
        .map(Json)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "account_not_found", format!("no account '{id}' in '{d}'")))
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    dataset: String,
    #[serde(default)]
    space: Option<String>,
    #[serde(default)]
    notes: String,
    #[serde(default)]
    request_id: Option<String>,
}

fn session_json(s: &Session) -> ApiResult<Value> {
    Ok(serde_json::to_value(s).map_err(Error::from)?)
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(body) = body?;
    if let Some(rid) = &body.request_id {
        if let Some(existing) = state.sessions.find_by_creation_request(rid).await {
            return Ok((StatusCode::CREATED, Json(session_json(&*existing.lock().await)?)));
        }
    }
    let ds = state.dataset(&body.dataset)?;
    if let Some(space) = &body.space {
        ds.space(space)?;
    }
    let mut session = Session::new(body.dataset.clone(), body.space.clone(), body.notes);
    session.creation_request = body.request_id;
    let value = session_json(&session)?;
    state.sessions.insert(session)?;
    Ok((StatusCode::CREATED, Json(value)))
}

async fn import_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<Session>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<Value>)> {
    let Json(session) = body?;
    session.validate()?;
    let ds = state.dataset(&session.dataset)?;
    if let Some(bad) = session.flags.keys().find(|id| ds.account(id).is_none()) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "account_not_found", format!("flag for unknown account '{bad}'")));
    }
    let value = session_json(&session)?;
    state.sessions.insert(session)?;
    Ok((StatusCode::CREATED, Json(value)))
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = state.sessions.get(&id).ok_or_else(|| session_not_found(&id))?;
    let guard = s.lock().await;
    Ok(Json(session_json(&guard)?))
}

/// The canonical session document, byte-identical across export, import
/// and export.
async fn export_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = state.sessions.get(&id).ok_or_else(|| session_not_found(&id))?;
    let body = s.lock().await.to_canonical_json()?;
    Ok(([(axum::http::header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[derive(Debug, Deserialize)]
struct QueryBody {
    seeds: Vec<String>,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default)]
    space: Option<String>,
    #[serde(default)]
    aggregation: Aggregation,
    #[serde(default)]
    request_id: Option<String>,
}

fn default_k() -> usize {
    10
}

#[derive(Debug, Serialize)]
struct QueryReply {
    query_id: String,
    parent: Option<String>,
    result: QueryResult,
    cards: Vec<AccountCard>,
}

async fn session_query(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<QueryBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(body) = body?;
    let shared = state.sessions.get(&id).ok_or_else(|| session_not_found(&id))?;
    let mut session = shared.lock().await;
    if let Some(cached) = body.request_id.as_ref().and_then(|r| session.responses.get(r)) {
        return Ok(Json(cached.clone()));
    }
    if body.k == 0 {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_k", "k must be at least 1"));
    }
    let ds = state.dataset(&session.dataset)?.clone();
    let space_name = body
        .space
        .clone()
        .or_else(|| session.active_space.clone())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "invalid_argument", "no space given and no active space"))?;
    let space = ds.space(&space_name)?.clone();
    let seeds = body.seeds.clone();
    let (k, agg) = (body.k, body.aggregation);
    let result = tokio::task::spawn_blocking(move || query(&space, &seeds, k, agg))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    let parent = session.parent_for(&result.seeds);
    let query_id = session.next_query_id();
    session.history.push(QueryRecord {
        query_id: query_id.clone(),
        parent: parent.clone(),
        seeds: result.seeds.clone(),
        space: result.space.clone(),
        k,
        aggregation: agg,
        hits: result.hits.clone(),
        timestamp: session::now_utc(),
    });
    session.active_space = Some(space_name);
    let cards = result.hits.iter().filter_map(|h| account_card(&state, &ds, &h.id, Some(&*session))).collect();
    let reply = serde_json::to_value(QueryReply { query_id, parent, result, cards }).map_err(Error::from)?;
    if let Some(r) = body.request_id {
        session.responses.insert(r, reply.clone());
    }
    state.sessions.persist(&session)?;
    Ok(Json(reply))
}

#[derive(Debug, Deserialize)]
struct FlagBody {
    account_id: String,
    state: FlagState,
    #[serde(default)]
    request_id: Option<String>,
}

async fn session_flags(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<FlagBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(body) = body?;
    let shared = state.sessions.get(&id).ok_or_else(|| session_not_found(&id))?;
    let mut session = shared.lock().await;
    if let Some(cached) = body.request_id.as_ref().and_then(|r| session.responses.get(r)) {
        return Ok(Json(cached.clone()));
    }
    let ds = state.dataset(&session.dataset)?;
    if ds.account(&body.account_id).is_none() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "account_not_found",
            format!("no account '{}' in '{}'", body.account_id, session.dataset),
        ));
    }
    session.flags.insert(body.account_id, Flag { state: body.state, timestamp: session::now_utc() });
    let reply = serde_json::to_value(&session.flags).map_err(Error::from)?;
    let reply = json!({"flags": reply});
    if let Some(r) = body.request_id {
        session.responses.insert(r, reply.clone());
    }
    state.sessions.persist(&session)?;
    Ok(Json(reply))
}
