//! Annotation HTTP API.
//!
//! ```text
//! POST /api/sessions             {coder_id, dimension_pool: "all" | [codes] | "code", seed?}
//! GET  /api/sessions/{id}/next   -> {post_id, text, remaining, done}
//! POST /api/sessions/{id}/labels {post_id, labels: {dim: label}} | {post_id, all_offtopic: true}
//! GET  /api/progress             -> {dim: labeled post count}
//! ```
//!
//! Errors are `{error: code, message}`. The label store is written after
//! every accepted submission.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use clap::Args;
use serde::Deserialize;
use serde_json::{json, Value};

use swb_core::annotation::{progress, AnnotationError, AnnotationSession, LabelStore, Submission};
use swb_core::corpus::{read_jsonl, Post};
use swb_core::dimension::Dimension;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub bind: String,
}

pub struct AppState {
    texts: HashMap<String, String>,
    candidates: BTreeMap<Dimension, Vec<String>>,
    store: Mutex<LabelStore>,
    sessions: Mutex<HashMap<String, AnnotationSession>>,
    labels_path: Option<PathBuf>,
    default_seed: u64,
    next_id: AtomicU64,
}

impl AppState {
    /// In-memory state; `labels_path` is where the store is persisted, if anywhere.
    pub fn new(
        posts: &BTreeMap<Dimension, Vec<Post>>,
        store: LabelStore,
        labels_path: Option<PathBuf>,
        default_seed: u64,
    ) -> Self {
        let mut texts = HashMap::new();
        let mut candidates = BTreeMap::new();
        for (d, list) in posts {
            for p in list {
                texts.insert(p.id.clone(), p.text.clone());
            }
            candidates.insert(*d, list.iter().map(|p| p.id.clone()).collect());
        }
        AppState {
            texts,
            candidates,
            store: Mutex::new(store),
            sessions: Mutex::new(HashMap::new()),
            labels_path,
            default_seed,
            next_id: AtomicU64::new(1),
        }
    }

    /// Candidate pools written by `select` plus the corpus label store.
    pub fn load(config: &RunConfig) -> Result<Self> {
        let layout = config.existing_layout()?;
        let mut posts = BTreeMap::new();
        for d in Dimension::ALL {
            let path = layout.candidates_path(d);
            if path.exists() {
                posts.insert(d, read_jsonl::<Post>(&path)?);
            }
        }
        let labels_path = layout.labels_path();
        let store = LabelStore::load(&labels_path)?;
        Ok(AppState::new(&posts, store, Some(labels_path), config.seed))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let (status, code) = match &e {
            AnnotationError::NothingToAnnotate => (StatusCode::UNPROCESSABLE_ENTITY, "nothing_to_annotate"),
            AnnotationError::UnknownDimension(_) => (StatusCode::BAD_REQUEST, "unknown_dimension"),
            AnnotationError::UnknownLabel { .. } => (StatusCode::BAD_REQUEST, "unknown_label"),
            AnnotationError::StaleCursor { .. } => (StatusCode::CONFLICT, "stale_cursor"),
            AnnotationError::EmptyTrainingSet(_) => (StatusCode::UNPROCESSABLE_ENTITY, "empty_training_set"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult = std::result::Result<Json<Value>, ApiError>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> std::result::Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Pool {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
struct OpenRequest {
    coder_id: String,
    #[serde(default)]
    dimension_pool: Option<Pool>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct LabelRequest {
    post_id: String,
    #[serde(default)]
    labels: Option<BTreeMap<String, String>>,
    #[serde(default)]
    all_offtopic: bool,
}

fn pool_dimensions(pool: Option<Pool>) -> std::result::Result<Vec<Dimension>, ApiError> {
    let codes = match pool {
        None => return Ok(Dimension::ALL.to_vec()),
        Some(Pool::One(s)) if s == "all" => return Ok(Dimension::ALL.to_vec()),
        Some(Pool::One(s)) => vec![s],
        Some(Pool::Many(v)) => v,
    };
    codes
        .into_iter()
        .map(|c| c.parse().map_err(|_| AnnotationError::UnknownDimension(c).into()))
        .collect()
}

async fn open_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: OpenRequest = parse_body(&body)?;
    if req.coder_id.trim().is_empty() {
        return Err(ApiError::bad_request("coder_id must not be empty"));
    }
    let dims = pool_dimensions(req.dimension_pool)?;
    let pool = dims
        .iter()
        .filter_map(|d| state.candidates.get(d))
        .flatten()
        .map(String::as_str);
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let session = {
        let store = state.store.lock().expect("store lock");
        AnnotationSession::open(&id, &req.coder_id, pool, req.seed.unwrap_or(state.default_seed), &store)?
    };
    let remaining = session.remaining();
    state.sessions.lock().expect("session lock").insert(id.clone(), session);
    Ok(Json(json!({"session_id": id, "remaining": remaining})))
}

fn unknown_session(id: &str) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}"))
}

async fn next_post(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let sessions = state.sessions.lock().expect("session lock");
    let session = sessions.get(&id).ok_or_else(|| unknown_session(&id))?;
    Ok(Json(match session.current() {
        Some(post_id) => json!({
            "post_id": post_id,
            "text": state.texts.get(post_id).cloned().unwrap_or_default(),
            "remaining": session.remaining(),
            "done": false,
        }),
        None => json!({"post_id": null, "text": null, "remaining": 0, "done": true}),
    }))
}

async fn submit_labels(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: LabelRequest = parse_body(&body)?;
    let submission = match (req.all_offtopic, req.labels) {
        (true, Some(l)) if !l.is_empty() => {
            return Err(ApiError::bad_request("all_offtopic cannot be combined with labels"));
        }
        (true, _) => Submission::AllOfftopic,
        (false, labels) => Submission::Labels(labels.unwrap_or_default()),
    };
    let mut sessions = state.sessions.lock().expect("session lock");
    let session = sessions.get_mut(&id).ok_or_else(|| unknown_session(&id))?;
    let mut store = state.store.lock().expect("store lock");
    let cursor = session.submit(&mut store, &req.post_id, &submission, Utc::now())?;
    if let Some(path) = &state.labels_path {
        store
            .save(path)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string()))?;
    }
    Ok(Json(json!({"ok": true, "cursor": cursor})))
}

async fn progress_counts(State(state): State<Arc<AppState>>) -> Json<Value> {
    let store = state.store.lock().expect("store lock");
    let counts: serde_json::Map<String, Value> = progress(&store)
        .into_iter()
        .map(|(d, n)| (d.code().to_string(), json!(n)))
        .collect();
    Json(Value::Object(counts))
}

pub fn build_router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/sessions", post(open_session))
        .route("/api/sessions/{id}/next", get(next_post))
        .route("/api/sessions/{id}/labels", post(submit_labels))
        .route("/api/progress", get(progress_counts))
        .with_state(state)
}

pub fn serve(config: &RunConfig, args: &ServeArgs, out: &mut dyn Write) -> Result<()> {
    let state = Arc::new(AppState::load(config)?);
    let addr: SocketAddr = format!("{}:{}", args.bind, args.port)
        .parse()
        .map_err(|_| CliError::Config(format!("bad bind address {}:{}", args.bind, args.port)))?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::io("<runtime>"))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(CliError::io(addr.to_string()))?;
        let local = listener.local_addr().map_err(CliError::io(addr.to_string()))?;
        writeln!(out, "listening on http://{local}").map_err(CliError::io("<stdout>"))?;
        out.flush().map_err(CliError::io("<stdout>"))?;
        axum::serve(listener, build_router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::io(local.to_string()))
    })
}
