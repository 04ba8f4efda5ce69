//! HTTP API over a session, used by the review UI.
//!
//! Reads go straight to the session files. Mutations take a per-session
//! lock. Filtering and generation run as background jobs polled through
//! `/api/job/{id}`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tower_http::services::{ServeDir, ServeFile};

use crate::filter::{FilterConfig, Level};
use crate::pipeline::{self, FilterOutcome, GenerateSummary, PipelineError, Selection};
use crate::session::{Annotation, Session, SessionError};
use crate::transform::{GeneratorConfig, NoveltyRecord, Status, TransformError};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Directory of UI assets served at `/`. A placeholder page is served
    /// when absent.
    pub static_dir: Option<PathBuf>,
    /// Filter jobs allowed to run at once.
    pub filter_jobs: usize,
    /// Worker threads per job.
    pub workers: Option<usize>,
    pub filter: FilterConfig,
    pub generator: GeneratorConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            static_dir: None,
            filter_jobs: 2,
            workers: None,
            filter: FilterConfig::default(),
            generator: GeneratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Done { result: Value },
    Failed { error: ErrorBody },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_keys: Option<Vec<String>>,
}

struct Inner {
    session: Session,
    config: ServiceConfig,
    write_lock: Mutex<()>,
    jobs: RwLock<HashMap<String, (String, JobState)>>,
    next_job: AtomicU64,
    filter_slots: Semaphore,
    generate_slot: Semaphore,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(session: Session, config: ServiceConfig) -> Self {
        Self(Arc::new(Inner {
            filter_slots: Semaphore::new(config.filter_jobs.max(1)),
            generate_slot: Semaphore::new(1),
            session,
            config,
            write_lock: Mutex::new(()),
            jobs: RwLock::new(HashMap::new()),
            next_job: AtomicU64::new(1),
        }))
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ()> {
        self.0.write_lock.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn set_job(&self, id: &str, kind: &str, state: JobState) {
        self.0
            .jobs
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id.to_string(), (kind.to_string(), state));
    }

    fn new_job(&self, kind: &str) -> String {
        let id = format!("job-{}", self.0.next_job.fetch_add(1, Ordering::Relaxed));
        self.set_job(&id, kind, JobState::Pending);
        id
    }
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                valid_keys: None,
            },
        }
    }
}

fn error_body(e: &PipelineError) -> ErrorBody {
    ErrorBody {
        code: e.code().to_string(),
        message: e.to_string(),
        valid_keys: match e {
            PipelineError::Transform(TransformError::InvalidOverride { valid, .. }) => Some(valid.clone()),
            _ => None,
        },
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match e.code() {
            "UNKNOWN_ID" => StatusCode::NOT_FOUND,
            "VERSION_CONFLICT" => StatusCode::CONFLICT,
            "INVALID_OVERRIDE" | "INVALID_PARAMS" | "CONFIG_ERROR" => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self {
            status,
            body: error_body(&e),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        PipelineError::from(e).into()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.body }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking session work off the async runtime.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string())))
}

fn etag(version: u64) -> HeaderValue {
    HeaderValue::from_str(&format!("\"{version}\"")).expect("ascii")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltySummary {
    pub id: String,
    pub kind: String,
    pub target: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchView {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    pub warnings: Vec<String>,
    /// Current annotations version, also sent as the `ETag` header.
    pub version: u64,
    pub novelties: Vec<NoveltySummary>,
}

async fn get_batch(State(app): State<AppState>) -> ApiResult<Response> {
    let view = blocking(move || {
        let s = &app.0.session;
        let batch = s.batch()?;
        let annotations = s.annotations()?;
        let mut novelties = Vec::with_capacity(batch.records.len());
        for r in &batch.records {
            novelties.push(NoveltySummary {
                id: r.id.clone(),
                kind: r.kind().tag().to_string(),
                target: r.target().to_string(),
                status: Session::effective_status(r, &annotations),
                level: s.report(&r.id)?.map(|x| x.level),
                parent: r.parent.clone(),
            });
        }
        Ok(BatchView {
            generator: batch.generator,
            warnings: batch.warnings,
            version: annotations.version,
            novelties,
        })
    })
    .await?;
    Ok(([(header::ETAG, etag(view.version))], Json(view)).into_response())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseText {
    pub domain: String,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoveltyView {
    /// The record, with its report when one exists.
    pub record: NoveltyRecord,
    /// Review status: the annotation if any, otherwise the record's own.
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<Annotation>,
    /// Ids from this record back to the root of its revision chain.
    pub lineage: Vec<String>,
    pub base: BaseText,
    pub version: u64,
}

async fn get_novelty(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let view = blocking(move || {
        let s = &app.0.session;
        let record = s.record(&id)?;
        let annotations = s.annotations()?;
        let (domain, problem) = s.base_text()?;
        Ok(NoveltyView {
            status: Session::effective_status(&record, &annotations),
            annotation: annotations.entries.get(&id).cloned(),
            lineage: s.batch()?.lineage(&id),
            record,
            base: BaseText { domain, problem },
            version: annotations.version,
        })
    })
    .await?;
    Ok(([(header::ETAG, etag(view.version))], Json(view)).into_response())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRequest {
    pub status: Status,
    #[serde(default)]
    pub note: String,
}

/// Reads the expected annotations version from `If-Match`, accepting both
/// `"3"` and `3`.
fn expected_version(headers: &HeaderMap) -> ApiResult<Option<u64>> {
    let Some(v) = headers.get(header::IF_MATCH) else {
        return Ok(None);
    };
    v.to_str()
        .ok()
        .map(|s| s.trim().trim_start_matches("W/").trim_matches('"'))
        .and_then(|s| s.parse().ok())
        .map(Some)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", "If-Match must hold a version number"))
}

async fn post_annotation(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(req): Json<AnnotationRequest>,
) -> ApiResult<Response> {
    if !matches!(req.status, Status::Accepted | Status::Rejected) {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "INVALID_STATUS",
            "annotation status must be accepted or rejected",
        ));
    }
    let expected = expected_version(&headers)?;
    let version = blocking(move || {
        let _guard = app.lock();
        app.0
            .session
            .annotate(
                &id,
                Annotation {
                    status: req.status,
                    note: req.note,
                },
                expected,
            )
            .map_err(|e| match e {
                SessionError::Conflict { current, .. } => {
                    let mut err = ApiError::from(e);
                    err.body.message = format!("{} (current version {current})", err.body.message);
                    err
                }
                e => e.into(),
            })
    })
    .await?;
    Ok(([(header::ETAG, etag(version))], Json(json!({ "version": version }))).into_response())
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviseRequest {
    #[serde(default)]
    pub overrides: serde_json::Map<String, Value>,
}

async fn post_revise(State(app): State<AppState>, Path(id): Path<String>, Json(req): Json<ReviseRequest>) -> ApiResult<Response> {
    let overrides: Vec<(String, String)> = req
        .overrides
        .into_iter()
        .map(|(k, v)| {
            let v = match v {
                Value::String(s) => s,
                other => other.to_string(),
            };
            (k, v)
        })
        .collect();
    let (record, lineage) = blocking(move || {
        let _guard = app.lock();
        let r = pipeline::revise_record(&app.0.session, &id, &overrides)?;
        let lineage = app.0.session.batch()?.lineage(&r.id);
        Ok((r, lineage))
    })
    .await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({ "id": record.id, "parent": record.parent, "lineage": lineage, "record": record })),
    )
        .into_response())
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterRequest {
    /// Ids to filter; all records when absent.
    #[serde(default)]
    pub ids: Option<Vec<String>>,
    /// Partial filter configuration overlaid on the service defaults.
    #[serde(default)]
    pub config: Value,
}

async fn post_filter(State(app): State<AppState>, Json(req): Json<FilterRequest>) -> ApiResult<Response> {
    let selection = match req.ids {
        Some(ids) => Selection::Ids(ids),
        None => Selection::All,
    };
    {
        let app = app.clone();
        let selection = selection.clone();
        blocking(move || Ok(pipeline::select(&app.0.session, &selection)?)).await?;
    }
    let job = app.new_job("filter");
    let job_id = job.clone();
    tokio::spawn(async move {
        let _permit = app.0.filter_slots.acquire().await;
        let worker = app.clone();
        let result = tokio::task::spawn_blocking(move || -> Result<Vec<FilterOutcome>, PipelineError> {
            let cfg = pipeline::with_overrides(&worker.0.config.filter, &req.config)?;
            let outcomes = pipeline::evaluate_selection(&worker.0.session, &selection, &cfg, worker.0.config.workers)?;
            let _guard = worker.lock();
            pipeline::persist_reports(&worker.0.session, &outcomes)?;
            Ok(outcomes)
        })
        .await;
        app.set_job(&job_id, "filter", finish(result));
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "job": job }))).into_response())
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    /// Partial generator configuration overlaid on the batch's last one.
    #[serde(default)]
    pub config: Value,
}

async fn post_generate(State(app): State<AppState>, Json(req): Json<GenerateRequest>) -> ApiResult<Response> {
    let job = app.new_job("generate");
    let job_id = job.clone();
    tokio::spawn(async move {
        let _permit = app.0.generate_slot.acquire().await;
        let worker = app.clone();
        let result = tokio::task::spawn_blocking(move || -> Result<GenerateSummary, PipelineError> {
            let _guard = worker.lock();
            let s = &worker.0.session;
            let current = s.batch()?.generator.unwrap_or_else(|| worker.0.config.generator.clone());
            let cfg = pipeline::with_overrides(&current, &req.config)?;
            pipeline::generate(s, &cfg, worker.0.config.workers)
        })
        .await;
        app.set_job(&job_id, "generate", finish(result));
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "job": job }))).into_response())
}

fn finish<T: Serialize>(result: Result<Result<T, PipelineError>, tokio::task::JoinError>) -> JobState {
    match result {
        Ok(Ok(v)) => JobState::Done {
            result: serde_json::to_value(v).expect("serializable"),
        },
        Ok(Err(e)) => JobState::Failed { error: error_body(&e) },
        Err(e) => JobState::Failed {
            error: ErrorBody {
                code: "INTERNAL".into(),
                message: e.to_string(),
                valid_keys: None,
            },
        },
    }
}

async fn get_job(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let jobs = app.0.jobs.read().unwrap_or_else(|e| e.into_inner());
    let (kind, state) = jobs
        .get(&id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_JOB", format!("unknown job `{id}`")))?;
    let mut body = serde_json::to_value(state).expect("serializable");
    body["id"] = json!(id);
    body["kind"] = json!(kind);
    Ok(Json(body).into_response())
}

const PLACEHOLDER_INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>noveltyforge review</title></head>
<body><h1>noveltyforge review</h1>
<p>No UI assets are installed. The JSON API is available under <code>/api</code>;
start with <a href=\"/api/batch\">/api/batch</a>.</p></body></html>
";

async fn placeholder() -> Html<&'static str> {
    Html(PLACEHOLDER_INDEX)
}

async fn api_not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such endpoint")
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/batch", get(get_batch))
        .route("/novelty/{id}", get(get_novelty))
        .route("/novelty/{id}/annotation", post(post_annotation))
        .route("/novelty/{id}/revise", post(post_revise))
        .route("/filter", post(post_filter))
        .route("/generate", post(post_generate))
        .route("/job/{id}", get(get_job))
        .fallback(api_not_found);
    let app = Router::new().nest("/api", api);
    let app = match &state.0.config.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(dir.join("index.html")))),
        None => app.route("/", get(placeholder)),
    };
    app.with_state(state)
}

/// Serves until interrupted with Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("serving {} on http://{}", state.0.session.root().display(), listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
