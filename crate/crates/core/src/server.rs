//! JSON-over-HTTP access to sessions, used by the workbench.
//!
//! Each session has one writer at a time: a mutating request that finds the
//! session busy gets 409 instead of queueing. Reads are served from the
//! snapshot taken after the last write.

use crate::arc::{ArcTask, TaskStore};
use crate::harness::Harness;
use crate::llm::ChatModel;
use crate::resynth::IoConstraint;
use crate::session::{system_clock, Clock, EditOp, Session, SessionError};
use crate::value::Value;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::{Mutex, RwLock};
use serde::Deserialize;
use serde_json::json;
use std::collections::HashMap;
use std::sync::Arc;

struct Slot {
    writer: Mutex<Session>,
    snapshot: RwLock<Arc<Session>>,
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Slot>>>>,
    pub tasks: Option<TaskStore>,
    pub llm: Arc<dyn ChatModel>,
    pub harness: Arc<dyn Harness>,
    pub clock: Clock,
}

impl AppState {
    pub fn new(llm: Arc<dyn ChatModel>, harness: Arc<dyn Harness>) -> Self {
        AppState {
            sessions: Arc::default(),
            tasks: None,
            llm,
            harness,
            clock: system_clock(),
        }
    }

    pub fn with_tasks(mut self, tasks: TaskStore) -> Self {
        self.tasks = Some(tasks);
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    /// Snapshot of a session, for tests and embedding.
    pub fn session(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.read().get(id).map(|s| s.snapshot.read().clone())
    }
}

pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, body: serde_json::Value) -> Self {
        ApiError { status, body }
    }

    fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, json!({"error": "not_found", "message": what}))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        use SessionError::*;
        let status = match &e {
            Parse { .. } | SketchInvalid { .. } | Edit { .. } | UnknownFunction { .. } | UnknownHole { .. } | NoConstraints { .. } => {
                StatusCode::BAD_REQUEST
            }
            NotCompiled => StatusCode::CONFLICT,
            ExhaustedAttempts { .. } | RuntimeFault { .. } | Timeout | NoCandidatePasses { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            Llm { .. } => StatusCode::BAD_GATEWAY,
            Harness { .. } => StatusCode::SERVICE_UNAVAILABLE,
            Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = serde_json::to_value(&e).expect("error serializes");
        body["message"] = json!(e.to_string());
        ApiError::new(status, body)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult = Result<Json<serde_json::Value>, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/edit", post(edit))
        .route("/sessions/:id/trace", post(trace))
        .route("/sessions/:id/constraints", post(add_constraint))
        .route("/sessions/:id/resynthesize", post(resynthesize))
        .route("/sessions/:id/check", post(check))
        .route("/sessions/:id/log.csv", get(log_csv))
        .route("/tasks/:id", get(get_task))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

fn view(s: &Session) -> serde_json::Value {
    json!({
        "session_id": s.session_id,
        "task_id": s.task.task_id,
        "anpl": s.anpl.render(),
        "holes": s.anpl.holes(),
        "compiled": s.compiled,
        "constraints": s.constraints,
        "log_len": s.log().len(),
    })
}

#[derive(Deserialize)]
struct CreateBody {
    #[serde(default)]
    task_id: Option<String>,
    #[serde(default)]
    task: Option<serde_json::Value>,
    anpl: String,
}

fn load_task(state: &AppState, id: &str) -> Result<ArcTask, ApiError> {
    let store = state.tasks.as_ref().ok_or_else(|| ApiError::not_found("no task directory configured"))?;
    store.get(id).map_err(|e| match e {
        crate::arc::ArcError::Io { .. } => ApiError::not_found(&format!("task `{id}`")),
        other => ApiError::new(StatusCode::BAD_REQUEST, serde_json::to_value(&other).expect("serializes")),
    })
}

async fn create_session(State(state): State<AppState>, Json(body): Json<CreateBody>) -> ApiResult {
    let task = match (&body.task, &body.task_id) {
        (Some(t), id) => ArcTask::from_json(id.as_deref().unwrap_or("inline"), t.to_string().as_bytes())
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, serde_json::to_value(&e).expect("serializes")))?,
        (None, Some(id)) => load_task(&state, id)?,
        (None, None) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                json!({"error": "schema", "message": "`task_id` or `task` required"}),
            ))
        }
    };
    let st = state.clone();
    let (session, compiled) = blocking(move || Session::create(task, &body.anpl, st.llm.as_ref(), st.clock.clone())).await??;
    let mut out = view(&session);
    if let Err(e) = compiled {
        out["compile_error"] = serde_json::to_value(&e).expect("serializes");
    }
    let id = session.session_id.clone();
    let snapshot = Arc::new(session.clone());
    state.sessions.write().insert(
        id,
        Arc::new(Slot {
            writer: Mutex::new(session),
            snapshot: RwLock::new(snapshot),
        }),
    );
    Ok(Json(out))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, json!({"error": "internal", "message": e.to_string()})))
}

fn slot(state: &AppState, id: &str) -> Result<Arc<Slot>, ApiError> {
    state
        .sessions
        .read()
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::not_found(&format!("session `{id}`")))
}

/// Runs `f` as the session's single writer, then refreshes the snapshot.
async fn write<F>(state: &AppState, id: &str, f: F) -> ApiResult
where
    F: FnOnce(&mut Session, &AppState) -> Result<serde_json::Value, SessionError> + Send + 'static,
{
    let slot = slot(state, id)?;
    let st = state.clone();
    blocking(move || {
        let Some(mut guard) = slot.writer.try_lock() else {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                json!({"error": "busy", "message": "another request is modifying this session"}),
            ));
        };
        let r = f(&mut guard, &st);
        *slot.snapshot.write() = Arc::new(guard.clone());
        r.map(Json).map_err(ApiError::from)
    })
    .await?
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let s = slot(&state, &id)?.snapshot.read().clone();
    Ok(Json(view(&s)))
}

async fn edit(State(state): State<AppState>, Path(id): Path<String>, Json(op): Json<EditOp>) -> ApiResult {
    write(&state, &id, move |s, st| {
        let delta = s.apply_edit(&op, st.llm.as_ref())?;
        Ok(json!({"delta": delta, "compiled": s.compiled}))
    })
    .await
}

#[derive(Deserialize)]
struct TraceBody {
    #[serde(default)]
    functions: Vec<String>,
    input: Value,
}

async fn trace(State(state): State<AppState>, Path(id): Path<String>, Json(body): Json<TraceBody>) -> ApiResult {
    write(&state, &id, move |s, st| {
        let report = s.trace(&body.functions, &body.input, st.harness.as_ref())?;
        Ok(serde_json::to_value(report).expect("serializes"))
    })
    .await
}

async fn add_constraint(State(state): State<AppState>, Path(id): Path<String>, Json(c): Json<IoConstraint>) -> ApiResult {
    write(&state, &id, move |s, _| {
        let hole = c.hole_id.clone();
        let added = s.add_constraint(c)?;
        Ok(json!({"added": added, "count": s.constraints.get(&hole).len()}))
    })
    .await
}

#[derive(Deserialize)]
struct ResynthBody {
    hole_id: String,
}

async fn resynthesize(State(state): State<AppState>, Path(id): Path<String>, Json(body): Json<ResynthBody>) -> ApiResult {
    write(&state, &id, move |s, st| {
        let out = s.resynthesize(&body.hole_id, st.llm.as_ref(), st.harness.as_ref())?;
        Ok(json!({"selected": out.selected, "fill_name": out.fill_name, "report": out.report, "compiled": s.compiled}))
    })
    .await
}

async fn check(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    write(&state, &id, move |s, st| {
        let v = s.check(st.harness.as_ref())?;
        Ok(serde_json::to_value(v).expect("serializes"))
    })
    .await
}

async fn log_csv(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = slot(&state, &id)?.snapshot.read().clone();
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], s.export_log()).into_response())
}

async fn get_task(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let t = load_task(&state, &id)?;
    Ok(Json(json!({"task_id": t.task_id, "train": t.train, "test": t.test})))
}
