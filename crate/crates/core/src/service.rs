//! JSON-over-HTTP facade for the browser UI and other clients.
//!
//! Every failure is reported as `{"code", "message", "status"}` with a code
//! from [`ApiError`]'s closed set. Blocking engine work runs on the blocking
//! pool under a per-request timeout.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::agent::{AgentError, AgentTrace, StepRecord};
use crate::engine::{Engine, EngineConfig, EngineError};
use crate::kg::Triple;
use crate::llm::LlmError;
use crate::queue::{AdminAction, QueueError, Status, DEFAULT_ACTOR};

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_ASK_TIMEOUT_SECS: u64 = 120;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub ask_timeout_secs: u64,
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
    pub engine: EngineConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: DEFAULT_BIND.to_string(),
            ask_timeout_secs: DEFAULT_ASK_TIMEOUT_SECS,
            cors_origin: None,
            engine: EngineConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, EngineError> {
        toml::from_str(text).map_err(|e| EngineError::Io { path: "config".into(), reason: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| EngineError::Io { path: path.display().to_string(), reason: e.to_string() })?;
        toml::from_str(&text).map_err(|e| EngineError::Io { path: path.display().to_string(), reason: e.to_string() })
    }
}

/// An error response. `trace` carries the partial trace of a failed ask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub code: &'static str,
    pub message: String,
    pub status: u16,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Box<TraceBody>>,
}

impl ApiError {
    /// The closed set of (code, status) pairs.
    pub const CODES: [(&'static str, u16); 16] = [
        ("malformed_body", 400),
        ("bad_status_filter", 400),
        ("method_not_allowed", 400),
        ("not_found", 404),
        ("terminal_state", 409),
        ("illegal_transition", 409),
        ("no_evidence", 409),
        ("empty_question", 422),
        ("incomplete_triple", 422),
        ("slot_mismatch", 422),
        ("empty_record", 422),
        ("llm_failure", 502),
        ("loop_exceeded", 502),
        ("backend_unavailable", 503),
        ("timeout", 503),
        ("storage_unavailable", 503),
    ];

    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        let status = Self::CODES.iter().find(|(c, _)| *c == code).map_or(503, |(_, s)| *s);
        Self { code, message: message.into(), status, trace: None }
    }

    fn from_llm(e: &LlmError) -> Self {
        match e {
            LlmError::Timeout => Self::new("timeout", e.to_string()),
            e if e.is_unavailable() => Self::new("backend_unavailable", e.to_string()),
            e => Self::new("llm_failure", e.to_string()),
        }
    }
}

impl From<QueueError> for ApiError {
    fn from(e: QueueError) -> Self {
        let code = match &e {
            QueueError::UnknownId(_) => "not_found",
            QueueError::TerminalState { .. } => "terminal_state",
            QueueError::IllegalTransition { .. } => "illegal_transition",
            QueueError::IncompleteTriple(_) => "incomplete_triple",
            QueueError::SlotMismatch { .. } => "slot_mismatch",
            QueueError::EmptyRecord(_) => "empty_record",
            QueueError::NoEvidence(_) => "no_evidence",
            QueueError::Llm(inner) => return Self::from_llm(inner),
            QueueError::Log(_) => "storage_unavailable",
        };
        Self::new(code, e.to_string())
    }
}

impl From<AgentError> for ApiError {
    fn from(e: AgentError) -> Self {
        let mut err = match &e {
            AgentError::EmptyQuestion => Self::new("empty_question", "question must not be empty"),
            AgentError::LoopExceeded { .. } => Self::new("loop_exceeded", e.to_string()),
            AgentError::Llm { source, .. } => Self::from_llm(source),
            AgentError::Queue(q) => Self::from(q.clone()),
            AgentError::UnknownTool(_) => Self::new("llm_failure", e.to_string()),
        };
        err.trace = e.partial_trace().map(|t| Box::new(TraceBody::from(t)));
        err
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::SERVICE_UNAVAILABLE);
        (status, Json(self)).into_response()
    }
}

/// A trace as rendered on the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceBody {
    pub trace_id: String,
    pub question: String,
    pub route: Option<String>,
    pub final_answer: String,
    pub pending_ids: Vec<String>,
    pub created_at: String,
    pub steps: Vec<StepRecord>,
}

impl From<&AgentTrace> for TraceBody {
    fn from(t: &AgentTrace) -> Self {
        Self {
            trace_id: t.id.clone(),
            question: t.question.clone(),
            route: t.route.map(|r| r.as_str().to_string()),
            final_answer: t.final_answer.clone(),
            pending_ids: t.pending_ids.clone(),
            created_at: t.created_at.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            steps: t.records(),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub ask_timeout: Duration,
}

impl AppState {
    pub fn new(engine: Arc<Engine>) -> Self {
        Self { engine, ask_timeout: Duration::from_secs(DEFAULT_ASK_TIMEOUT_SECS) }
    }

    /// Runs `f` on the blocking pool under the request timeout.
    async fn blocking<T: Send + 'static>(
        &self,
        f: impl FnOnce(&Engine) -> Result<T, ApiError> + Send + 'static,
    ) -> Result<T, ApiError> {
        let engine = self.engine.clone();
        let task = tokio::task::spawn_blocking(move || f(&engine));
        match tokio::time::timeout(self.ask_timeout, task).await {
            Err(_) => Err(ApiError::new("timeout", format!("request exceeded {}s", self.ask_timeout.as_secs()))),
            Ok(Err(join)) => Err(ApiError::new("backend_unavailable", format!("worker failed: {join}"))),
            Ok(Ok(result)) => result,
        }
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new("malformed_body", e.to_string()))
}

/// An empty body stands for `{}`.
fn parse_optional_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_body(body)
}

#[derive(Deserialize)]
struct AskBody {
    question: String,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ActorBody {
    actor: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EditBody {
    triples: Vec<Triple>,
    actor: Option<String>,
}

async fn ask(State(state): State<AppState>, body: Bytes) -> Result<Json<TraceBody>, ApiError> {
    let AskBody { question } = parse_body(&body)?;
    if question.trim().is_empty() {
        return Err(ApiError::new("empty_question", "question must not be empty"));
    }
    state
        .blocking(move |engine| engine.ask(&question).map(|t| TraceBody::from(&t)).map_err(ApiError::from))
        .await
        .map(Json)
}

async fn get_trace(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<TraceBody>, ApiError> {
    state
        .engine
        .trace(&id)
        .map(|t| Json(TraceBody::from(&t)))
        .ok_or_else(|| ApiError::new("not_found", format!("no trace {id}")))
}

async fn list_pending(State(state): State<AppState>, Query(q): Query<HashMap<String, String>>) -> Result<Json<Value>, ApiError> {
    let status = match q.get("status").map(String::as_str) {
        None | Some("") | Some("all") => None,
        Some(s) => Some(s.parse::<Status>().map_err(|e| ApiError::new("bad_status_filter", e))?),
    };
    Ok(Json(json!({ "records": state.engine.pending(status) })))
}

async fn get_pending(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let rec = state.engine.pending_record(&id)?;
    Ok(Json(serde_json::to_value(rec).expect("record serializes")))
}

async fn pending_action(
    State(state): State<AppState>,
    UrlPath((id, action)): UrlPath<(String, String)>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let (action, actor) = match action.as_str() {
        "accept" => (AdminAction::AcceptDirect, parse_optional_body::<ActorBody>(&body)?.actor),
        "verify" => (AdminAction::Verify, parse_optional_body::<ActorBody>(&body)?.actor),
        "reject" => (AdminAction::Reject, parse_optional_body::<ActorBody>(&body)?.actor),
        "edit" => {
            let EditBody { triples, actor } = parse_body(&body)?;
            (AdminAction::Edit(triples), actor)
        }
        other => return Err(ApiError::new("not_found", format!("no action {other:?}"))),
    };
    let actor = actor.unwrap_or_else(|| DEFAULT_ACTOR.to_string());
    let rec = state
        .blocking(move |engine| engine.pending_action(&id, action, &actor).map_err(ApiError::from))
        .await?;
    Ok(Json(serde_json::to_value(rec).expect("record serializes")))
}

async fn kg_stats(State(state): State<AppState>) -> Json<Value> {
    Json(serde_json::to_value(state.engine.kg_stats()).expect("stats serialize"))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn not_found() -> ApiError {
    ApiError::new("not_found", "no such endpoint")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new("method_not_allowed", "method not allowed for this endpoint")
}

fn cors(origin: Option<&str>) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
        .allow_headers([axum::http::header::CONTENT_TYPE]);
    match origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => layer.allow_origin(AllowOrigin::exact(o)),
        None => layer.allow_origin(AllowOrigin::any()),
    }
}

pub fn router(state: AppState, cors_origin: Option<&str>) -> Router {
    Router::new()
        .route("/api/ask", post(ask))
        .route("/api/traces/{id}", get(get_trace))
        .route("/api/pending", get(list_pending))
        .route("/api/pending/{id}", get(get_pending))
        .route("/api/pending/{id}/{action}", post(pending_action))
        .route("/api/kg/stats", get(kg_stats))
        .route("/api/health", get(health))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .layer(cors(cors_origin))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), EngineError> {
    let engine = Arc::new(Engine::open(&config.engine)?);
    let state = AppState { engine, ask_timeout: Duration::from_secs(config.ask_timeout_secs.max(1)) };
    let app = router(state, config.cors_origin.as_deref());
    let addr: SocketAddr = config
        .bind
        .parse()
        .map_err(|e| EngineError::Io { path: config.bind.clone(), reason: format!("bad listen address: {e}") })?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| EngineError::Io { path: config.bind.clone(), reason: e.to_string() })?;
    tracing::info!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or_default());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| EngineError::Io { path: config.bind.clone(), reason: e.to_string() })
}
