//! The single boundary to the language model.
//!
//! Every model call goes through [`Gateway`], which renders the role's prompt
//! template and hands it to a pluggable [`LlmBackend`].

mod parse;
mod remote;
mod role;
mod scripted;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

pub use parse::{parse_completions, parse_decomposition_steps, parse_triples, render_steps, render_triples};
pub use remote::{RemoteBackend, RemoteConfig};
pub use role::{render_documents, render_prompt, LlmRole};
pub use scripted::{ScriptedBackend, ScriptedBehavior};

pub const DEFAULT_BUDGET: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("MissingVariable: {0}")]
    MissingVariable(String),
    #[error("NoScriptedResponse for role {0}")]
    NoScriptedResponse(LlmRole),
    #[error("RemoteUnavailable: HTTP {0}")]
    RemoteUnavailable(u16),
    #[error("Timeout waiting for the model")]
    Timeout,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("MalformedOutput: {0}")]
    MalformedOutput(String),
    #[error("InvalidTriple: {0}")]
    InvalidTriple(String),
    #[error("SlotMismatch at triple {index}: expected {expected}, got {got}")]
    SlotMismatch { index: usize, expected: String, got: String },
    #[error("backend configuration: {0}")]
    Config(String),
}

impl LlmError {
    /// The backend itself could not be reached, as opposed to replying badly.
    pub fn is_unavailable(&self) -> bool {
        matches!(self, LlmError::RemoteUnavailable(_) | LlmError::Timeout | LlmError::Transport(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LlmRequest {
    pub role: LlmRole,
    pub variables: BTreeMap<String, String>,
    pub budget: usize,
}

impl LlmRequest {
    pub fn new(role: LlmRole, variables: BTreeMap<String, String>) -> Self {
        Self { role, variables, budget: DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LlmResponse {
    pub text: String,
    pub backend_tag: String,
    pub latency: Duration,
}

pub trait LlmBackend: Send + Sync {
    fn tag(&self) -> &str;
    fn complete(&self, request: &LlmRequest, prompt: &str) -> Result<String, LlmError>;
}

#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn LlmBackend>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("backend", &self.backend.tag()).finish()
    }
}

impl Gateway {
    pub fn new(backend: Arc<dyn LlmBackend>) -> Self {
        Self { backend }
    }

    pub fn scripted(script: ScriptedBehavior) -> Self {
        Self::new(Arc::new(ScriptedBackend::new(script)))
    }

    pub fn remote(config: RemoteConfig) -> Self {
        Self::new(Arc::new(RemoteBackend::new(config)))
    }

    pub fn backend_tag(&self) -> &str {
        self.backend.tag()
    }

    pub fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        let prompt = render_prompt(request.role, &request.variables)?;
        let started = Instant::now();
        let text = self.backend.complete(request, &prompt)?;
        Ok(LlmResponse { text, backend_tag: self.backend.tag().to_string(), latency: started.elapsed() })
    }

    pub fn call(&self, role: LlmRole, variables: BTreeMap<String, String>) -> Result<LlmResponse, LlmError> {
        self.complete(&LlmRequest::new(role, variables))
    }
}

/// Builds a variable map from `(name, value)` pairs.
pub fn vars<const N: usize>(pairs: [(&str, &str); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}
