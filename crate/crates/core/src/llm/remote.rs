//! Chat-completion backend over HTTP (OpenAI-compatible request shape).

use std::env;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{LlmBackend, LlmError, LlmRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub api_key: Option<String>,
}

fn default_model() -> String {
    "default".to_string()
}

fn default_timeout() -> u64 {
    60
}

fn default_in_flight() -> usize {
    4
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: default_model(),
            timeout_secs: default_timeout(),
            max_in_flight: default_in_flight(),
            api_key: None,
        }
    }

    /// Applies `COGMG_REMOTE_MODEL`, `COGMG_REMOTE_TIMEOUT`,
    /// `COGMG_REMOTE_MAX_IN_FLIGHT` and `COGMG_REMOTE_API_KEY` when set.
    pub fn with_env_overrides(mut self) -> Self {
        if let Ok(m) = env::var("COGMG_REMOTE_MODEL") {
            self.model = m;
        }
        if let Some(t) = env::var("COGMG_REMOTE_TIMEOUT").ok().and_then(|v| v.parse().ok()) {
            self.timeout_secs = t;
        }
        if let Some(n) = env::var("COGMG_REMOTE_MAX_IN_FLIGHT").ok().and_then(|v| v.parse().ok()) {
            self.max_in_flight = n;
        }
        if let Ok(k) = env::var("COGMG_REMOTE_API_KEY") {
            self.api_key = Some(k);
        }
        self
    }
}

struct InFlight {
    cap: usize,
    used: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut used = self.used.lock().unwrap_or_else(|e| e.into_inner());
        while *used >= self.cap {
            used = self.freed.wait(used).unwrap_or_else(|e| e.into_inner());
        }
        *used += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        let mut used = self.0.used.lock().unwrap_or_else(|e| e.into_inner());
        *used -= 1;
        self.0.freed.notify_one();
    }
}

pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
    in_flight: InFlight,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        let cap = config.max_in_flight.max(1);
        Self { config, agent, in_flight: InFlight { cap, used: Mutex::new(0), freed: Condvar::new() } }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }
}

impl LlmBackend for RemoteBackend {
    fn tag(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &LlmRequest, prompt: &str) -> Result<String, LlmError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": request.role.default_temperature(),
            "max_tokens": request.budget,
        });
        let _slot = self.in_flight.acquire();
        let mut req = self.agent.post(&self.config.endpoint).header("content-type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(map_transport)?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(LlmError::RemoteUnavailable(status));
        }
        let value: Value = resp.body_mut().read_json().map_err(map_transport)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| LlmError::MalformedOutput("chat response has no choices[0].message.content".into()))
    }
}

fn map_transport(e: ureq::Error) -> LlmError {
    match e {
        ureq::Error::Timeout(_) => LlmError::Timeout,
        ureq::Error::StatusCode(code) => LlmError::RemoteUnavailable(code),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => LlmError::Timeout,
        other => LlmError::Transport(other.to_string()),
    }
}
