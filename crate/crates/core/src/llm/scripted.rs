//! Deterministic table-driven backend.
//!
//! Script files are line-delimited records:
//! `{"role":"...","match":{"exact":{...vars}},"response":"..."}` or
//! `{"role":"...","match":{"pattern":"substring"},"response":"..."}`.
//! Exact entries match the full variable map; patterns are substrings of the
//! rendered prompt and are tried in file order. Responses may reference
//! request variables as `{name}`.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Read};

use serde::Deserialize;

use super::role::substitute;
use super::{LlmBackend, LlmError, LlmRequest, LlmRole};

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MatchSpec {
    Exact(BTreeMap<String, String>),
    Pattern(String),
}

#[derive(Debug, Deserialize)]
struct ScriptRecord {
    role: LlmRole,
    #[serde(rename = "match")]
    matcher: MatchSpec,
    response: String,
}

#[derive(Debug, Clone, Default)]
pub struct ScriptedBehavior {
    exact: HashMap<(LlmRole, String), String>,
    fallbacks: Vec<(LlmRole, String, String)>,
}

fn canonical_key(vars: &BTreeMap<String, String>) -> String {
    serde_json::to_string(vars).expect("string map serializes")
}

impl ScriptedBehavior {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(source: impl Read) -> Result<Self, LlmError> {
        let mut script = Self::new();
        for (i, line) in BufReader::new(source).lines().enumerate() {
            let line = line.map_err(|e| LlmError::Config(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ScriptRecord = serde_json::from_str(&line)
                .map_err(|e| LlmError::Config(format!("script line {}: {e}", i + 1)))?;
            match rec.matcher {
                MatchSpec::Exact(vars) => script.add_exact(rec.role, vars, rec.response),
                MatchSpec::Pattern(p) => script.add_pattern(rec.role, p, rec.response),
            }
        }
        Ok(script)
    }

    pub fn parse_str(text: &str) -> Result<Self, LlmError> {
        Self::parse(text.as_bytes())
    }

    /// Later exact entries for the same key replace earlier ones.
    pub fn add_exact(&mut self, role: LlmRole, vars: BTreeMap<String, String>, response: impl Into<String>) {
        self.exact.insert((role, canonical_key(&vars)), response.into());
    }

    pub fn add_pattern(&mut self, role: LlmRole, pattern: impl Into<String>, response: impl Into<String>) {
        self.fallbacks.push((role, pattern.into(), response.into()));
    }

    /// Appends all entries of `other` after this script's own.
    pub fn extend(&mut self, other: ScriptedBehavior) {
        self.exact.extend(other.exact);
        self.fallbacks.extend(other.fallbacks);
    }

    pub fn lookup(&self, request: &LlmRequest, prompt: &str) -> Result<String, LlmError> {
        let template = self
            .exact
            .get(&(request.role, canonical_key(&request.variables)))
            .or_else(|| {
                self.fallbacks
                    .iter()
                    .find(|(role, pattern, _)| *role == request.role && prompt.contains(pattern.as_str()))
                    .map(|(_, _, r)| r)
            })
            .ok_or(LlmError::NoScriptedResponse(request.role))?;
        substitute(template, &request.variables, false)
    }
}

#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    script: ScriptedBehavior,
}

impl ScriptedBackend {
    pub fn new(script: ScriptedBehavior) -> Self {
        Self { script }
    }
}

impl LlmBackend for ScriptedBackend {
    fn tag(&self) -> &str {
        "scripted"
    }

    fn complete(&self, request: &LlmRequest, prompt: &str) -> Result<String, LlmError> {
        self.script.lookup(request, prompt)
    }
}
