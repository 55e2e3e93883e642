use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceStep {
    Thought { text: String },
    Action { tool: String, input: String },
    Observation { text: String },
    Final { text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    KgHit,
    KgMiss,
    DirectOnly,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::KgHit => "kg_hit",
            Route::KgMiss => "kg_miss",
            Route::DirectOnly => "direct_only",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The wire shape of one trace step: `{"type", "text", "tool"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(rename = "type")]
    pub kind: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool: Option<String>,
}

impl From<&TraceStep> for StepRecord {
    fn from(step: &TraceStep) -> Self {
        let (kind, text, tool) = match step {
            TraceStep::Thought { text } => ("thought", text, None),
            TraceStep::Action { tool, input } => ("action", input, Some(tool.clone())),
            TraceStep::Observation { text } => ("observation", text, None),
            TraceStep::Final { text } => ("final", text, None),
        };
        StepRecord { kind: kind.to_string(), text: text.clone(), tool }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub id: String,
    pub question: String,
    pub steps: Vec<TraceStep>,
    pub route: Option<Route>,
    pub final_answer: String,
    pub pending_ids: Vec<String>,
    pub created_at: DateTime<Utc>,
}

impl AgentTrace {
    pub fn records(&self) -> Vec<StepRecord> {
        self.steps.iter().map(StepRecord::from).collect()
    }

    /// Tool calls in order, as (tool, input, observation).
    pub fn actions(&self) -> Vec<(&str, &str, Option<&str>)> {
        let mut out = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            if let TraceStep::Action { tool, input } = step {
                let obs = match self.steps.get(i + 1) {
                    Some(TraceStep::Observation { text }) => Some(text.as_str()),
                    _ => None,
                };
                out.push((tool.as_str(), input.as_str(), obs));
            }
        }
        out
    }

    /// Human-readable Thought/Action/Observation listing.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            let line = match step {
                TraceStep::Thought { text } => format!("Thought: {text}"),
                TraceStep::Action { tool, input } => format!("Action: {tool}\nAction Input: {input}"),
                TraceStep::Observation { text } => format!("Observation: {text}"),
                TraceStep::Final { text } => format!("Final Answer: {text}"),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// One JSON record per step, newline terminated.
    pub fn render_records(&self) -> String {
        self.records()
            .iter()
            .map(|r| serde_json::to_string(r).expect("record serializes") + "\n")
            .collect()
    }
}
