//! Question answering over two routes.
//!
//! The agent always tries the knowledge graph first. If the formal query
//! fails, it spells out the missing knowledge as incomplete triples, has the
//! model complete them, answers from the completions, and queues them for
//! review. Every step is recorded as a Thought/Action/Observation trace.

mod trace;

use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::clock::Clock;
use crate::kg::{KnowledgeGraph, Triple};
use crate::kopl::{self, ExecResult, FAILED};
use crate::llm::{self, parse_completions, parse_decomposition_steps, parse_triples, render_steps, render_triples, Gateway, LlmError, LlmRole};
use crate::queue::{KnowledgeQueue, QueueError, AGENT_ACTOR};

pub use trace::{AgentTrace, Route, StepRecord, TraceStep};

pub const QUERY_KG: &str = "query_kg";
pub const COMPLETE_KNOWLEDGE: &str = "complete_knowledge";
pub const DEFAULT_MAX_ACTIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tool {
    pub name: &'static str,
    pub description: &'static str,
}

pub const TOOLS: [Tool; 2] = [
    Tool {
        name: QUERY_KG,
        description: "Translate numbered query steps into a KoPL program and run it against the knowledge graph. Returns the answer or \"Failed\".",
    },
    Tool {
        name: COMPLETE_KNOWLEDGE,
        description: "Fill the unknown slots of triples from model knowledge. Input is a question line followed by one triple per line.",
    },
];

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("EmptyQuestion")]
    EmptyQuestion,
    #[error("AgentLoopExceeded: more than {limit} tool actions")]
    LoopExceeded { limit: usize, trace: Box<AgentTrace> },
    #[error("LlmFailure: {source}")]
    Llm { source: LlmError, trace: Box<AgentTrace> },
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error("UnknownTool: {0}")]
    UnknownTool(String),
}

impl AgentError {
    /// The trace recorded up to the failure, when there is one.
    pub fn partial_trace(&self) -> Option<&AgentTrace> {
        match self {
            AgentError::LoopExceeded { trace, .. } | AgentError::Llm { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

/// Everything one run reads or writes. The knowledge graph is read only.
#[derive(Clone, Copy)]
pub struct AgentDeps<'a> {
    pub kg: &'a KnowledgeGraph,
    pub gateway: &'a Gateway,
    pub queue: &'a KnowledgeQueue,
    pub clock: &'a dyn Clock,
}

#[derive(Debug)]
pub struct Agent {
    max_actions: usize,
    next_trace: AtomicU64,
}

impl Default for Agent {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug)]
enum ToolError {
    Llm(LlmError),
    Input(String),
}

impl std::fmt::Display for ToolError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ToolError::Llm(e) => write!(f, "{e}"),
            ToolError::Input(s) => f.write_str(s),
        }
    }
}

impl From<LlmError> for ToolError {
    fn from(e: LlmError) -> Self {
        ToolError::Llm(e)
    }
}

fn query_kg(input: &str, deps: &AgentDeps<'_>) -> Result<ExecResult, ToolError> {
    let response = deps.gateway.call(LlmRole::FormalQueryGeneration, llm::vars([("steps", input)]))?;
    // An unparseable program is an execution failure like any other.
    Ok(match kopl::parse_program(&response.text) {
        Ok(program) => kopl::execute(&program, deps.kg),
        Err(_) => ExecResult::Failed,
    })
}

/// Renders the `complete_knowledge` input: a question line, then the triples.
pub fn completion_input(question: &str, incomplete: &[Triple]) -> String {
    format!("Question: {question}\n{}", render_triples(incomplete))
}

fn parse_completion_input(input: &str) -> Result<(String, Vec<Triple>), ToolError> {
    let (first, rest) = input.split_once('\n').unwrap_or((input, ""));
    let question = first
        .strip_prefix("Question:")
        .ok_or_else(|| ToolError::Input("input must start with \"Question:\"".into()))?
        .trim()
        .to_string();
    let triples = parse_triples(rest).map_err(|e| ToolError::Input(e.to_string()))?;
    Ok((question, triples))
}

fn complete_knowledge(input: &str, deps: &AgentDeps<'_>) -> Result<Vec<Triple>, ToolError> {
    let (question, incomplete) = parse_completion_input(input)?;
    let triples = render_triples(&incomplete);
    let attempt = |feedback: &str| -> Result<Vec<Triple>, LlmError> {
        let response = deps.gateway.call(
            LlmRole::KnowledgeCompletion,
            llm::vars([("feedback", feedback), ("question", &question), ("triples", &triples)]),
        )?;
        parse_completions(&response.text, &incomplete)
    };
    match attempt("") {
        Err(e @ (LlmError::SlotMismatch { .. } | LlmError::MalformedOutput(_) | LlmError::InvalidTriple(_))) => {
            let feedback = format!("\nYour previous reply was rejected ({e}). Keep the known parts exactly as given.");
            Ok(attempt(&feedback)?)
        }
        other => Ok(other?),
    }
}

/// Runs a registered tool and renders its result as an observation.
/// Tool-internal failures become `Error: <reason>`.
pub fn run_tool(name: &str, input: &str, deps: &AgentDeps<'_>) -> Result<String, AgentError> {
    let rendered = match name {
        QUERY_KG => query_kg(input, deps).map(|r| r.observation().to_string()),
        COMPLETE_KNOWLEDGE => complete_knowledge(input, deps).map(|t| render_triples(&t)),
        other => return Err(AgentError::UnknownTool(other.to_string())),
    };
    Ok(rendered.unwrap_or_else(|e| format!("Error: {e}")))
}

/// Trace under construction, with the action budget enforced.
struct Run<'a> {
    trace: AgentTrace,
    actions: usize,
    limit: usize,
    deps: &'a AgentDeps<'a>,
}

impl Run<'_> {
    fn think(&mut self, text: impl Into<String>) {
        self.trace.steps.push(TraceStep::Thought { text: text.into() });
    }

    fn fail(&self, source: LlmError) -> AgentError {
        AgentError::Llm { source, trace: Box::new(self.trace.clone()) }
    }

    fn llm(&self, role: LlmRole, vars: std::collections::BTreeMap<String, String>) -> Result<String, AgentError> {
        self.deps.gateway.call(role, vars).map(|r| r.text).map_err(|e| self.fail(e))
    }

    fn act<T>(
        &mut self,
        tool: &str,
        input: String,
        body: impl FnOnce(&str, &AgentDeps<'_>) -> Result<T, ToolError>,
        render: impl FnOnce(&T) -> String,
    ) -> Result<T, AgentError> {
        if self.actions >= self.limit {
            return Err(AgentError::LoopExceeded { limit: self.limit, trace: Box::new(self.trace.clone()) });
        }
        self.actions += 1;
        let result = body(&input, self.deps);
        self.trace.steps.push(TraceStep::Action { tool: tool.to_string(), input });
        match result {
            Ok(value) => {
                self.trace.steps.push(TraceStep::Observation { text: render(&value) });
                Ok(value)
            }
            Err(e) => {
                self.trace.steps.push(TraceStep::Observation { text: format!("Error: {e}") });
                Err(match e {
                    ToolError::Llm(source) => self.fail(source),
                    ToolError::Input(reason) => self.fail(LlmError::MalformedOutput(reason)),
                })
            }
        }
    }

    fn finish(mut self, answer: String, route: Route) -> AgentTrace {
        self.trace.steps.push(TraceStep::Final { text: answer.clone() });
        self.trace.final_answer = answer;
        self.trace.route = Some(route);
        self.trace
    }
}

impl Agent {
    pub fn new() -> Self {
        Self::with_max_actions(DEFAULT_MAX_ACTIONS)
    }

    pub fn with_max_actions(max_actions: usize) -> Self {
        Self { max_actions, next_trace: AtomicU64::new(1) }
    }

    /// Numbers subsequent traces from `n`.
    pub fn with_first_trace(self, n: u64) -> Self {
        self.next_trace.store(n.max(1), Ordering::Relaxed);
        self
    }

    fn start<'a>(&self, question: &str, deps: &'a AgentDeps<'a>) -> Run<'a> {
        let n = self.next_trace.fetch_add(1, Ordering::Relaxed);
        Run {
            trace: AgentTrace {
                id: format!("tr-{n:06}"),
                question: question.to_string(),
                steps: Vec::new(),
                route: None,
                final_answer: String::new(),
                pending_ids: Vec::new(),
                created_at: deps.clock.now(),
            },
            actions: 0,
            limit: self.max_actions,
            deps,
        }
    }

    pub fn answer_question(&self, question: &str, deps: &AgentDeps<'_>) -> Result<AgentTrace, AgentError> {
        let question = question.trim();
        if question.is_empty() {
            return Err(AgentError::EmptyQuestion);
        }
        let mut run = self.start(question, deps);

        let steps_text = run.llm(LlmRole::QuestionDecomposition, llm::vars([("question", question)]))?;
        let steps = parse_decomposition_steps(&steps_text).map_err(|e| run.fail(e))?;
        let steps = render_steps(&steps);
        run.think(format!("I should look this up in the knowledge graph. Query steps:\n{steps}"));

        let result = run.act(QUERY_KG, steps.clone(), query_kg, |r| r.observation().to_string())?;
        if let ExecResult::Success { answer, .. } = result {
            run.think("The knowledge graph returned a result, so I can answer from it.");
            let final_answer =
                run.llm(LlmRole::AnswerIntegration, llm::vars([("question", question), ("facts", &answer)]))?;
            return Ok(run.finish(final_answer, Route::KgHit));
        }

        let text = run.llm(LlmRole::KnowledgeDecomposition, llm::vars([("question", question), ("steps", &steps)]))?;
        let incomplete = parse_triples(&text).map_err(|e| run.fail(e))?;
        if let Some(t) = incomplete.iter().find(|t| t.is_complete()) {
            return Err(run.fail(LlmError::MalformedOutput(format!("decomposed triple {t} has no unknown slot"))));
        }
        run.think(format!(
            "The knowledge graph cannot answer this. The missing knowledge is:\n{}",
            render_triples(&incomplete)
        ));

        let completed = run.act(COMPLETE_KNOWLEDGE, completion_input(question, &incomplete), complete_knowledge, |t| {
            render_triples(t)
        })?;
        run.think("I will answer from the completed triples and queue them for review.");
        let facts = render_triples(&completed);
        let final_answer =
            run.llm(LlmRole::AnswerIntegration, llm::vars([("question", question), ("facts", &facts)]))?;
        let id = deps.queue.enqueue(question, incomplete, completed, AGENT_ACTOR)?;
        run.trace.pending_ids.push(id);
        Ok(run.finish(final_answer, Route::KgMiss))
    }

    /// Answers from the model alone, touching neither graph nor queue.
    pub fn direct_answer(&self, question: &str, gateway: &Gateway, clock: &dyn Clock) -> Result<AgentTrace, AgentError> {
        let n = self.next_trace.fetch_add(1, Ordering::Relaxed);
        let mut trace = AgentTrace {
            id: format!("tr-{n:06}"),
            question: question.to_string(),
            steps: vec![TraceStep::Thought { text: "I will answer from model knowledge alone.".into() }],
            route: None,
            final_answer: String::new(),
            pending_ids: Vec::new(),
            created_at: clock.now(),
        };
        let answer = match gateway.call(LlmRole::DirectAnswer, llm::vars([("question", question)])) {
            Ok(r) => r.text,
            Err(source) => return Err(AgentError::Llm { source, trace: Box::new(trace) }),
        };
        trace.steps.push(TraceStep::Final { text: answer.clone() });
        trace.final_answer = answer;
        trace.route = Some(Route::DirectOnly);
        Ok(trace)
    }
}

/// True when the trace's `query_kg` observation was the failure sentinel.
pub fn query_failed(trace: &AgentTrace) -> bool {
    trace.actions().iter().any(|(tool, _, obs)| *tool == QUERY_KG && *obs == Some(FAILED))
}
