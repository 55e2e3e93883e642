//! The assembled system: graph, corpus index, model gateway, queue, agent and
//! trace store behind one handle. The CLI, the HTTP service and the C ABI
//! all drive an [`Engine`].

use std::borrow::Cow;
use std::collections::{HashMap, VecDeque};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, AgentDeps, AgentError, AgentTrace};
use crate::clock::{Clock, LogicalClock, SystemClock};
use crate::fixtures::{self, DEMO_SCRIPT, EVAL_SCRIPT, FIXTURE_CORPUS, FIXTURE_KG};
use crate::kg::{self, AddOutcome, KgError, KgStats, KnowledgeGraph, Triple};
use crate::kopl::{self, ExecResult, ParseError};
use crate::llm::{Gateway, LlmError, RemoteConfig, ScriptedBehavior};
use crate::queue::{AdminAction, KnowledgeQueue, PendingRecord, QueueError, Status};
use crate::retrieval::{self, Bm25Index, CorpusError, DEFAULT_CHUNK_TOKENS};

pub const TRACE_CAPACITY: usize = 1000;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    Kg(#[from] KgError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Queue(#[from] QueueError),
}

/// Reads a fixture alias or a file path.
pub fn read_source(spec: &str) -> Result<Cow<'static, str>, EngineError> {
    if let Some(text) = fixtures::by_alias(spec) {
        if !Path::new(spec).exists() {
            return Ok(Cow::Borrowed(text));
        }
    }
    fs::read_to_string(spec)
        .map(Cow::Owned)
        .map_err(|e| EngineError::Io { path: spec.to_string(), reason: e.to_string() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    System,
    Logical,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Graph file or alias; the shipped fixture when unset.
    pub kg: Option<String>,
    /// Corpus file or alias; the shipped corpus when unset.
    pub corpus: Option<String>,
    /// Cached index location, rebuilt when the corpus changes.
    pub corpus_cache: Option<PathBuf>,
    /// Script file or alias; the shipped demo and eval scripts when unset.
    pub script: Option<String>,
    /// Use a chat endpoint instead of a script.
    pub remote: Option<RemoteConfig>,
    /// Event log path; the queue lives in memory when unset.
    pub log: Option<PathBuf>,
    /// File that receives traces evicted from the in-memory store.
    pub trace_spill: Option<PathBuf>,
    /// Defaults to logical for scripted runs and system time for remote ones.
    pub clock: Option<ClockKind>,
}

impl EngineConfig {
    pub fn scripted() -> Self {
        Self::default()
    }

    pub fn from_toml_str(text: &str) -> Result<Self, EngineError> {
        toml::from_str(text).map_err(|e| EngineError::Io { path: "config".into(), reason: e.to_string() })
    }

    pub fn gateway(&self) -> Result<Gateway, EngineError> {
        if let Some(remote) = &self.remote {
            return Ok(Gateway::remote(remote.clone()));
        }
        let script = match &self.script {
            Some(spec) => ScriptedBehavior::parse_str(&read_source(spec)?)?,
            None => {
                let mut s = ScriptedBehavior::parse_str(DEMO_SCRIPT)?;
                s.extend(ScriptedBehavior::parse_str(EVAL_SCRIPT)?);
                s
            }
        };
        Ok(Gateway::scripted(script))
    }

    pub fn load_kg(&self) -> Result<KnowledgeGraph, EngineError> {
        let text = match &self.kg {
            Some(spec) => read_source(spec)?,
            None => Cow::Borrowed(FIXTURE_KG),
        };
        Ok(kg::load_kg_str(&text)?)
    }

    pub fn load_index(&self) -> Result<Bm25Index, EngineError> {
        let text = match &self.corpus {
            Some(spec) => read_source(spec)?,
            None => Cow::Borrowed(FIXTURE_CORPUS),
        };
        if let Some(cache) = &self.corpus_cache {
            return Ok(retrieval::load_or_build_cache(text.as_bytes(), cache)?.0);
        }
        let docs = retrieval::load_corpus_str(&text)?;
        Ok(Bm25Index::build(retrieval::chunk_corpus(&docs, DEFAULT_CHUNK_TOKENS)))
    }
}

/// Capped LRU of finished traces; evicted traces go to the spill file if set.
#[derive(Debug)]
pub struct TraceStore {
    cap: usize,
    traces: HashMap<String, AgentTrace>,
    order: VecDeque<String>,
    spill: Option<PathBuf>,
}

impl TraceStore {
    pub fn new(cap: usize, spill: Option<PathBuf>) -> Self {
        Self { cap: cap.max(1), traces: HashMap::new(), order: VecDeque::new(), spill }
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    fn touch(&mut self, id: &str) {
        if let Some(pos) = self.order.iter().position(|x| x == id) {
            let key = self.order.remove(pos).expect("position is valid");
            self.order.push_back(key);
        }
    }

    pub fn insert(&mut self, trace: AgentTrace) {
        let id = trace.id.clone();
        if self.traces.insert(id.clone(), trace).is_some() {
            self.touch(&id);
            return;
        }
        self.order.push_back(id);
        while self.order.len() > self.cap {
            let old = self.order.pop_front().expect("non-empty");
            if let Some(t) = self.traces.remove(&old) {
                self.spill_one(&t);
            }
        }
    }

    fn spill_one(&self, trace: &AgentTrace) {
        let Some(path) = &self.spill else { return };
        let line = serde_json::to_string(trace).expect("trace serializes") + "\n";
        let written = OpenOptions::new().create(true).append(true).open(path).and_then(|mut f| f.write_all(line.as_bytes()));
        if let Err(e) = written {
            tracing::warn!("could not spill trace {} to {}: {e}", trace.id, path.display());
        }
    }

    fn spilled(&self) -> Vec<AgentTrace> {
        let Some(text) = self.spill.as_ref().and_then(|p| fs::read_to_string(p).ok()) else { return Vec::new() };
        text.lines().filter_map(|l| serde_json::from_str(l).ok()).collect()
    }

    pub fn get(&mut self, id: &str) -> Option<AgentTrace> {
        if let Some(t) = self.traces.get(id).cloned() {
            self.touch(id);
            return Some(t);
        }
        self.spilled().into_iter().rev().find(|t| t.id == id)
    }

    /// Highest numeric trace id seen in the spill file.
    fn max_spilled_id(&self) -> u64 {
        self.spilled()
            .iter()
            .filter_map(|t| t.id.strip_prefix("tr-").and_then(|n| n.parse().ok()))
            .max()
            .unwrap_or(0)
    }
}

pub struct Engine {
    kg: RwLock<KnowledgeGraph>,
    index: Bm25Index,
    gateway: Gateway,
    queue: KnowledgeQueue,
    agent: Agent,
    traces: Mutex<TraceStore>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("gateway", &self.gateway).field("queue", &self.queue).finish()
    }
}

impl Engine {
    pub fn open(config: &EngineConfig) -> Result<Self, EngineError> {
        let gateway = config.gateway()?;
        Self::with_gateway(config, gateway)
    }

    /// Builds an engine around an explicit gateway, e.g. a custom backend.
    pub fn with_gateway(config: &EngineConfig, gateway: Gateway) -> Result<Self, EngineError> {
        let mut kg = config.load_kg()?;
        let index = config.load_index()?;
        let events = match &config.log {
            Some(path) if path.exists() => {
                let text = fs::read(path).map_err(|e| EngineError::Io { path: path.display().to_string(), reason: e.to_string() })?;
                crate::queue::read_events(text.as_slice())?
            }
            _ => Vec::new(),
        };
        let kind = config.clock.unwrap_or(if config.remote.is_some() { ClockKind::System } else { ClockKind::Logical });
        let clock: Arc<dyn Clock> = match kind {
            ClockKind::System => Arc::new(SystemClock),
            ClockKind::Logical => {
                let resume = events.iter().map(|e| e.ts.timestamp() + 1).max();
                Arc::new(resume.map_or_else(LogicalClock::new, LogicalClock::starting_at))
            }
        };
        let queue = match &config.log {
            Some(path) => KnowledgeQueue::open(path, clock.clone())?,
            None => KnowledgeQueue::in_memory(clock.clone()),
        };
        // The graph of record is the base graph plus everything accepted.
        for t in queue.accepted_triples() {
            kg.add_triple(&t)?;
        }
        let traces = TraceStore::new(TRACE_CAPACITY, config.trace_spill.clone());
        let agent = Agent::new().with_first_trace(traces.max_spilled_id() + 1);
        Ok(Self { kg: RwLock::new(kg), index, gateway, queue, agent, traces: Mutex::new(traces), clock })
    }

    pub fn gateway(&self) -> &Gateway {
        &self.gateway
    }

    pub fn index(&self) -> &Bm25Index {
        &self.index
    }

    pub fn queue(&self) -> &KnowledgeQueue {
        &self.queue
    }

    pub fn clock(&self) -> &dyn Clock {
        self.clock.as_ref()
    }

    fn kg_read(&self) -> std::sync::RwLockReadGuard<'_, KnowledgeGraph> {
        self.kg.read().unwrap_or_else(|e| e.into_inner())
    }

    fn kg_write(&self) -> std::sync::RwLockWriteGuard<'_, KnowledgeGraph> {
        self.kg.write().unwrap_or_else(|e| e.into_inner())
    }

    fn store(&self, trace: &AgentTrace) {
        self.traces.lock().unwrap_or_else(|e| e.into_inner()).insert(trace.clone());
    }

    /// Answers a question and records the trace, including partial traces of
    /// failed runs.
    pub fn ask(&self, question: &str) -> Result<AgentTrace, AgentError> {
        let kg = self.kg_read();
        let deps = AgentDeps { kg: &kg, gateway: &self.gateway, queue: &self.queue, clock: self.clock.as_ref() };
        let result = self.agent.answer_question(question, &deps);
        match &result {
            Ok(trace) => self.store(trace),
            Err(e) => {
                if let Some(t) = e.partial_trace() {
                    self.store(t);
                }
            }
        }
        result
    }

    pub fn direct_answer(&self, question: &str) -> Result<AgentTrace, AgentError> {
        let result = self.agent.direct_answer(question, &self.gateway, self.clock.as_ref());
        if let Ok(trace) = &result {
            self.store(trace);
        }
        result
    }

    pub fn trace(&self, id: &str) -> Option<AgentTrace> {
        self.traces.lock().unwrap_or_else(|e| e.into_inner()).get(id)
    }

    pub fn pending(&self, status: Option<Status>) -> Vec<PendingRecord> {
        self.queue.list(status)
    }

    pub fn pending_record(&self, id: &str) -> Result<PendingRecord, QueueError> {
        self.queue.get(id)
    }

    pub fn pending_action(&self, id: &str, action: AdminAction, actor: &str) -> Result<PendingRecord, QueueError> {
        match action {
            AdminAction::AcceptDirect => {
                let mut kg = self.kg_write();
                self.queue.accept(id, &mut kg, actor)?;
                self.queue.get(id)
            }
            AdminAction::Verify => self.queue.verify(id, &self.index, &self.gateway, actor),
            AdminAction::Edit(triples) => self.queue.edit(id, triples, actor),
            AdminAction::Reject => self.queue.reject(id, actor),
        }
    }

    pub fn kg_stats(&self) -> KgStats {
        self.kg_read().stats()
    }

    pub fn kg_snapshot(&self) -> Vec<u8> {
        kg::snapshot(&self.kg_read())
    }

    pub fn kg_match(&self, pattern: &Triple) -> Vec<Triple> {
        self.kg_read().match_triples(pattern)
    }

    pub fn kg_add(&self, triple: &Triple) -> Result<AddOutcome, KgError> {
        self.kg_write().add_triple(triple)
    }

    pub fn kg_remove(&self, pattern: &Triple) -> usize {
        self.kg_write().remove_matching(pattern)
    }

    /// Parses and runs a program against the current graph.
    pub fn kopl(&self, program: &str) -> Result<ExecResult, ParseError> {
        let program = kopl::parse_program(program)?;
        Ok(kopl::execute(&program, &self.kg_read()))
    }

    /// Runs `f` with read access to the graph.
    pub fn with_kg<T>(&self, f: impl FnOnce(&KnowledgeGraph) -> T) -> T {
        f(&self.kg_read())
    }
}
