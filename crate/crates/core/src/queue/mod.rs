//! Lifecycle of knowledge-graph gaps: pending records, the administrator
//! actions (accept, edit, verify, reject), evidence, and incorporation.
//!
//! State is never mutated directly. Every action becomes an [`Event`] that is
//! appended to the log and then applied, so replaying the log from empty
//! reconstructs the queue exactly.

mod log;
mod record;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde_json::json;
use thiserror::Error;

use crate::clock::Clock;
use crate::kg::{AddOutcome, KnowledgeGraph, Triple};
use crate::llm::{self, parse_completions, render_documents, render_triples, Gateway, LlmError, LlmRole};
use crate::retrieval::{make_verification_query, Bm25Index, DEFAULT_TOP_K};

pub use log::{read_events, Event, EventLog};
pub use record::{next_status, ActionKind, AdminAction, Evidence, HistoryEntry, PendingRecord, Status};

pub const DEFAULT_ACTOR: &str = "admin";
pub const AGENT_ACTOR: &str = "agent";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QueueError {
    #[error("UnknownId: {0}")]
    UnknownId(String),
    #[error("TerminalState: record {id} is already {status}")]
    TerminalState { id: String, status: Status },
    #[error("IllegalTransition: cannot {action} record {id} in status {from}")]
    IllegalTransition { id: String, from: Status, action: ActionKind },
    #[error("IncompleteTriple: {0}")]
    IncompleteTriple(String),
    #[error("SlotMismatch: completion {got} disagrees with {expected}")]
    SlotMismatch { expected: String, got: String },
    #[error("EmptyRecord: {0}")]
    EmptyRecord(String),
    #[error("NoEvidence: no corpus chunk matches record {0}")]
    NoEvidence(String),
    #[error("LlmFailure: {0}")]
    Llm(#[from] LlmError),
    #[error("event log: {0}")]
    Log(String),
}

#[derive(Debug, Default, Clone, PartialEq)]
struct QueueState {
    records: BTreeMap<String, PendingRecord>,
    next_seq: u64,
}

impl QueueState {
    fn record(&self, id: &str) -> Result<&PendingRecord, QueueError> {
        self.records.get(id).ok_or_else(|| QueueError::UnknownId(id.to_string()))
    }

    fn check_transition(&self, id: &str, action: ActionKind) -> Result<Status, QueueError> {
        let rec = self.record(id)?;
        if rec.status.is_terminal() {
            return Err(QueueError::TerminalState { id: id.to_string(), status: rec.status });
        }
        next_status(rec.status, action).ok_or(QueueError::IllegalTransition {
            id: id.to_string(),
            from: rec.status,
            action,
        })
    }

    /// Applies one event. Shared by live mutation and replay.
    fn apply(&mut self, ev: &Event) -> Result<(), QueueError> {
        let bad = |what: &str| QueueError::Log(format!("{} event for {}: {what}", ev.action, ev.record_id));
        let entry = HistoryEntry { action: ev.action.clone(), actor: ev.actor.clone(), ts: ev.ts };
        if ev.action == "enqueue" {
            if self.records.contains_key(&ev.record_id) {
                return Err(bad("duplicate record id"));
            }
            let question = ev.payload["question"].as_str().ok_or_else(|| bad("missing question"))?.to_string();
            let incomplete = triples_field(&ev.payload, "incomplete").ok_or_else(|| bad("bad incomplete"))?;
            let completed = triples_field(&ev.payload, "completed").ok_or_else(|| bad("bad completed"))?;
            self.next_seq += 1;
            self.records.insert(
                ev.record_id.clone(),
                PendingRecord {
                    id: ev.record_id.clone(),
                    question,
                    incomplete,
                    completed,
                    corrected: None,
                    edited: None,
                    evidence: Vec::new(),
                    status: Status::Pending,
                    history: vec![entry],
                    created_at: ev.ts,
                    seq: self.next_seq,
                },
            );
            return Ok(());
        }

        let action = match ev.action.as_str() {
            "accept" => ActionKind::Accept,
            "edit" => ActionKind::Edit,
            "verify" => ActionKind::Verify,
            "reject" => ActionKind::Reject,
            other => return Err(bad(&format!("unknown action {other:?}"))),
        };
        let next = self.check_transition(&ev.record_id, action)?;
        let rec = self.records.get_mut(&ev.record_id).expect("checked above");
        match action {
            ActionKind::Verify => {
                rec.evidence = serde_json::from_value(ev.payload["evidence"].clone()).map_err(|_| bad("bad evidence"))?;
                rec.corrected = Some(triples_field(&ev.payload, "corrected").ok_or_else(|| bad("bad corrected"))?);
            }
            ActionKind::Edit => {
                rec.edited = Some(triples_field(&ev.payload, "triples").ok_or_else(|| bad("bad triples"))?);
            }
            ActionKind::Accept | ActionKind::Reject => {}
        }
        rec.status = next;
        rec.history.push(entry);
        Ok(())
    }
}

fn triples_field(payload: &serde_json::Value, key: &str) -> Option<Vec<Triple>> {
    serde_json::from_value(payload.get(key)?.clone()).ok()
}

fn require_complete(triples: &[Triple]) -> Result<(), QueueError> {
    match triples.iter().find(|t| !t.is_complete()) {
        Some(t) => Err(QueueError::IncompleteTriple(t.to_string())),
        None => Ok(()),
    }
}

/// A single-writer queue of pending knowledge.
pub struct KnowledgeQueue {
    state: RwLock<QueueState>,
    log: std::sync::Mutex<EventLog>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for KnowledgeQueue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KnowledgeQueue").field("records", &self.len()).finish()
    }
}

impl KnowledgeQueue {
    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Self::with_log(EventLog::in_memory(), clock).expect("empty log replays")
    }

    /// Opens (or creates) a file-backed queue, replaying any existing events.
    pub fn open(path: impl AsRef<Path>, clock: Arc<dyn Clock>) -> Result<Self, QueueError> {
        Self::with_log(EventLog::open(path.as_ref())?, clock)
    }

    fn with_log(log: EventLog, clock: Arc<dyn Clock>) -> Result<Self, QueueError> {
        let mut state = QueueState::default();
        for ev in log.events() {
            state.apply(ev)?;
        }
        Ok(Self { state: RwLock::new(state), log: std::sync::Mutex::new(log), clock })
    }

    /// Rebuilds a queue from events alone.
    pub fn replay(events: &[Event], clock: Arc<dyn Clock>) -> Result<Self, QueueError> {
        Self::with_log(EventLog::from_events(events.to_vec()), clock)
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, QueueState> {
        self.state.read().unwrap_or_else(|e| e.into_inner())
    }

    /// Logs then applies an event while holding the write lock.
    fn commit(&self, state: &mut QueueState, ev: Event) -> Result<(), QueueError> {
        let mut scratch = state.clone();
        scratch.apply(&ev)?;
        self.log.lock().unwrap_or_else(|e| e.into_inner()).append(ev)?;
        *state = scratch;
        Ok(())
    }

    fn event(&self, record_id: &str, action: &str, payload: serde_json::Value, actor: &str) -> Event {
        Event { record_id: record_id.to_string(), action: action.to_string(), payload, actor: actor.to_string(), ts: self.clock.now() }
    }

    pub fn len(&self) -> usize {
        self.read().records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn events(&self) -> Vec<Event> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).events().to_vec()
    }

    /// The log rendered as line-delimited records.
    pub fn event_log_text(&self) -> String {
        log::render_events(&self.events())
    }

    pub fn enqueue(&self, question: &str, incomplete: Vec<Triple>, completed: Vec<Triple>, actor: &str) -> Result<String, QueueError> {
        if question.trim().is_empty() {
            return Err(QueueError::EmptyRecord("question is empty".into()));
        }
        if incomplete.is_empty() || incomplete.len() != completed.len() {
            return Err(QueueError::EmptyRecord(format!(
                "need matching non-empty triple lists, got {} incomplete and {} completed",
                incomplete.len(),
                completed.len()
            )));
        }
        if let Some(t) = incomplete.iter().find(|t| t.is_complete()) {
            return Err(QueueError::EmptyRecord(format!("{t} has no unknown slot")));
        }
        require_complete(&completed)?;
        for (want, got) in incomplete.iter().zip(&completed) {
            if !want.known_slots_agree(got) {
                return Err(QueueError::SlotMismatch { expected: want.to_string(), got: got.to_string() });
            }
        }
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let id = format!("pk-{:06}", state.next_seq + 1);
        let payload = json!({ "question": question, "incomplete": incomplete, "completed": completed });
        let ev = self.event(&id, "enqueue", payload, actor);
        self.commit(&mut state, ev)?;
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<PendingRecord, QueueError> {
        self.read().record(id).cloned()
    }

    /// Records, newest first, optionally filtered by status.
    pub fn list(&self, status: Option<Status>) -> Vec<PendingRecord> {
        let state = self.read();
        let mut out: Vec<PendingRecord> = state
            .records
            .values()
            .filter(|r| status.is_none_or(|s| r.status == s))
            .cloned()
            .collect();
        out.sort_by_key(|r| std::cmp::Reverse(r.seq));
        out
    }

    /// Retrieves evidence for the record's triples, asks the model to correct
    /// the completions against it, and marks the record verified.
    pub fn verify(&self, id: &str, index: &Bm25Index, gateway: &Gateway, actor: &str) -> Result<PendingRecord, QueueError> {
        let rec = {
            let state = self.read();
            state.check_transition(id, ActionKind::Verify)?;
            state.record(id)?.clone()
        };
        let mut all = rec.incomplete.clone();
        all.extend(rec.completed.iter().cloned());
        let query = make_verification_query(&all, &rec.question);
        let hits = index.search(&query, DEFAULT_TOP_K);
        if hits.is_empty() {
            return Err(QueueError::NoEvidence(id.to_string()));
        }
        let texts: Vec<&str> = hits.iter().map(|h| h.chunk.text.as_str()).collect();
        let response = gateway.call(
            LlmRole::RagVerification,
            llm::vars([
                ("question", rec.question.as_str()),
                ("incomplete", &render_triples(&rec.incomplete)),
                ("completed", &render_triples(&rec.completed)),
                ("documents", &render_documents(&texts)),
            ]),
        )?;
        let corrected = parse_completions(&response.text, &rec.incomplete)?;
        let evidence: Vec<Evidence> = hits
            .into_iter()
            .map(|h| Evidence { doc_id: h.chunk.doc_id, chunk_index: h.chunk.chunk_index, score: h.score, text: h.chunk.text })
            .collect();

        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let ev = self.event(id, "verify", json!({ "evidence": evidence, "corrected": corrected }), actor);
        self.commit(&mut state, ev)?;
        state.record(id).cloned()
    }

    pub fn edit(&self, id: &str, triples: Vec<Triple>, actor: &str) -> Result<PendingRecord, QueueError> {
        if triples.is_empty() {
            return Err(QueueError::EmptyRecord("edit needs at least one triple".into()));
        }
        require_complete(&triples)?;
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        state.check_transition(id, ActionKind::Edit)?;
        let ev = self.event(id, "edit", json!({ "triples": triples }), actor);
        self.commit(&mut state, ev)?;
        state.record(id).cloned()
    }

    pub fn reject(&self, id: &str, actor: &str) -> Result<PendingRecord, QueueError> {
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        state.check_transition(id, ActionKind::Reject)?;
        let ev = self.event(id, "reject", json!({}), actor);
        self.commit(&mut state, ev)?;
        state.record(id).cloned()
    }

    /// Integrates the record's triples (corrected, else edited, else
    /// completed) into `kg` and marks it accepted.
    pub fn accept(&self, id: &str, kg: &mut KnowledgeGraph, actor: &str) -> Result<Vec<AddOutcome>, QueueError> {
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        state.check_transition(id, ActionKind::Accept)?;
        let triples = state.record(id)?.integration_triples().to_vec();
        require_complete(&triples)?;
        let ev = self.event(id, "accept", json!({ "triples": triples }), actor);
        self.commit(&mut state, ev)?;
        triples
            .iter()
            .map(|t| kg.add_triple(t).map_err(|e| QueueError::IncompleteTriple(e.to_string())))
            .collect()
    }

    /// Dispatches any administrator action.
    pub fn apply_action(
        &self,
        id: &str,
        action: AdminAction,
        kg: &mut KnowledgeGraph,
        index: &Bm25Index,
        gateway: &Gateway,
        actor: &str,
    ) -> Result<PendingRecord, QueueError> {
        match action {
            AdminAction::AcceptDirect => {
                self.accept(id, kg, actor)?;
                self.get(id)
            }
            AdminAction::Edit(triples) => self.edit(id, triples, actor),
            AdminAction::Verify => self.verify(id, index, gateway, actor),
            AdminAction::Reject => self.reject(id, actor),
        }
    }

    /// Content equality of queue state, used to check replay fidelity.
    pub fn same_state(&self, other: &KnowledgeQueue) -> bool {
        *self.read() == *other.read()
    }

    /// Triples of every accepted record, in acceptance order.
    pub fn accepted_triples(&self) -> Vec<Triple> {
        let state = self.read();
        let mut recs: Vec<&PendingRecord> = state.records.values().filter(|r| r.status == Status::Accepted).collect();
        recs.sort_by_key(|r| r.history.last().map(|h| h.ts));
        recs.into_iter().flat_map(|r| r.integration_triples().iter().cloned()).collect()
    }
}
