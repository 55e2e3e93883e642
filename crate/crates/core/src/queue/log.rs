use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::QueueError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub record_id: String,
    pub action: String,
    pub payload: serde_json::Value,
    pub actor: String,
    pub ts: DateTime<Utc>,
}

/// Append-only event storage, in memory or mirrored to a file.
#[derive(Debug)]
pub struct EventLog {
    events: Vec<Event>,
    file: Option<File>,
}

pub fn read_events(source: impl Read) -> Result<Vec<Event>, QueueError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line.map_err(|e| QueueError::Log(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let ev = serde_json::from_str(&line).map_err(|e| QueueError::Log(format!("line {}: {e}", i + 1)))?;
        out.push(ev);
    }
    Ok(out)
}

pub(crate) fn render_events(events: &[Event]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
        .collect()
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self { events: Vec::new(), file: None }
    }

    pub fn from_events(events: Vec<Event>) -> Self {
        Self { events, file: None }
    }

    pub fn open(path: &Path) -> Result<Self, QueueError> {
        let io = |e: std::io::Error| QueueError::Log(format!("{}: {e}", path.display()));
        let events = match File::open(path) {
            Ok(f) => read_events(f)?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io(e)),
        };
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        Ok(Self { events, file: Some(file) })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Persists before recording in memory, so a failed write changes nothing.
    pub fn append(&mut self, event: Event) -> Result<(), QueueError> {
        if let Some(f) = &mut self.file {
            let mut line = serde_json::to_string(&event).expect("event serializes");
            line.push('\n');
            f.write_all(line.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| QueueError::Log(e.to_string()))?;
        }
        self.events.push(event);
        Ok(())
    }
}
