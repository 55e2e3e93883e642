use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::kg::Triple;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pending,
    Verified,
    Edited,
    Accepted,
    Rejected,
}

impl Status {
    pub const ALL: [Status; 5] = [Status::Pending, Status::Verified, Status::Edited, Status::Accepted, Status::Rejected];

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pending => "pending",
            Status::Verified => "verified",
            Status::Edited => "edited",
            Status::Accepted => "accepted",
            Status::Rejected => "rejected",
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Status::Accepted | Status::Rejected)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Status::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

/// The four administrator actions, without their payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Accept,
    Edit,
    Verify,
    Reject,
}

impl ActionKind {
    pub const ALL: [ActionKind; 4] = [ActionKind::Accept, ActionKind::Edit, ActionKind::Verify, ActionKind::Reject];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Accept => "accept",
            ActionKind::Edit => "edit",
            ActionKind::Verify => "verify",
            ActionKind::Reject => "reject",
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdminAction {
    AcceptDirect,
    Edit(Vec<Triple>),
    Verify,
    Reject,
}

impl AdminAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            AdminAction::AcceptDirect => ActionKind::Accept,
            AdminAction::Edit(_) => ActionKind::Edit,
            AdminAction::Verify => ActionKind::Verify,
            AdminAction::Reject => ActionKind::Reject,
        }
    }
}

/// The legal transition relation. `None` means the action is not allowed from `from`.
pub fn next_status(from: Status, action: ActionKind) -> Option<Status> {
    use ActionKind as A;
    use Status as S;
    match (from, action) {
        (S::Pending, A::Verify) => Some(S::Verified),
        (S::Pending | S::Verified, A::Edit) => Some(S::Edited),
        (S::Pending | S::Verified | S::Edited, A::Accept) => Some(S::Accepted),
        (S::Pending | S::Verified | S::Edited, A::Reject) => Some(S::Rejected),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub doc_id: String,
    pub chunk_index: usize,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: String,
    pub actor: String,
    pub ts: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PendingRecord {
    pub id: String,
    pub question: String,
    pub incomplete: Vec<Triple>,
    pub completed: Vec<Triple>,
    pub corrected: Option<Vec<Triple>>,
    pub edited: Option<Vec<Triple>>,
    pub evidence: Vec<Evidence>,
    pub status: Status,
    pub history: Vec<HistoryEntry>,
    pub created_at: DateTime<Utc>,
    #[serde(skip)]
    pub(crate) seq: u64,
}

impl PendingRecord {
    /// Triples an accept would integrate: corrected, else edited, else completed.
    pub fn integration_triples(&self) -> &[Triple] {
        self.corrected
            .as_deref()
            .or(self.edited.as_deref())
            .unwrap_or(&self.completed)
    }
}
