//! KoPL-style functional query language: a textual program of steps forming a
//! DAG, executed against the knowledge graph.
//!
//! Execution is total. Unknown labels, missing predicates, empty entity sets
//! and type mismatches all surface as [`ExecResult::Failed`], whose rendering
//! is the literal `"Failed"`.

mod exec;
mod program;

use thiserror::Error;

pub use exec::{evaluate_step, execute, run, ExecResult, ExecValue, StepFailure, FAILED};
pub use program::{parse_program, Direction, QueryProgram, Step, StepFunction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("ParseError at line {line}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub reason: String,
}

impl ParseError {
    pub fn new(line: usize, reason: impl Into<String>) -> Self {
        Self { line, reason: reason.into() }
    }
}
