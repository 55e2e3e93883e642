//! Collaborative augmentation between a knowledge graph and a language model.
//!
//! Questions are answered from the knowledge graph when a formal query
//! succeeds. When it fails, the knowledge the question needs is spelled out as
//! incomplete triples, completed from the model, used for the answer, and
//! queued for verification and incorporation so the graph grows toward what
//! users actually ask.

pub mod agent;
pub mod cli;
pub mod clock;
pub mod engine;
pub mod eval;
pub mod fixtures;
pub mod kg;
pub mod kopl;
pub mod llm;
pub mod queue;
pub mod retrieval;
pub mod service;
