//! Evidence retrieval for triple verification: corpus loading, fixed-size
//! token chunking, and a BM25 inverted index.

mod corpus;
mod index;

use serde::{Deserialize, Serialize};

use crate::kg::Triple;

pub use corpus::{load_corpus, load_corpus_str, load_or_build_cache, CorpusError};
pub use index::{Bm25Index, Posting, SearchHit, DEFAULT_B, DEFAULT_K1};

pub const DEFAULT_CHUNK_TOKENS: usize = 256;
pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub doc_id: String,
    pub chunk_index: usize,
    pub text: String,
    pub token_count: usize,
}

/// Lowercased maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    let boundary = |c: char| !c.is_alphanumeric();
    // Lowercasing can emit combining marks (e.g. for 'İ'), so runs are split
    // again afterwards to keep tokenization idempotent on chunk text.
    text.split(boundary)
        .filter(|t| !t.is_empty())
        .flat_map(|run| {
            let lower = run.to_lowercase();
            lower.split(boundary).filter(|t| !t.is_empty()).map(str::to_string).collect::<Vec<_>>()
        })
        .collect()
}

/// Splits a document into consecutive chunks of `size` tokens; the last chunk
/// may be shorter. Chunk text is the single-space join of its tokens.
pub fn chunk_document(doc: &Document, size: usize) -> Vec<Chunk> {
    let size = size.max(1);
    tokenize(&doc.text)
        .chunks(size)
        .enumerate()
        .map(|(i, toks)| Chunk {
            doc_id: doc.id.clone(),
            chunk_index: i,
            text: toks.join(" "),
            token_count: toks.len(),
        })
        .collect()
}

pub fn chunk_corpus(docs: &[Document], size: usize) -> Vec<Chunk> {
    docs.iter().flat_map(|d| chunk_document(d, size)).collect()
}

/// Query text for evidence search: the known slots of each triple in order,
/// followed by the originating question.
pub fn make_verification_query(triples: &[Triple], question: &str) -> String {
    let mut parts: Vec<&str> = triples.iter().flat_map(Triple::known_texts).collect();
    parts.push(question);
    parts.join(" ")
}
