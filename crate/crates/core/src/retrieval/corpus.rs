use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{chunk_corpus, Bm25Index, Document, DEFAULT_CHUNK_TOKENS};

const CACHE_MAGIC: &[u8; 8] = b"CGMGBM25";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed corpus at line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Reads line-delimited `{"id","title","text"}` records.
pub fn load_corpus(source: impl Read) -> Result<Vec<Document>, CorpusError> {
    let mut docs = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: i + 1, reason: e.to_string() })?;
        if doc.text.trim().is_empty() {
            return Err(CorpusError::Malformed { line: i + 1, reason: format!("document {:?} has empty text", doc.id) });
        }
        if !ids.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

pub fn load_corpus_str(text: &str) -> Result<Vec<Document>, CorpusError> {
    load_corpus(text.as_bytes())
}

fn content_key(corpus: &[u8]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(corpus);
    h.update((DEFAULT_CHUNK_TOKENS as u64).to_le_bytes());
    h.finalize().into()
}

fn read_cache(path: &Path, key: &[u8; 32]) -> Option<Bm25Index> {
    let bytes = fs::read(path).ok()?;
    let body = bytes.strip_prefix(CACHE_MAGIC.as_slice())?;
    let (stored, payload) = body.split_at_checked(32)?;
    if stored != key {
        return None;
    }
    serde_json::from_slice(payload).ok()
}

/// Returns the index for `corpus`, reusing the cache at `cache_path` when its
/// content hash matches and rebuilding (and rewriting the cache) otherwise.
/// The boolean is true when a rebuild happened.
pub fn load_or_build_cache(corpus: &[u8], cache_path: &Path) -> Result<(Bm25Index, bool), CorpusError> {
    let key = content_key(corpus);
    if let Some(index) = read_cache(cache_path, &key) {
        return Ok((index, false));
    }
    let docs = load_corpus(corpus)?;
    let index = Bm25Index::build(chunk_corpus(&docs, DEFAULT_CHUNK_TOKENS));
    let mut out = Vec::with_capacity(64 * 1024);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&key);
    serde_json::to_writer(&mut out, &index).map_err(std::io::Error::other)?;
    fs::write(cache_path, out)?;
    Ok((index, true))
}
