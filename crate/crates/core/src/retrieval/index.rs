//! Okapi BM25 over chunks.
//!
//! score(c) = Σ_t idf(t) · tf·(k1+1) / (tf + k1·(1 − b + b·len/avg_len))
//! idf(t)   = ln(1 + (N − df + 0.5) / (df + 0.5))
//!
//! The idf variant is always positive, so every chunk sharing a term with the
//! query scores above zero.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{tokenize, Chunk};

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub chunk: usize,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Index {
    chunks: Vec<Chunk>,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_freq: BTreeMap<String, usize>,
    chunk_lengths: Vec<usize>,
    avg_len: f64,
    k1: f64,
    b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub chunk: Chunk,
    pub score: f64,
}

impl Bm25Index {
    pub fn build(chunks: Vec<Chunk>) -> Self {
        Self::with_params(chunks, DEFAULT_K1, DEFAULT_B)
    }

    pub fn with_params(chunks: Vec<Chunk>, k1: f64, b: f64) -> Self {
        assert!(k1 > 0.0 && b > 0.0 && b <= 1.0, "BM25 requires k1 > 0 and 0 < b <= 1");
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut chunk_lengths = Vec::with_capacity(chunks.len());
        for (i, chunk) in chunks.iter().enumerate() {
            let tokens = tokenize(&chunk.text);
            chunk_lengths.push(tokens.len());
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (term, n) in tf {
                postings.entry(term).or_default().push(Posting { chunk: i, tf: n });
            }
        }
        let doc_freq = postings.iter().map(|(t, p)| (t.clone(), p.len())).collect();
        let avg_len = if chunks.is_empty() {
            0.0
        } else {
            chunk_lengths.iter().sum::<usize>() as f64 / chunks.len() as f64
        };
        Self { chunks, postings, doc_freq, chunk_lengths, avg_len, k1, b }
    }

    pub fn n_chunks(&self) -> usize {
        self.chunks.len()
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn doc_freq(&self, term: &str) -> usize {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn chunk_lengths(&self) -> &[usize] {
        &self.chunk_lengths
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn params(&self) -> (f64, f64) {
        (self.k1, self.b)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.chunks.len() as f64;
        let df = self.doc_freq(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Top `k` chunks by BM25 score; query terms are deduplicated, zero scores
    /// dropped, ties broken by (doc_id, chunk_index).
    pub fn search(&self, query: &str, k: usize) -> Vec<SearchHit> {
        if self.chunks.is_empty() || k == 0 {
            return Vec::new();
        }
        let mut seen = HashSet::new();
        let mut scores: HashMap<usize, f64> = HashMap::new();
        for term in tokenize(query) {
            if !seen.insert(term.clone()) {
                continue;
            }
            let postings = self.postings(&term);
            if postings.is_empty() {
                continue;
            }
            let idf = self.idf(&term);
            for p in postings {
                let tf = p.tf as f64;
                let len = self.chunk_lengths[p.chunk] as f64;
                let norm = tf * (self.k1 + 1.0) / (tf + self.k1 * (1.0 - self.b + self.b * len / self.avg_len));
                *scores.entry(p.chunk).or_insert(0.0) += idf * norm;
            }
        }
        let mut ranked: Vec<(usize, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.chunks[a.0].doc_id.cmp(&self.chunks[b.0].doc_id))
                .then_with(|| self.chunks[a.0].chunk_index.cmp(&self.chunks[b.0].chunk_index))
        });
        ranked.truncate(k);
        ranked
            .into_iter()
            .map(|(i, score)| SearchHit { chunk: self.chunks[i].clone(), score })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunks(texts: &[&str]) -> Vec<Chunk> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| Chunk { doc_id: "d".into(), chunk_index: i, text: t.to_string(), token_count: tokenize(t).len() })
            .collect()
    }

    #[test]
    fn empty_index() {
        let idx = Bm25Index::build(vec![]);
        assert_eq!(idx.n_chunks(), 0);
        assert!(idx.search("anything", 10).is_empty());
    }

    #[test]
    fn doc_freq_and_avg_len() {
        let idx = Bm25Index::build(chunks(&["a b", "a"]));
        assert_eq!(idx.doc_freq("a"), 2);
        assert_eq!(idx.doc_freq("b"), 1);
        assert_eq!(idx.avg_len(), 1.5);
    }

    #[test]
    fn duplicate_chunks_indexed_separately() {
        let idx = Bm25Index::build(chunks(&["same text", "same text"]));
        assert_eq!(idx.n_chunks(), 2);
        assert_eq!(idx.doc_freq("same"), 2);
        let hits = idx.search("same", 10);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0].score, hits[1].score);
        assert_eq!(hits[0].chunk.chunk_index, 0);
    }

    #[test]
    fn shorter_chunk_wins_equal_tf() {
        let idx = Bm25Index::build(chunks(&["france capital paris", "berlin germany", "paris population"]));
        let hits = idx.search("paris", 10);
        let order: Vec<usize> = hits.iter().map(|h| h.chunk.chunk_index).collect();
        assert_eq!(order, vec![2, 0]);
        // N=3, df=2: idf = ln(1 + 1.5/2.5); avg_len = 7/3
        let idf = (1.0f64 + 1.5 / 2.5).ln();
        let norm = |len: f64| 2.2 / (1.0 + 1.2 * (0.25 + 0.75 * len / (7.0 / 3.0)));
        assert!((hits[0].score - idf * norm(2.0)).abs() < 1e-12);
        assert!((hits[1].score - idf * norm(3.0)).abs() < 1e-12);

        let top = idx.search("paris", 1);
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].chunk.chunk_index, 2);
    }

    #[test]
    fn unmatched_query_and_duplicate_terms() {
        let idx = Bm25Index::build(chunks(&["france capital paris", "berlin germany"]));
        assert!(idx.search("tokyo", 10).is_empty());
        let once = idx.search("paris", 10);
        let twice = idx.search("paris Paris PARIS", 10);
        assert_eq!(once, twice);
    }
}
