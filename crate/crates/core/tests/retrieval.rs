mod common;

use cogmg::fixtures::FIXTURE_CORPUS;
use cogmg::kg::Triple;
use cogmg::retrieval::{
    chunk_document, load_corpus_str, load_or_build_cache, make_verification_query, tokenize, Bm25Index, Chunk, Document,
};
use common::{bm25_reference, document_text, random_chunks, random_query, rng};
use proptest::prelude::*;
use rand::Rng;

fn chunk(i: usize, text: &str) -> Chunk {
    Chunk { doc_id: "d".into(), chunk_index: i, text: text.into(), token_count: tokenize(text).len() }
}

proptest! {
    #[test]
    fn search_matches_quadratic_reference(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chunks = random_chunks(&mut r, 20);
        let query = random_query(&mut r);
        let index = Bm25Index::build(chunks.clone());
        let got = index.search(&query, 10);
        let want = bm25_reference(&chunks, &query, 10);
        prop_assert_eq!(got.len(), want.len());
        for (hit, (pos, score)) in got.iter().zip(&want) {
            prop_assert!((hit.score - score).abs() < 1e-9);
            prop_assert_eq!(&hit.chunk, &chunks[*pos]);
        }
    }

    #[test]
    fn chunking_conserves_tokens(seed in any::<u64>(), size in 1usize..40) {
        let mut r = rng(seed);
        let n = r.gen_range(0..200);
        let doc = Document { id: "d".into(), title: "t".into(), text: document_text(&mut r, n) };
        let chunks = chunk_document(&doc, size);
        let flat: Vec<String> = chunks.iter().flat_map(|c| tokenize(&c.text)).collect();
        prop_assert_eq!(flat, tokenize(&doc.text));
        for (i, c) in chunks.iter().enumerate() {
            prop_assert_eq!(c.chunk_index, i);
            prop_assert_eq!(c.token_count, tokenize(&c.text).len());
            prop_assert!(c.token_count == size || i + 1 == chunks.len());
        }
    }

    #[test]
    fn extra_occurrence_never_lowers_rank(seed in any::<u64>()) {
        let mut r = rng(seed);
        let term = "paris";
        // Chunk 0 gets one more occurrence of the term than chunk 1 and no
        // more length, so it must rank at or above chunk 1.
        let base = r.gen_range(1..4);
        let filler = r.gen_range(0..4);
        let extra_filler = r.gen_range(0..3);
        let a = [vec![term; base + 1], vec!["river"; filler]].concat().join(" ");
        let b = [vec![term; base], vec!["river"; filler + 1 + extra_filler]].concat().join(" ");
        let mut chunks = vec![chunk(0, &a), chunk(1, &b)];
        for i in 0..r.gen_range(0..5) {
            chunks.push(chunk(2 + i, "berlin germany"));
        }
        let hits = Bm25Index::build(chunks).search(term, 10);
        let pos = |i: usize| hits.iter().position(|h| h.chunk.chunk_index == i).unwrap();
        prop_assert!(pos(0) < pos(1));
    }

    #[test]
    fn tokenize_is_idempotent_on_chunk_text(text in "\\PC{0,60}") {
        let once = tokenize(&text);
        prop_assert_eq!(tokenize(&once.join(" ")), once.clone());
        prop_assert!(once.iter().all(|t| !t.is_empty()));
    }
}

#[test]
fn chunk_boundaries() {
    let mut r = rng(3);
    for (n, want) in [(255, vec![255]), (256, vec![256]), (257, vec![256, 1]), (600, vec![256, 256, 88]), (0, vec![])] {
        let doc = Document { id: "d".into(), title: "t".into(), text: document_text(&mut r, n) };
        let counts: Vec<usize> = chunk_document(&doc, 256).iter().map(|c| c.token_count).collect();
        assert_eq!(counts, want, "n = {n}");
    }
}

#[test]
fn documented_search_example() {
    let idx = Bm25Index::build(vec![chunk(0, "france capital paris"), chunk(1, "berlin germany"), chunk(2, "paris population")]);
    let hits = idx.search("paris", 10);
    assert_eq!(hits.iter().map(|h| h.chunk.chunk_index).collect::<Vec<_>>(), vec![2, 0]);
    assert_eq!(idx.search("paris", 1).len(), 1);
    assert!(idx.search("tokyo", 10).is_empty());
    let ab = Bm25Index::build(vec![chunk(0, "a b"), chunk(1, "a")]);
    assert_eq!((ab.doc_freq("a"), ab.doc_freq("b"), ab.avg_len()), (2, 1, 1.5));
}

#[test]
fn verification_query_omits_unknowns() {
    let inc = Triple::parse("(France; capital; ?)").unwrap();
    assert_eq!(
        make_verification_query(&[inc], "What is the capital of France?"),
        "France capital What is the capital of France?"
    );
}

#[test]
fn fixture_corpus_has_planted_sentence() {
    let docs = load_corpus_str(FIXTURE_CORPUS).unwrap();
    let idx = Bm25Index::build(cogmg::retrieval::chunk_corpus(&docs, 256));
    let hits = idx.search("France capital What is the capital of France?", 10);
    assert!(hits.iter().any(|h| h.chunk.text.contains("the capital of france is paris")));
}

#[test]
fn cache_is_rebuilt_on_corpus_change() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("index.cache");
    let (a, built) = load_or_build_cache(FIXTURE_CORPUS.as_bytes(), &cache).unwrap();
    assert!(built);
    let (b, built) = load_or_build_cache(FIXTURE_CORPUS.as_bytes(), &cache).unwrap();
    assert!(!built);
    assert_eq!(a.search("paris", 10).len(), b.search("paris", 10).len());
    let other = "{\"id\":\"x\",\"title\":\"X\",\"text\":\"tokyo is large\"}\n";
    let (c, built) = load_or_build_cache(other.as_bytes(), &cache).unwrap();
    assert!(built);
    assert_eq!(c.n_chunks(), 1);
}
