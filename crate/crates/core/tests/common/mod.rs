//! Shared generators and reference implementations for the integration suites.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use cogmg::clock::LogicalClock;
use cogmg::kg::{Entity, KnowledgeGraph, RelationEdge, Triple, TypedValue};
use cogmg::kopl::{QueryProgram, Step, StepFunction};
use cogmg::llm::{Gateway, LlmRole, ScriptedBehavior};
use cogmg::queue::KnowledgeQueue;
use cogmg::retrieval::{tokenize, Chunk};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const LABELS: [&str; 8] = ["Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Eta", "Theta"];
pub const CONCEPTS: [&str; 3] = ["city", "country", "human"];
pub const PREDICATES: [&str; 3] = ["capital", "located_in", "knows"];
pub const ATTR_KEYS: [&str; 3] = ["population", "colour", "start_year"];
pub const ATTR_VALUES: [&str; 6] = ["12", "1.5", "red", "blue", "1900", "2000"];

/// (id, label, concepts, attributes in insertion order)
pub type RawEntity = (String, String, Vec<String>, Vec<(String, String)>);

/// A knowledge graph as plain facts, independent of the store's indexes.
#[derive(Debug, Clone)]
pub struct RawKg {
    pub entities: Vec<RawEntity>,
    pub edges: Vec<(String, String, String)>,
}

impl RawKg {
    pub fn random(r: &mut ChaCha8Rng, max_entities: usize) -> Self {
        let n = r.gen_range(1..=max_entities);
        let mut entities = Vec::with_capacity(n);
        for i in 0..n {
            // A small label pool makes homonyms common.
            let label = LABELS[r.gen_range(0..LABELS.len())].to_string();
            let concepts: Vec<String> =
                CONCEPTS.iter().filter(|_| r.gen_bool(0.4)).map(|c| c.to_string()).collect();
            let attrs = (0..r.gen_range(0..=3))
                .map(|_| {
                    let key = ATTR_KEYS[r.gen_range(0..ATTR_KEYS.len())].to_string();
                    let value = ATTR_VALUES[r.gen_range(0..ATTR_VALUES.len())].to_string();
                    (key, value)
                })
                .collect();
            entities.push((format!("e{i}"), label, concepts, attrs));
        }
        let edges = (0..r.gen_range(0..=2 * n))
            .map(|_| {
                let s = r.gen_range(0..n);
                let o = r.gen_range(0..n);
                let p = PREDICATES[r.gen_range(0..PREDICATES.len())];
                (format!("e{s}"), p.to_string(), format!("e{o}"))
            })
            .collect();
        RawKg { entities, edges }
    }

    pub fn build(&self) -> KnowledgeGraph {
        let mut kg = KnowledgeGraph::new();
        for (id, label, concepts, attrs) in &self.entities {
            let mut attributes: BTreeMap<String, Vec<TypedValue>> = BTreeMap::new();
            for (k, v) in attrs {
                attributes.entry(k.clone()).or_default().push(TypedValue::parse_for(k, v));
            }
            kg.insert_entity(Entity {
                id: id.clone(),
                label: label.clone(),
                concepts: concepts.iter().cloned().collect(),
                attributes,
            })
            .unwrap();
        }
        for (s, p, o) in &self.edges {
            kg.insert_edge(RelationEdge { subject: s.clone(), predicate: p.clone(), object: o.clone() }).unwrap();
        }
        kg
    }

    fn label(&self, id: &str) -> &str {
        &self.entities.iter().find(|e| e.0 == id).unwrap().1
    }

    /// All known triples as (subject label, predicate, object text).
    pub fn triples(&self) -> Vec<(String, String, String)> {
        let mut out = Vec::new();
        for (_, label, _, attrs) in &self.entities {
            for (k, v) in attrs {
                out.push((label.clone(), k.clone(), v.clone()));
            }
        }
        for (s, p, o) in &self.edges {
            out.push((self.label(s).to_string(), p.clone(), self.label(o).to_string()));
        }
        out
    }
}

/// Program as an expression tree; each node becomes one step.
#[derive(Debug, Clone)]
pub enum Expr {
    FindAll,
    Find(String),
    FilterConcept(String, Box<Expr>),
    FilterAttrEq(String, String, Box<Expr>),
    Relate(String, String, Box<Expr>),
    QueryAttr(String, Box<Expr>),
    QueryName(Box<Expr>),
    Count(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn size(&self) -> usize {
        match self {
            Expr::FindAll | Expr::Find(_) => 1,
            Expr::FilterConcept(_, e)
            | Expr::FilterAttrEq(_, _, e)
            | Expr::Relate(_, _, e)
            | Expr::QueryAttr(_, e)
            | Expr::QueryName(e)
            | Expr::Count(e) => 1 + e.size(),
            Expr::And(a, b) | Expr::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Random tree with at most `budget` nodes. Children are usually entity
    /// producing; occasionally a value producing child is planted to exercise
    /// type mismatches.
    pub fn random(r: &mut ChaCha8Rng, budget: usize) -> Expr {
        let e = Self::random_entity(r, budget.saturating_sub(1).max(1));
        if e.size() < budget && r.gen_bool(0.5) {
            let key = ATTR_KEYS[r.gen_range(0..ATTR_KEYS.len())].to_string();
            match r.gen_range(0..3) {
                0 => Expr::QueryAttr(key, Box::new(e)),
                1 => Expr::QueryName(Box::new(e)),
                _ => Expr::Count(Box::new(e)),
            }
        } else {
            e
        }
    }

    fn random_entity(r: &mut ChaCha8Rng, budget: usize) -> Expr {
        let leaf = |r: &mut ChaCha8Rng| {
            if r.gen_bool(0.3) {
                Expr::FindAll
            } else {
                // "Nobody" never appears in generated graphs.
                let mut pool: Vec<&str> = LABELS.to_vec();
                pool.push("Nobody");
                Expr::Find(pool.choose(r).unwrap().to_string())
            }
        };
        if budget <= 1 {
            return leaf(r);
        }
        let child = |r: &mut ChaCha8Rng, b: usize| -> Box<Expr> {
            if b >= 2 && r.gen_bool(0.08) {
                Box::new(Expr::Count(Box::new(Self::random_entity(r, b - 1))))
            } else {
                Box::new(Self::random_entity(r, b))
            }
        };
        match r.gen_range(0..7) {
            0 => leaf(r),
            1 => Expr::FilterConcept(CONCEPTS.choose(r).unwrap().to_string(), child(r, budget - 1)),
            2 => Expr::FilterAttrEq(
                ATTR_KEYS.choose(r).unwrap().to_string(),
                ATTR_VALUES.choose(r).unwrap().to_string(),
                child(r, budget - 1),
            ),
            3 | 4 => Expr::Relate(
                PREDICATES.choose(r).unwrap().to_string(),
                if r.gen_bool(0.5) { "forward" } else { "backward" }.to_string(),
                child(r, budget - 1),
            ),
            _ if budget >= 3 => {
                let left_budget = r.gen_range(1..budget - 1);
                let a = child(r, left_budget);
                let b = child(r, budget - 1 - a.size());
                if r.gen_bool(0.5) {
                    Expr::And(a, b)
                } else {
                    Expr::Or(a, b)
                }
            }
            _ => leaf(r),
        }
    }

    /// Post-order linearisation into a program.
    pub fn to_program(&self) -> QueryProgram {
        let mut steps = Vec::new();
        self.push_steps(&mut steps);
        QueryProgram::new(steps).expect("tree programs are valid")
    }

    fn push_steps(&self, steps: &mut Vec<Step>) -> usize {
        let (f, args, deps): (StepFunction, Vec<&str>, Vec<usize>) = match self {
            Expr::FindAll => (StepFunction::FindAll, vec![], vec![]),
            Expr::Find(l) => (StepFunction::Find, vec![l], vec![]),
            Expr::FilterConcept(c, e) => (StepFunction::FilterConcept, vec![c], vec![e.push_steps(steps)]),
            Expr::FilterAttrEq(k, v, e) => (StepFunction::FilterAttrEq, vec![k, v], vec![e.push_steps(steps)]),
            Expr::Relate(p, d, e) => (StepFunction::Relate, vec![p, d], vec![e.push_steps(steps)]),
            Expr::QueryAttr(k, e) => (StepFunction::QueryAttr, vec![k], vec![e.push_steps(steps)]),
            Expr::QueryName(e) => (StepFunction::QueryName, vec![], vec![e.push_steps(steps)]),
            Expr::Count(e) => (StepFunction::Count, vec![], vec![e.push_steps(steps)]),
            Expr::And(a, b) => {
                let (x, y) = (a.push_steps(steps), b.push_steps(steps));
                (StepFunction::And, vec![], vec![x, y])
            }
            Expr::Or(a, b) => {
                let (x, y) = (a.push_steps(steps), b.push_steps(steps));
                (StepFunction::Or, vec![], vec![x, y])
            }
        };
        let index = steps.len();
        steps.push(Step::new(index, f, &args, &deps));
        index
    }
}

#[derive(Debug, Clone)]
enum OVal {
    Set(BTreeSet<String>),
    Values(Vec<String>),
    Number(usize),
    Names(Vec<String>),
}

/// Brute-force evaluation straight from the fact lists. `None` means Failed.
pub fn oracle(expr: &Expr, kg: &RawKg) -> Option<String> {
    let v = eval(expr, kg)?;
    Some(match v {
        OVal::Set(ids) => {
            let mut labels: Vec<&str> = ids.iter().map(|id| kg.label(id)).collect();
            labels.sort();
            labels.join(", ")
        }
        OVal::Values(vs) => vs.join(", "),
        OVal::Number(n) => n.to_string(),
        OVal::Names(ns) => ns.join(", "),
    })
}

fn entity_set(expr: &Expr, kg: &RawKg) -> Option<BTreeSet<String>> {
    match eval(expr, kg)? {
        OVal::Set(s) => Some(s),
        _ => None,
    }
}

fn non_empty(s: BTreeSet<String>) -> Option<OVal> {
    (!s.is_empty()).then_some(OVal::Set(s))
}

fn eval(expr: &Expr, kg: &RawKg) -> Option<OVal> {
    match expr {
        Expr::FindAll => non_empty(kg.entities.iter().map(|e| e.0.clone()).collect()),
        Expr::Find(l) => non_empty(kg.entities.iter().filter(|e| &e.1 == l).map(|e| e.0.clone()).collect()),
        Expr::FilterConcept(c, e) => {
            let input = entity_set(e, kg)?;
            non_empty(
                kg.entities
                    .iter()
                    .filter(|ent| input.contains(&ent.0) && ent.2.contains(c))
                    .map(|ent| ent.0.clone())
                    .collect(),
            )
        }
        Expr::FilterAttrEq(k, v, e) => {
            let input = entity_set(e, kg)?;
            non_empty(
                kg.entities
                    .iter()
                    .filter(|ent| input.contains(&ent.0) && ent.3.iter().any(|(ak, av)| ak == k && av == v))
                    .map(|ent| ent.0.clone())
                    .collect(),
            )
        }
        Expr::Relate(p, d, e) => {
            let input = entity_set(e, kg)?;
            let mut out = BTreeSet::new();
            for (s, ep, o) in &kg.edges {
                if ep != p {
                    continue;
                }
                if d == "forward" && input.contains(s) {
                    out.insert(o.clone());
                }
                if d == "backward" && input.contains(o) {
                    out.insert(s.clone());
                }
            }
            non_empty(out)
        }
        Expr::QueryAttr(k, e) => {
            let input = entity_set(e, kg)?;
            let mut ents: Vec<_> = kg.entities.iter().filter(|ent| input.contains(&ent.0)).collect();
            ents.sort_by(|a, b| (&a.1, &a.0).cmp(&(&b.1, &b.0)));
            let values: Vec<String> = ents
                .iter()
                .flat_map(|ent| ent.3.iter().filter(|(ak, _)| ak == k).map(|(_, v)| v.clone()))
                .collect();
            (!values.is_empty()).then_some(OVal::Values(values))
        }
        Expr::QueryName(e) => {
            let input = entity_set(e, kg)?;
            let mut names: Vec<String> = input.iter().map(|id| kg.label(id).to_string()).collect();
            names.sort();
            Some(OVal::Names(names))
        }
        Expr::Count(e) => Some(OVal::Number(entity_set(e, kg)?.len())),
        Expr::And(a, b) => {
            let (x, y) = (entity_set(a, kg)?, entity_set(b, kg)?);
            non_empty(x.intersection(&y).cloned().collect())
        }
        Expr::Or(a, b) => {
            let (x, y) = (entity_set(a, kg)?, entity_set(b, kg)?);
            non_empty(x.union(&y).cloned().collect())
        }
    }
}

/// Programs that must fail: (text, expect_parse_error).
pub fn malformed_program(r: &mut ChaCha8Rng) -> (String, bool) {
    let label = *LABELS.choose(r).unwrap();
    let n = r.gen_range(0..1000);
    match r.gen_range(0..14) {
        0 => (format!("0. Frobnicate{n}(\"{label}\")"), true),
        1 => (format!("0. Find(\"{label}\",\"x{n}\")"), true),
        2 => ("0. And() <- [0,1]".to_string(), true),
        3 => (format!("0. Find(\"{label}\")\n1. Relate(\"capital\",\"sideways{n}\") <- [0]"), true),
        4 => (format!("0. Find(\"{label}\")\n1. FindAll()"), true),
        5 => (if r.gen_bool(0.5) { String::new() } else { " \n\n ".to_string() }, true),
        6 => (format!("0. Find(\"{label}{n}"), true),
        7 => (format!("0. Find(\"{label}\")\n2. QueryName() <- [0]"), true),
        8 => (format!("0. Find(\"{label}\")\n1. Count() <- [0]\n2. QueryAttr(\"population\") <- [1]"), false),
        9 => (format!("0. Find(\"{label}\")\n1. QueryName() <- [0]\n2. Relate(\"knows\",\"forward\") <- [1]"), false),
        10 => (
            format!("0. Find(\"{label}\")\n1. QueryAttr(\"colour\") <- [0]\n2. FindAll()\n3. And() <- [1,2]"),
            false,
        ),
        11 => (format!("0. Find(\"Nobody{n}\")\n1. QueryName() <- [0]"), false),
        12 => (format!("0. FindAll()\n1. Relate(\"no_such_pred{n}\",\"forward\") <- [0]"), false),
        _ => (format!("0. FindAll()\n1. QueryAttr(\"no_such_attr{n}\") <- [0]"), false),
    }
}

/// Quadratic BM25 straight from the formula, ranked by score then
/// (doc_id, chunk_index). Returns (chunk position, score).
pub fn bm25_reference(chunks: &[Chunk], query: &str, k: usize) -> Vec<(usize, f64)> {
    let (k1, b) = (1.2f64, 0.75f64);
    let docs: Vec<Vec<String>> = chunks.iter().map(|c| tokenize(&c.text)).collect();
    let n = docs.len() as f64;
    if docs.is_empty() {
        return Vec::new();
    }
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut terms = Vec::new();
    let mut seen = HashSet::new();
    for t in tokenize(query) {
        if seen.insert(t.clone()) {
            terms.push(t);
        }
    }
    let mut scored = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        let mut score = 0.0;
        for t in &terms {
            let tf = d.iter().filter(|w| *w == t).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = docs.iter().filter(|other| other.contains(t)).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            score += idf * (tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * d.len() as f64 / avg)));
        }
        if score > 0.0 {
            scored.push((i, score));
        }
    }
    scored.sort_by(|x, y| {
        y.1.partial_cmp(&x.1)
            .unwrap()
            .then_with(|| chunks[x.0].doc_id.cmp(&chunks[y.0].doc_id))
            .then_with(|| chunks[x.0].chunk_index.cmp(&chunks[y.0].chunk_index))
    });
    scored.truncate(k);
    scored
}

pub const VOCAB: [&str; 8] = ["paris", "france", "capital", "berlin", "river", "the", "of", "curie"];

/// Random chunk set of at most `max` chunks over a small vocabulary, with
/// several chunks per document so tie breaking on chunk_index is exercised.
pub fn random_chunks(r: &mut ChaCha8Rng, max: usize) -> Vec<Chunk> {
    let n = r.gen_range(1..=max);
    let mut chunks = Vec::with_capacity(n);
    let mut per_doc: BTreeMap<String, usize> = BTreeMap::new();
    let mut prev: Option<String> = None;
    for _ in 0..n {
        let text = match &prev {
            Some(p) if r.gen_bool(0.15) => p.clone(),
            _ => (0..r.gen_range(1..=7)).map(|_| *VOCAB.choose(r).unwrap()).collect::<Vec<_>>().join(" "),
        };
        let doc_id = format!("d{}", r.gen_range(0..4));
        let idx = per_doc.entry(doc_id.clone()).or_insert(0);
        chunks.push(Chunk { doc_id, chunk_index: *idx, token_count: tokenize(&text).len(), text: text.clone() });
        *idx += 1;
        prev = Some(text);
    }
    chunks
}

pub fn random_query(r: &mut ChaCha8Rng) -> String {
    let mut words: Vec<&str> = (0..r.gen_range(1..=4)).map(|_| *VOCAB.choose(r).unwrap()).collect();
    if r.gen_bool(0.2) {
        words.push("unindexed");
    }
    words.join(" ")
}

/// Document text with exactly `n` tokens separated by mixed punctuation.
pub fn document_text(r: &mut ChaCha8Rng, n: usize) -> String {
    const SEPS: [&str; 6] = [" ", ", ", " - ", "\n", "... ", "; "];
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push_str(SEPS.choose(r).unwrap());
        }
        let word = VOCAB.choose(r).unwrap();
        if r.gen_bool(0.2) {
            out.push_str(&word.to_uppercase());
        } else {
            out.push_str(word);
        }
        if r.gen_bool(0.1) {
            out.push_str(&i.to_string());
        }
    }
    out
}

/// Gateway whose verification role echoes the proposed completions.
pub fn echo_gateway() -> Gateway {
    let mut script = ScriptedBehavior::new();
    script.add_pattern(LlmRole::RagVerification, "", "{completed}");
    Gateway::scripted(script)
}

pub fn logical_queue() -> KnowledgeQueue {
    KnowledgeQueue::in_memory(Arc::new(LogicalClock::new()))
}

pub fn t(text: &str) -> Triple {
    Triple::parse(text).unwrap()
}

pub const QUESTION: &str = "What is the capital of France?";

/// Declared transition relation, written out independently of the library.
pub fn expected_transition(from: &str, action: &str) -> Option<&'static str> {
    match (from, action) {
        ("pending", "accept") => Some("accepted"),
        ("pending", "edit") => Some("edited"),
        ("pending", "verify") => Some("verified"),
        ("pending", "reject") => Some("rejected"),
        ("verified", "accept") => Some("accepted"),
        ("verified", "edit") => Some("edited"),
        ("verified", "reject") => Some("rejected"),
        ("edited", "accept") => Some("accepted"),
        ("edited", "reject") => Some("rejected"),
        _ => None,
    }
}

/// Gateway whose verification role always answers with `correction`.
pub fn correcting_gateway(correction: &str) -> Gateway {
    let mut script = ScriptedBehavior::new();
    script.add_pattern(LlmRole::RagVerification, "", correction);
    Gateway::scripted(script)
}

pub fn fixture_index() -> cogmg::retrieval::Bm25Index {
    let docs = cogmg::retrieval::load_corpus_str(cogmg::fixtures::FIXTURE_CORPUS).unwrap();
    cogmg::retrieval::Bm25Index::build(cogmg::retrieval::chunk_corpus(&docs, cogmg::retrieval::DEFAULT_CHUNK_TOKENS))
}

pub fn enqueue_capital(queue: &KnowledgeQueue, object: &str) -> String {
    queue
        .enqueue(QUESTION, vec![t("(France; capital; ?)")], vec![t(&format!("(France; capital; {object})"))], "agent")
        .unwrap()
}

/// Applies the action named `action` with default payloads.
pub fn apply_named(
    queue: &KnowledgeQueue,
    id: &str,
    action: &str,
    kg: &mut KnowledgeGraph,
    index: &cogmg::retrieval::Bm25Index,
    gateway: &Gateway,
    edit_object: &str,
) -> Result<(), cogmg::queue::QueueError> {
    match action {
        "accept" => queue.accept(id, kg, "admin").map(|_| ()),
        "edit" => queue.edit(id, vec![t(&format!("(France; capital; {edit_object})"))], "admin").map(|_| ()),
        "verify" => queue.verify(id, index, gateway, "admin").map(|_| ()),
        "reject" => queue.reject(id, "admin").map(|_| ()),
        other => panic!("unknown action {other}"),
    }
}

/// A fresh record driven into `status` along the shortest path.
pub fn record_in_status(
    queue: &KnowledgeQueue,
    status: &str,
    kg: &mut KnowledgeGraph,
    index: &cogmg::retrieval::Bm25Index,
    gateway: &Gateway,
) -> String {
    let id = enqueue_capital(queue, "Lyon");
    let path: &[&str] = match status {
        "pending" => &[],
        "verified" => &["verify"],
        "edited" => &["edit"],
        "accepted" => &["accept"],
        "rejected" => &["reject"],
        other => panic!("unknown status {other}"),
    };
    for a in path {
        apply_named(queue, &id, a, kg, index, gateway, "Marseille").unwrap();
    }
    id
}

pub const STATUSES: [&str; 5] = ["pending", "verified", "edited", "accepted", "rejected"];
pub const ACTIONS: [&str; 4] = ["accept", "edit", "verify", "reject"];

/// Runs the 5 x 4 matrix and returns the mismatching cells.
pub fn check_transition_matrix() -> Vec<String> {
    let index = fixture_index();
    let gateway = correcting_gateway("(France; capital; Paris)");
    let mut bad = Vec::new();
    for from in STATUSES {
        for action in ACTIONS {
            let queue = logical_queue();
            let mut kg = cogmg::kg::load_kg_str(cogmg::fixtures::FIXTURE_KG).unwrap();
            let id = record_in_status(&queue, from, &mut kg, &index, &gateway);
            let before = queue.get(&id).unwrap();
            let outcome = apply_named(&queue, &id, action, &mut kg, &index, &gateway, "Nice");
            let after = queue.get(&id).unwrap();
            let got = outcome.as_ref().ok().map(|_| after.status.as_str());
            let want = expected_transition(from, action);
            let error_ok = match (&outcome, want) {
                (Err(cogmg::queue::QueueError::TerminalState { .. }), None) => from == "accepted" || from == "rejected",
                (Err(cogmg::queue::QueueError::IllegalTransition { .. }), None) => from != "accepted" && from != "rejected",
                (Ok(()), Some(_)) => true,
                _ => false,
            };
            let unchanged_on_error = outcome.is_ok() || after == before;
            if got != want || !error_ok || !unchanged_on_error {
                bad.push(format!("{from} x {action}: got {got:?} ({outcome:?}), want {want:?}"));
            }
        }
    }
    bad
}

/// Performs `n` random legal actions (enqueue included) and returns the queue
/// together with the graph it integrated into.
pub fn random_walk(seed: u64, n: usize) -> (KnowledgeQueue, KnowledgeGraph) {
    let mut r = rng(seed);
    let index = fixture_index();
    let gateway = correcting_gateway("(France; capital; Paris)");
    let queue = logical_queue();
    let mut kg = cogmg::kg::load_kg_str(cogmg::fixtures::FIXTURE_KG).unwrap();
    let objects = ["Lyon", "Paris", "Nice", "Lille"];
    let mut done = 0;
    while done < n {
        let open: Vec<_> = queue.list(None).into_iter().filter(|rec| !rec.status.is_terminal()).collect();
        if open.is_empty() || r.gen_bool(0.2) {
            enqueue_capital(&queue, objects.choose(&mut r).unwrap());
            done += 1;
            continue;
        }
        let rec = open.choose(&mut r).unwrap();
        let legal: Vec<&str> =
            ACTIONS.iter().copied().filter(|a| expected_transition(rec.status.as_str(), a).is_some()).collect();
        let action = legal.choose(&mut r).unwrap();
        apply_named(&queue, &rec.id, action, &mut kg, &index, &gateway, objects.choose(&mut r).unwrap()).unwrap();
        done += 1;
    }
    (queue, kg)
}
