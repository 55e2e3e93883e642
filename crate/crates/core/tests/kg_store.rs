mod common;

use std::collections::BTreeSet;

use cogmg::fixtures::FIXTURE_KG;
use cogmg::kg::{load_kg_str, restore, snapshot, AddOutcome, KnowledgeGraph, Slot, Triple};
use common::{rng, t, RawKg, ATTR_VALUES, LABELS, PREDICATES};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn all_facts(kg: &KnowledgeGraph) -> BTreeSet<Triple> {
    // A pattern with only the predicate unknown cannot cover everything, so
    // the facts are assembled per predicate-free pattern over each subject.
    let mut out = BTreeSet::new();
    for e in kg.entities() {
        out.extend(kg.match_triples(&Triple::new(Slot::Known(e.label.clone()), Slot::Unknown, Slot::Unknown).unwrap()));
    }
    out
}

fn random_pattern(r: &mut rand_chacha::ChaCha8Rng, raw: &RawKg) -> Triple {
    let facts = raw.triples();
    let (s, p, o) = match facts.choose(r) {
        Some(f) if r.gen_bool(0.7) => f.clone(),
        _ => (
            LABELS.choose(r).unwrap().to_string(),
            PREDICATES.choose(r).unwrap().to_string(),
            ATTR_VALUES.choose(r).unwrap().to_string(),
        ),
    };
    loop {
        let slot = |r: &mut rand_chacha::ChaCha8Rng, v: &str| {
            if r.gen_bool(0.4) {
                Slot::Unknown
            } else {
                Slot::Known(v.to_string())
            }
        };
        let (a, b, c) = (slot(r, &s), slot(r, &p), slot(r, &o));
        if let Ok(t) = Triple::new(a, b, c) {
            return t;
        }
    }
}

fn slot_text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9_][A-Za-z0-9_ .]{0,10}[A-Za-z0-9_]|[A-Za-z0-9]".prop_filter("not the unknown mark", |s| s != "?")
}

proptest! {
    #[test]
    fn unification_is_sound_and_complete(seed in any::<u64>()) {
        let mut r = rng(seed);
        let raw = RawKg::random(&mut r, 12);
        let kg = raw.build();
        let facts = all_facts(&kg);
        for _ in 0..5 {
            let pattern = random_pattern(&mut r, &raw);
            let found: BTreeSet<Triple> = kg.match_triples(&pattern).into_iter().collect();
            for f in &found {
                prop_assert!(f.is_complete());
                let [s, p, o] = f.slots().map(|x| x.known().unwrap().to_string());
                prop_assert!(pattern.unifies(&s, &p, &o));
            }
            let expected: BTreeSet<Triple> = facts
                .iter()
                .filter(|f| {
                    let [s, p, o] = f.slots().map(|x| x.known().unwrap().to_string());
                    pattern.unifies(&s, &p, &o)
                })
                .cloned()
                .collect();
            prop_assert_eq!(found, expected);
        }
    }

    #[test]
    fn remove_then_match_is_empty(seed in any::<u64>()) {
        let mut r = rng(seed);
        let raw = RawKg::random(&mut r, 12);
        let mut kg = raw.build();
        let before = all_facts(&kg);
        let pattern = random_pattern(&mut r, &raw);
        let matched = kg.match_triples(&pattern).len();
        let removed = kg.remove_matching(&pattern);
        prop_assert!(removed >= matched);
        prop_assert!(kg.match_triples(&pattern).is_empty());
        let survivors: BTreeSet<Triple> = before
            .into_iter()
            .filter(|f| {
                let [s, p, o] = f.slots().map(|x| x.known().unwrap().to_string());
                !pattern.unifies(&s, &p, &o)
            })
            .collect();
        prop_assert_eq!(all_facts(&kg), survivors);
        prop_assert_eq!(kg.label_index(), &kg.rebuild_label_index());
    }

    #[test]
    fn add_then_match_finds_it(seed in any::<u64>(), s in slot_text(), p in slot_text(), o in slot_text()) {
        let mut r = rng(seed);
        let mut kg = RawKg::random(&mut r, 12).build();
        // Mix fresh labels with existing ones so both edge and attribute paths run.
        let s = if r.gen_bool(0.5) { LABELS.choose(&mut r).unwrap().to_string() } else { s };
        let o = if r.gen_bool(0.3) { LABELS.choose(&mut r).unwrap().to_string() } else { o };
        let triple = Triple::known(&s, &p, &o).unwrap();
        let first = kg.add_triple(&triple).unwrap();
        prop_assert!(kg.match_triples(&triple).contains(&triple), "{} not found after {:?}", triple, first);
        prop_assert_eq!(kg.add_triple(&triple).unwrap(), AddOutcome::AlreadyPresent);
        prop_assert_eq!(kg.label_index(), &kg.rebuild_label_index());
    }

    #[test]
    fn snapshot_round_trips(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut kg = RawKg::random(&mut r, 12).build();
        for i in 0..r.gen_range(0..4) {
            kg.add_triple(&Triple::known(&format!("Fresh{i}"), "knows", LABELS.choose(&mut r).unwrap()).unwrap()).unwrap();
        }
        let bytes = snapshot(&kg);
        let back = restore(&bytes).unwrap();
        prop_assert_eq!(&back, &kg);
        prop_assert_eq!(snapshot(&back), bytes);
    }

    #[test]
    fn triple_text_round_trips(s in slot_text(), p in slot_text(), o in slot_text(), mask in 0u8..7) {
        let slot = |bit: u8, v: &str| if mask & bit != 0 { Slot::Unknown } else { Slot::Known(v.to_string()) };
        let triple = Triple::new(slot(1, &s), slot(2, &p), slot(4, &o)).unwrap();
        prop_assert_eq!(Triple::parse(&triple.to_string()).unwrap(), triple.clone());
        let json = serde_json::to_string(&triple).unwrap();
        prop_assert_eq!(serde_json::from_str::<Triple>(&json).unwrap(), triple);
    }
}

#[test]
fn fixture_counts() {
    let kg = load_kg_str(FIXTURE_KG).unwrap();
    let s = kg.stats();
    assert_eq!((s.entities, s.edges, s.attributes), (7, 5, 5));
    assert_eq!(all_facts(&kg).len(), 10);
}

#[test]
fn completed_literal_becomes_attribute_and_label_becomes_edge() {
    let mut kg = load_kg_str(FIXTURE_KG).unwrap();
    assert_eq!(kg.add_triple(&t("(Poland; capital; Warsaw)")).unwrap(), AddOutcome::AddedEdge);
    assert_eq!(kg.add_triple(&t("(Poland; population; 36000000)")).unwrap(), AddOutcome::AddedAttribute);
    let poland = kg.ids_for_label("Poland").next().unwrap().clone();
    assert!(poland.starts_with("gen:"));
    assert_eq!(kg.match_triples(&t("(Poland; ?; ?)")).len(), 2);
    assert!(kg.add_triple(&t("(Poland; capital; ?)")).is_err());
}

#[test]
fn removing_capital_leaves_entity() {
    let mut kg = load_kg_str(FIXTURE_KG).unwrap();
    assert_eq!(kg.remove_matching(&t("(France; capital; ?)")), 1);
    assert_eq!(kg.entity_count(), 7);
    assert!(kg.match_triples(&t("(France; capital; ?)")).is_empty());
    assert_eq!(kg.match_triples(&t("(?; capital; ?)")), vec![t("(Germany; capital; Berlin)")]);
}
