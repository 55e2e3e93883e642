//! Shipped fixtures, embedded so the CLI and tests work from any directory.

pub const FIXTURE_KG: &str = include_str!("../fixtures/kg.jsonl");
pub const FIXTURE_CORPUS: &str = include_str!("../fixtures/corpus.jsonl");
pub const DEMO_SCRIPT: &str = include_str!("../fixtures/demo_script.jsonl");
pub const EVAL_SYNTHETIC20: &str = include_str!("../fixtures/eval_synthetic20.jsonl");
pub const EVAL_SCRIPT: &str = include_str!("../fixtures/eval_script.jsonl");

/// Named fixture aliases accepted wherever a path is expected.
pub fn by_alias(name: &str) -> Option<&'static str> {
    match name {
        "fixture" | "fixture-kg" => Some(FIXTURE_KG),
        "corpus" | "fixture-corpus" => Some(FIXTURE_CORPUS),
        "demo" => Some(DEMO_SCRIPT),
        "synthetic20" => Some(EVAL_SYNTHETIC20),
        "eval-script" => Some(EVAL_SCRIPT),
        _ => None,
    }
}
