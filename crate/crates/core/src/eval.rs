//! Three-scenario evaluation: model alone, the full loop with the needed
//! knowledge deleted, and the full loop with it present.
//!
//! Every item runs against its own scratch copy of the graph and its own
//! queue, so the caller's graph is never modified.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{Agent, AgentDeps, Route};
use crate::clock::Clock;
use crate::kg::{KnowledgeGraph, Triple};
use crate::llm::Gateway;
use crate::queue::KnowledgeQueue;

pub const METRIC_NOTE: &str = "Correct means the gold answer appears in the final answer, ignoring case.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("FixtureError at line {line}: {reason}")]
    Fixture { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalItem {
    pub question: String,
    pub gold_answer: String,
    pub gold_triples: Vec<Triple>,
}

pub fn load_items(text: &str) -> Result<Vec<EvalItem>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| EvalError::Fixture { line: i + 1, reason };
        let item: EvalItem = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if item.question.trim().is_empty() || item.gold_answer.trim().is_empty() {
            return Err(bad("question and gold_answer must be non-empty".into()));
        }
        if item.gold_triples.is_empty() {
            return Err(bad("gold_triples must be non-empty".into()));
        }
        if let Some(t) = item.gold_triples.iter().find(|t| !t.is_complete()) {
            return Err(bad(format!("gold triple {t} has unknown slots")));
        }
        out.push(item);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Direct,
    WithoutKnowledge,
    Updated,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Direct, Mode::WithoutKnowledge, Mode::Updated];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Direct => "direct",
            Mode::WithoutKnowledge => "without_knowledge",
            Mode::Updated => "updated",
        }
    }

    /// Row label in the comparison table.
    pub fn label(self) -> &'static str {
        match self {
            Mode::Direct => "Direct Answer",
            Mode::WithoutKnowledge => "CogMG w/o Knowledge",
            Mode::Updated => "CogMG Update",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let norm = s.replace('-', "_");
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemResult {
    pub index: usize,
    pub question: String,
    pub answer: String,
    pub route: Option<Route>,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub mode: Mode,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub per_item: Vec<ItemResult>,
}

impl ScenarioReport {
    fn from_items(mode: Mode, mut per_item: Vec<ItemResult>) -> Self {
        per_item.sort_by_key(|r| r.index);
        let n = per_item.len();
        let correct = per_item.iter().filter(|r| r.correct).count();
        let accuracy = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
        Self { mode, n, correct, accuracy, per_item }
    }

    /// Accuracy as a whole percentage, rounded half up.
    pub fn percent(&self) -> usize {
        if self.n == 0 {
            0
        } else {
            (self.correct * 200 + self.n) / (self.n * 2)
        }
    }

    pub fn route_count(&self, route: Route) -> usize {
        self.per_item.iter().filter(|r| r.route == Some(route)).count()
    }
}

pub fn is_correct(answer: &str, gold: &str) -> bool {
    answer.to_lowercase().contains(&gold.to_lowercase())
}

pub struct EvalDeps<'a> {
    pub kg: &'a KnowledgeGraph,
    pub gateway: &'a Gateway,
    pub clock: &'a dyn Clock,
}

fn scratch_graph(base: &KnowledgeGraph, item: &EvalItem, mode: Mode) -> Result<KnowledgeGraph, String> {
    let mut kg = base.clone();
    for t in &item.gold_triples {
        match mode {
            Mode::WithoutKnowledge => {
                kg.remove_matching(t);
            }
            Mode::Updated => {
                kg.add_triple(t).map_err(|e| e.to_string())?;
            }
            Mode::Direct => {}
        }
    }
    Ok(kg)
}

fn run_item(agent: &Agent, index: usize, item: &EvalItem, mode: Mode, deps: &EvalDeps<'_>) -> ItemResult {
    let outcome = match mode {
        Mode::Direct => agent.direct_answer(&item.question, deps.gateway, deps.clock).map_err(|e| e.to_string()),
        Mode::WithoutKnowledge | Mode::Updated => scratch_graph(deps.kg, item, mode).and_then(|kg| {
            let queue = KnowledgeQueue::in_memory(std::sync::Arc::new(crate::clock::LogicalClock::new()));
            let run = AgentDeps { kg: &kg, gateway: deps.gateway, queue: &queue, clock: deps.clock };
            agent.answer_question(&item.question, &run).map_err(|e| e.to_string())
        }),
    };
    match outcome {
        Ok(trace) => ItemResult {
            index,
            question: item.question.clone(),
            correct: is_correct(&trace.final_answer, &item.gold_answer),
            answer: trace.final_answer,
            route: trace.route,
            error: None,
        },
        Err(reason) => ItemResult {
            index,
            question: item.question.clone(),
            answer: String::new(),
            route: None,
            correct: false,
            error: Some(reason),
        },
    }
}

pub fn run_scenario(items: &[EvalItem], mode: Mode, deps: &EvalDeps<'_>) -> ScenarioReport {
    let agent = Agent::new();
    let per_item = items.iter().enumerate().map(|(i, item)| run_item(&agent, i, item, mode, deps)).collect();
    ScenarioReport::from_items(mode, per_item)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Records,
}

#[derive(Serialize, Deserialize)]
struct ItemRecord {
    mode: Mode,
    #[serde(flatten)]
    item: ItemResult,
}

/// Renders reports as a Method/Accuracy table, or as one record per item.
pub fn emit_report(reports: &[ScenarioReport], format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => {
            let width = reports.iter().map(|r| r.mode.label().len()).max().unwrap_or(0).max("Method".len());
            let mut out = format!("| {:<width$} | Accuracy |\n|{}|----------|\n", "Method", "-".repeat(width + 2));
            for r in reports {
                out.push_str(&format!("| {:<width$} | {:>8} |\n", r.mode.label(), format!("{}%", r.percent())));
            }
            let n = reports.first().map_or(0, |r| r.n);
            out.push_str(&format!("\n{METRIC_NOTE} n = {n}.\n"));
            out
        }
        ReportFormat::Records => {
            let mut out = String::new();
            for r in reports {
                for item in &r.per_item {
                    let rec = ItemRecord { mode: r.mode, item: item.clone() };
                    out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
                    out.push('\n');
                }
            }
            out
        }
    }
}

/// Rebuilds reports from the record format, in first-seen mode order.
pub fn parse_records(text: &str) -> Result<Vec<ScenarioReport>, EvalError> {
    let mut groups: Vec<(Mode, Vec<ItemResult>)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ItemRecord =
            serde_json::from_str(line).map_err(|e| EvalError::Fixture { line: i + 1, reason: e.to_string() })?;
        match groups.iter_mut().find(|(m, _)| *m == rec.mode) {
            Some((_, items)) => items.push(rec.item),
            None => groups.push((rec.mode, vec![rec.item])),
        }
    }
    Ok(groups.into_iter().map(|(m, items)| ScenarioReport::from_items(m, items)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::LogicalClock;
    use crate::fixtures::{EVAL_SCRIPT, EVAL_SYNTHETIC20, FIXTURE_KG};
    use crate::kg::{load_kg_str, snapshot};
    use crate::llm::ScriptedBehavior;

    fn setup() -> (KnowledgeGraph, Gateway, Vec<EvalItem>) {
        (
            load_kg_str(FIXTURE_KG).unwrap(),
            Gateway::scripted(ScriptedBehavior::parse_str(EVAL_SCRIPT).unwrap()),
            load_items(EVAL_SYNTHETIC20).unwrap(),
        )
    }

    #[test]
    fn fixture_items_load() {
        let items = load_items(EVAL_SYNTHETIC20).unwrap();
        assert_eq!(items.len(), 20);
        assert_eq!(items[0].gold_triples, vec![Triple::parse("(France; capital; Paris)").unwrap()]);
    }

    #[test]
    fn fixture_errors() {
        let e = load_items("{\"question\":\"q\",\"gold_answer\":\"a\",\"gold_triples\":[[\"a\",\"b\",\"?\"]]}").unwrap_err();
        assert!(matches!(e, EvalError::Fixture { line: 1, .. }));
        assert!(load_items("\n{\"question\":\"q\",\"gold_answer\":\"a\",\"gold_triples\":[]}").is_err());
        assert!(load_items("nope").is_err());
    }

    #[test]
    fn scenarios_on_fixture() {
        let (kg, gateway, items) = setup();
        let clock = LogicalClock::new();
        let before = snapshot(&kg);
        let deps = EvalDeps { kg: &kg, gateway: &gateway, clock: &clock };
        let reports: Vec<ScenarioReport> = Mode::ALL.iter().map(|&m| run_scenario(&items, m, &deps)).collect();
        assert_eq!(snapshot(&kg), before);
        let [direct, without, updated] = [&reports[0], &reports[1], &reports[2]];
        assert_eq!((direct.correct, without.correct, updated.correct), (8, 9, 20));
        assert_eq!(without.route_count(Route::KgMiss), 20);
        assert_eq!(updated.route_count(Route::KgHit), 20);
        assert_eq!(direct.route_count(Route::DirectOnly), 20);
        let table = emit_report(&reports, ReportFormat::Table);
        assert!(table.contains("| Direct Answer       |      40% |"), "{table}");
        assert!(table.contains("| CogMG w/o Knowledge |      45% |"), "{table}");
        assert!(table.contains("| CogMG Update        |     100% |"), "{table}");
    }

    #[test]
    fn records_round_trip() {
        let (kg, gateway, items) = setup();
        let clock = LogicalClock::new();
        let deps = EvalDeps { kg: &kg, gateway: &gateway, clock: &clock };
        let reports: Vec<ScenarioReport> = Mode::ALL.iter().map(|&m| run_scenario(&items[..4], m, &deps)).collect();
        let text = emit_report(&reports, ReportFormat::Records);
        assert_eq!(text.lines().count(), 12);
        assert_eq!(parse_records(&text).unwrap(), reports);
    }

    #[test]
    fn empty_items() {
        let (kg, gateway, _) = setup();
        let clock = LogicalClock::new();
        let r = run_scenario(&[], Mode::Updated, &EvalDeps { kg: &kg, gateway: &gateway, clock: &clock });
        assert_eq!((r.n, r.correct, r.accuracy, r.percent()), (0, 0, 0.0, 0));
    }

    #[test]
    fn failures_count_as_incorrect() {
        let (kg, _, items) = setup();
        let gateway = Gateway::scripted(ScriptedBehavior::new());
        let clock = LogicalClock::new();
        let r = run_scenario(&items[..2], Mode::Updated, &EvalDeps { kg: &kg, gateway: &gateway, clock: &clock });
        assert_eq!(r.correct, 0);
        assert!(r.per_item.iter().all(|i| i.error.as_deref().is_some_and(|e| e.contains("NoScriptedResponse"))));
    }

    #[test]
    fn percent_rounding() {
        let mk = |correct, n| ScenarioReport { mode: Mode::Direct, n, correct, accuracy: 0.0, per_item: vec![] };
        assert_eq!(mk(1, 3).percent(), 33);
        assert_eq!(mk(2, 3).percent(), 67);
        assert_eq!(mk(1, 8).percent(), 13);
        assert_eq!("without-knowledge".parse::<Mode>().unwrap(), Mode::WithoutKnowledge);
    }
}
