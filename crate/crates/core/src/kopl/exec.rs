use std::collections::BTreeSet;
use std::fmt;

use super::program::{Direction, QueryProgram, Step, StepFunction};
use crate::kg::{KnowledgeGraph, TypedValue};

pub const FAILED: &str = "Failed";

#[derive(Debug, Clone, PartialEq)]
pub enum ExecValue {
    EntitySet(BTreeSet<String>),
    ValueList(Vec<TypedValue>),
    Number(u64),
    Name(Vec<String>),
}

impl ExecValue {
    fn kind(&self) -> &'static str {
        match self {
            ExecValue::EntitySet(_) => "entity set",
            ExecValue::ValueList(_) => "value list",
            ExecValue::Number(_) => "number",
            ExecValue::Name(_) => "name list",
        }
    }

    /// Canonical answer text. Entity sets render as their labels in ascending order.
    pub fn render(&self, kg: &KnowledgeGraph) -> String {
        match self {
            ExecValue::EntitySet(ids) => sorted_labels(kg, ids).join(", "),
            ExecValue::ValueList(values) => {
                values.iter().map(TypedValue::canonical).collect::<Vec<_>>().join(", ")
            }
            ExecValue::Number(n) => n.to_string(),
            ExecValue::Name(names) => names.join(", "),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecResult {
    Success { answer: String, value: ExecValue },
    Failed,
}

impl ExecResult {
    pub fn is_success(&self) -> bool {
        matches!(self, ExecResult::Success { .. })
    }

    /// The answer on success, the literal `"Failed"` otherwise.
    pub fn observation(&self) -> &str {
        match self {
            ExecResult::Success { answer, .. } => answer,
            ExecResult::Failed => FAILED,
        }
    }
}

impl fmt::Display for ExecResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.observation())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepFailure(pub String);

impl fmt::Display for StepFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn fail<T>(reason: impl Into<String>) -> Result<T, StepFailure> {
    Err(StepFailure(reason.into()))
}

fn sorted_labels(kg: &KnowledgeGraph, ids: &BTreeSet<String>) -> Vec<String> {
    let mut labels: Vec<String> = ids
        .iter()
        .filter_map(|id| kg.entity(id).map(|e| e.label.clone()))
        .collect();
    labels.sort();
    labels
}

/// (label, id) ordering so ties between homonymous entities stay deterministic.
fn label_order<'a>(kg: &'a KnowledgeGraph, ids: &'a BTreeSet<String>) -> Vec<&'a crate::kg::Entity> {
    let mut ents: Vec<_> = ids.iter().filter_map(|id| kg.entity(id)).collect();
    ents.sort_by(|a, b| a.label.cmp(&b.label).then_with(|| a.id.cmp(&b.id)));
    ents
}

fn non_empty(set: BTreeSet<String>, what: &str) -> Result<ExecValue, StepFailure> {
    if set.is_empty() {
        fail(format!("{what} produced an empty entity set"))
    } else {
        Ok(ExecValue::EntitySet(set))
    }
}

fn entity_input<'a>(step: &Step, inputs: &'a [ExecValue], i: usize) -> Result<&'a BTreeSet<String>, StepFailure> {
    match inputs.get(i) {
        Some(ExecValue::EntitySet(s)) => Ok(s),
        Some(other) => fail(format!("{} expects an entity set, got a {}", step.function, other.kind())),
        None => fail(format!("{} is missing input {i}", step.function)),
    }
}

/// Evaluates one step given the values of its dependencies. Pure in
/// `(step, inputs, kg)`.
pub fn evaluate_step(step: &Step, inputs: &[ExecValue], kg: &KnowledgeGraph) -> Result<ExecValue, StepFailure> {
    let (nargs, ndeps) = step.function.arity();
    if inputs.len() != ndeps || step.args.len() != nargs {
        return fail(format!("{} arity mismatch", step.function));
    }
    let arg = |i: usize| step.args[i].as_str();
    match step.function {
        StepFunction::FindAll => non_empty(kg.entities().map(|e| e.id.clone()).collect(), "FindAll"),
        StepFunction::Find => {
            let ids: BTreeSet<String> = kg.ids_for_label(arg(0)).cloned().collect();
            if ids.is_empty() {
                return fail(format!("no entity labeled {:?}", arg(0)));
            }
            Ok(ExecValue::EntitySet(ids))
        }
        StepFunction::FilterConcept => {
            let input = entity_input(step, inputs, 0)?;
            let out = input
                .iter()
                .filter(|id| kg.entity(id).is_some_and(|e| e.concepts.contains(arg(0))))
                .cloned()
                .collect();
            non_empty(out, "FilterConcept")
        }
        StepFunction::FilterAttrEq => {
            let input = entity_input(step, inputs, 0)?;
            let (key, want) = (arg(0), arg(1));
            let out = input
                .iter()
                .filter(|id| {
                    kg.entity(id).is_some_and(|e| {
                        e.attributes.get(key).is_some_and(|vs| vs.iter().any(|v| v.canonical() == want))
                    })
                })
                .cloned()
                .collect();
            non_empty(out, "FilterAttrEq")
        }
        StepFunction::Relate => {
            let input = entity_input(step, inputs, 0)?;
            let Some(dir) = Direction::parse(arg(1)) else {
                return fail(format!("bad direction {:?}", arg(1)));
            };
            let pred = arg(0);
            let out = kg
                .edges()
                .filter(|e| e.predicate == pred)
                .filter_map(|e| match dir {
                    Direction::Forward if input.contains(&e.subject) => Some(e.object.clone()),
                    Direction::Backward if input.contains(&e.object) => Some(e.subject.clone()),
                    _ => None,
                })
                .collect();
            non_empty(out, "Relate")
        }
        StepFunction::QueryAttr => {
            let input = entity_input(step, inputs, 0)?;
            let values: Vec<TypedValue> = label_order(kg, input)
                .into_iter()
                .filter_map(|e| e.attributes.get(arg(0)))
                .flatten()
                .cloned()
                .collect();
            if values.is_empty() {
                return fail(format!("no entity carries attribute {:?}", arg(0)));
            }
            Ok(ExecValue::ValueList(values))
        }
        StepFunction::QueryName => {
            let input = entity_input(step, inputs, 0)?;
            Ok(ExecValue::Name(sorted_labels(kg, input)))
        }
        StepFunction::Count => {
            let input = entity_input(step, inputs, 0)?;
            Ok(ExecValue::Number(input.len() as u64))
        }
        StepFunction::And | StepFunction::Or => {
            let a = entity_input(step, inputs, 0)?;
            let b = entity_input(step, inputs, 1)?;
            let out: BTreeSet<String> = if step.function == StepFunction::And {
                a.intersection(b).cloned().collect()
            } else {
                a.union(b).cloned().collect()
            };
            non_empty(out, step.function.name())
        }
    }
}

/// Runs the program. Any runtime problem collapses to [`ExecResult::Failed`].
pub fn execute(program: &QueryProgram, kg: &KnowledgeGraph) -> ExecResult {
    match run(program, kg) {
        Ok(value) => ExecResult::Success { answer: value.render(kg), value },
        Err(_) => ExecResult::Failed,
    }
}

/// Like [`execute`] but keeps the failure reason for diagnostics.
pub fn run(program: &QueryProgram, kg: &KnowledgeGraph) -> Result<ExecValue, StepFailure> {
    let mut values: Vec<ExecValue> = Vec::with_capacity(program.steps().len());
    for step in program.steps() {
        let inputs: Vec<ExecValue> = step
            .deps
            .iter()
            .map(|&d| values.get(d).cloned().ok_or_else(|| StepFailure(format!("dangling dependency {d}"))))
            .collect::<Result<_, _>>()?;
        values.push(evaluate_step(step, &inputs, kg)?);
    }
    let value = values.pop().ok_or_else(|| StepFailure("empty program".into()))?;
    if let ExecValue::Name(names) = &value {
        if names.is_empty() {
            return fail("empty result");
        }
    }
    Ok(value)
}
