use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LlmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmRole {
    QuestionDecomposition,
    FormalQueryGeneration,
    AnswerIntegration,
    KnowledgeDecomposition,
    KnowledgeCompletion,
    RagVerification,
    DirectAnswer,
}

impl LlmRole {
    pub const ALL: [LlmRole; 7] = [
        LlmRole::QuestionDecomposition,
        LlmRole::FormalQueryGeneration,
        LlmRole::AnswerIntegration,
        LlmRole::KnowledgeDecomposition,
        LlmRole::KnowledgeCompletion,
        LlmRole::RagVerification,
        LlmRole::DirectAnswer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LlmRole::QuestionDecomposition => "question_decomposition",
            LlmRole::FormalQueryGeneration => "formal_query_generation",
            LlmRole::AnswerIntegration => "answer_integration",
            LlmRole::KnowledgeDecomposition => "knowledge_decomposition",
            LlmRole::KnowledgeCompletion => "knowledge_completion",
            LlmRole::RagVerification => "rag_verification",
            LlmRole::DirectAnswer => "direct_answer",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            LlmRole::QuestionDecomposition => QUESTION_DECOMPOSITION,
            LlmRole::FormalQueryGeneration => FORMAL_QUERY_GENERATION,
            LlmRole::AnswerIntegration => ANSWER_INTEGRATION,
            LlmRole::KnowledgeDecomposition => KNOWLEDGE_DECOMPOSITION,
            LlmRole::KnowledgeCompletion => KNOWLEDGE_COMPLETION,
            LlmRole::RagVerification => RAG_VERIFICATION,
            LlmRole::DirectAnswer => DIRECT_ANSWER,
        }
    }

    /// Sampling temperature used by remote backends.
    pub fn default_temperature(self) -> f64 {
        match self {
            LlmRole::AnswerIntegration | LlmRole::DirectAnswer => 0.7,
            _ => 0.0,
        }
    }

    pub fn placeholders(self) -> Vec<&'static str> {
        placeholders(self.template()).into_iter().map(|(_, _, name)| name).collect()
    }
}

impl fmt::Display for LlmRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LlmRole {
    type Err = LlmError;

    fn from_str(s: &str) -> Result<Self, LlmError> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| LlmError::Config(format!("unknown role {s:?}")))
    }
}

const QUESTION_DECOMPOSITION: &str = "\
Break the question into the logical steps needed to look up its answer in a knowledge graph.
Write one step per line as `<n>. <step>`, numbered from 1.

Question: {question}
Steps:";

const FORMAL_QUERY_GENERATION: &str = "\
Translate the query steps into a KoPL program.
Write one step per line as `<index>. <Function>(\"arg\", ...) <- [<deps>]` with indices from 0.
Functions: FindAll(), Find(label), FilterConcept(concept), FilterAttrEq(key, value),
Relate(predicate, direction), QueryAttr(key), QueryName(), Count(), And(), Or().
Relate direction is \"forward\" to go from subject to object and \"backward\" to go from object to subject.

Steps:
{steps}
Program:";

const ANSWER_INTEGRATION: &str = "\
Answer the question using the facts below. Reply with a complete, explanatory sentence.

Question: {question}
Facts:
{facts}
Answer:";

const KNOWLEDGE_DECOMPOSITION: &str = "\
The knowledge graph could not answer the question. List the facts required to answer it as
triples, one per line, written (subject; predicate; object). Write ? for every unknown part and
reuse the exact entity and relation labels that appear in the steps.

Question: {question}
Steps:
{steps}
Triples:";

const KNOWLEDGE_COMPLETION: &str = "\
Replace every ? in the triples below using your own knowledge. Return the triples in the same
order, one per line, written (subject; predicate; object), leaving all known parts unchanged.{feedback}

Question: {question}
Triples:
{triples}
Completed triples:";

const RAG_VERIFICATION: &str = "\
Check the proposed completions against the documents and correct any that the documents
contradict. Return one triple per incomplete triple, in the same order, written
(subject; predicate; object), leaving the known parts of the incomplete triples unchanged.

Question: {question}
Incomplete triples:
{incomplete}
Proposed completions:
{completed}
Documents:
{documents}
Corrected triples:";

const DIRECT_ANSWER: &str = "\
Answer the question.

Question: {question}
Answer:";

/// `{name}` placeholders as (start, end, name) byte spans.
fn placeholders(template: &str) -> Vec<(usize, usize, &str)> {
    let bytes = template.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            if let Some(len) = template[i + 1..].find('}') {
                let name = &template[i + 1..i + 1 + len];
                if !name.is_empty() && name.bytes().all(|b| b.is_ascii_lowercase() || b == b'_') {
                    out.push((i, i + len + 2, name));
                    i += len + 2;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}

/// Single-pass substitution; substituted values are never re-scanned.
/// When `strict`, an unbound placeholder is an error, otherwise it is kept.
pub(crate) fn substitute(template: &str, vars: &BTreeMap<String, String>, strict: bool) -> Result<String, LlmError> {
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for (start, end, name) in placeholders(template) {
        out.push_str(&template[last..start]);
        match vars.get(name) {
            Some(v) => out.push_str(v),
            None if strict => return Err(LlmError::MissingVariable(name.to_string())),
            None => out.push_str(&template[start..end]),
        }
        last = end;
    }
    out.push_str(&template[last..]);
    Ok(out)
}

pub fn render_prompt(role: LlmRole, vars: &BTreeMap<String, String>) -> Result<String, LlmError> {
    substitute(role.template(), vars, true)
}

/// Numbered evidence block: `[1] text`, `[2] text`, ... in the given order.
pub fn render_documents<S: AsRef<str>>(texts: &[S]) -> String {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| format!("[{}] {}", i + 1, t.as_ref()))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn every_role_has_placeholders_for_question_or_steps() {
        for role in LlmRole::ALL {
            let ph = role.placeholders();
            assert!(ph.contains(&"question") || ph.contains(&"steps"), "{role}");
            assert_eq!(role.as_str().parse::<LlmRole>().unwrap(), role);
        }
    }

    #[test]
    fn completion_prompt_contains_triple_line() {
        let p = render_prompt(
            LlmRole::KnowledgeCompletion,
            &vars(&[("question", "What is the capital of France?"), ("triples", "(France; capital; ?)"), ("feedback", "")]),
        )
        .unwrap();
        assert!(p.lines().any(|l| l == "(France; capital; ?)"));
        assert!(!p.contains('{'));
    }

    #[test]
    fn missing_variable() {
        let err = render_prompt(LlmRole::DirectAnswer, &BTreeMap::new()).unwrap_err();
        assert_eq!(err, LlmError::MissingVariable("question".into()));
    }

    #[test]
    fn values_are_not_rescanned() {
        let p = render_prompt(LlmRole::DirectAnswer, &vars(&[("question", "why {question}?")])).unwrap();
        assert!(p.contains("Question: why {question}?"));
    }

    #[test]
    fn documents_enumerated_in_order() {
        let docs: Vec<String> = (0..10).map(|i| format!("doc text {i}")).collect();
        let p = render_prompt(
            LlmRole::RagVerification,
            &vars(&[
                ("question", "q"),
                ("incomplete", "(a; b; ?)"),
                ("completed", "(a; b; c)"),
                ("documents", &render_documents(&docs)),
            ]),
        )
        .unwrap();
        let mut pos = 0;
        for i in 0..10 {
            let needle = format!("[{}] doc text {}", i + 1, i);
            let at = p[pos..].find(&needle).expect("document present in order");
            pos += at + needle.len();
        }
    }
}
