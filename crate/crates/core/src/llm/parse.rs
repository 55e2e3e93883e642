//! Strict parsers for model output. They never panic; malformed text yields
//! a structured [`LlmError`].

use super::LlmError;
use crate::kg::Triple;

/// Numbered lines `<n>. <text>`, returned in ascending `n`. Anything else is ignored.
pub fn parse_decomposition_steps(text: &str) -> Result<Vec<String>, LlmError> {
    let mut steps: Vec<(u64, String)> = text
        .lines()
        .filter_map(|line| {
            let line = line.trim();
            let digits = line.find(|c: char| !c.is_ascii_digit())?;
            if digits == 0 {
                return None;
            }
            let n: u64 = line[..digits].parse().ok()?;
            let body = line[digits..].strip_prefix('.')?.trim();
            (!body.is_empty()).then(|| (n, body.to_string()))
        })
        .collect();
    if steps.is_empty() {
        return Err(LlmError::MalformedOutput("no numbered steps in output".into()));
    }
    steps.sort_by_key(|(n, _)| *n);
    Ok(steps.into_iter().map(|(_, s)| s).collect())
}

/// Renders steps back into the numbered-list form.
pub fn render_steps(steps: &[String]) -> String {
    steps
        .iter()
        .enumerate()
        .map(|(i, s)| format!("{}. {}", i + 1, s))
        .collect::<Vec<_>>()
        .join("\n")
}

fn strip_list_marker(line: &str) -> &str {
    let line = line.trim();
    if let Some(rest) = line.strip_prefix(['-', '*']) {
        return rest.trim_start();
    }
    let digits = line.find(|c: char| !c.is_ascii_digit()).unwrap_or(0);
    if digits > 0 {
        if let Some(rest) = line[digits..].strip_prefix(['.', ')']) {
            return rest.trim_start();
        }
    }
    line
}

/// Every line shaped `(s; p; o)` (optionally behind a list marker) becomes a
/// triple, `?` meaning unknown. Other lines are ignored.
pub fn parse_triples(text: &str) -> Result<Vec<Triple>, LlmError> {
    let mut out = Vec::new();
    for line in text.lines() {
        let candidate = strip_list_marker(line);
        let shaped = candidate.starts_with('(')
            && candidate.ends_with(')')
            && candidate.matches(';').count() == 2;
        if !shaped {
            continue;
        }
        let triple = Triple::parse(candidate).map_err(|e| LlmError::InvalidTriple(format!("{candidate}: {e}")))?;
        out.push(triple);
    }
    if out.is_empty() {
        return Err(LlmError::MalformedOutput("no (s; p; o) triples in output".into()));
    }
    Ok(out)
}

pub fn render_triples(triples: &[Triple]) -> String {
    triples.iter().map(Triple::to_string).collect::<Vec<_>>().join("\n")
}

/// Completed triples matched to `expected` by position. Known slots of each
/// expected triple must come back unchanged and every slot must be filled.
pub fn parse_completions(text: &str, expected: &[Triple]) -> Result<Vec<Triple>, LlmError> {
    let parsed = parse_triples(text)?;
    if parsed.len() != expected.len() {
        return Err(LlmError::MalformedOutput(format!(
            "expected {} completed triples, got {}",
            expected.len(),
            parsed.len()
        )));
    }
    for (i, (want, got)) in expected.iter().zip(&parsed).enumerate() {
        if !want.known_slots_agree(got) {
            return Err(LlmError::SlotMismatch { index: i, expected: want.to_string(), got: got.to_string() });
        }
        if !got.is_complete() {
            return Err(LlmError::MalformedOutput(format!("triple {got} still has unknown slots")));
        }
    }
    Ok(parsed)
}
