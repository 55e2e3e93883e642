use std::fmt;
use std::str::FromStr;

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepFunction {
    FindAll,
    Find,
    FilterConcept,
    FilterAttrEq,
    Relate,
    QueryAttr,
    QueryName,
    Count,
    And,
    Or,
}

impl StepFunction {
    pub const ALL: [StepFunction; 10] = [
        StepFunction::FindAll,
        StepFunction::Find,
        StepFunction::FilterConcept,
        StepFunction::FilterAttrEq,
        StepFunction::Relate,
        StepFunction::QueryAttr,
        StepFunction::QueryName,
        StepFunction::Count,
        StepFunction::And,
        StepFunction::Or,
    ];

    /// (argument count, dependency count)
    pub fn arity(self) -> (usize, usize) {
        use StepFunction::*;
        match self {
            FindAll => (0, 0),
            Find => (1, 0),
            FilterConcept => (1, 1),
            FilterAttrEq => (2, 1),
            Relate => (2, 1),
            QueryAttr => (1, 1),
            QueryName => (0, 1),
            Count => (0, 1),
            And | Or => (0, 2),
        }
    }

    pub fn name(self) -> &'static str {
        use StepFunction::*;
        match self {
            FindAll => "FindAll",
            Find => "Find",
            FilterConcept => "FilterConcept",
            FilterAttrEq => "FilterAttrEq",
            Relate => "Relate",
            QueryAttr => "QueryAttr",
            QueryName => "QueryName",
            Count => "Count",
            And => "And",
            Or => "Or",
        }
    }
}

impl FromStr for StepFunction {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Self::ALL.into_iter().find(|f| f.name() == s).ok_or(())
    }
}

impl fmt::Display for StepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "forward" => Some(Direction::Forward),
            "backward" => Some(Direction::Backward),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub index: usize,
    pub function: StepFunction,
    pub args: Vec<String>,
    pub deps: Vec<usize>,
}

impl Step {
    pub fn new(index: usize, function: StepFunction, args: &[&str], deps: &[usize]) -> Self {
        Self { index, function, args: args.iter().map(|s| s.to_string()).collect(), deps: deps.to_vec() }
    }

    /// Checks arity, argument domain, and that deps point strictly backwards.
    fn validate(&self, line: usize) -> Result<(), ParseError> {
        let (nargs, ndeps) = self.function.arity();
        if self.args.len() != nargs {
            return Err(ParseError::new(
                line,
                format!("{} takes {} argument(s), got {}", self.function, nargs, self.args.len()),
            ));
        }
        if self.deps.len() != ndeps {
            return Err(ParseError::new(
                line,
                format!("{} takes {} dependency(ies), got {}", self.function, ndeps, self.deps.len()),
            ));
        }
        if let Some(d) = self.deps.iter().find(|&&d| d >= self.index) {
            return Err(ParseError::new(line, format!("step {} depends on non-earlier step {d}", self.index)));
        }
        if self.function == StepFunction::Relate && Direction::parse(&self.args[1]).is_none() {
            return Err(ParseError::new(
                line,
                format!("Relate direction must be \"forward\" or \"backward\", got {:?}", self.args[1]),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}. {}(", self.index, self.function)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write_quoted(f, a)?;
        }
        f.write_str(")")?;
        if !self.deps.is_empty() {
            let deps: Vec<String> = self.deps.iter().map(|d| d.to_string()).collect();
            write!(f, " <- [{}]", deps.join(","))?;
        }
        Ok(())
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

/// A validated, topologically ordered step DAG. The last step is the result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryProgram {
    steps: Vec<Step>,
}

impl QueryProgram {
    pub fn new(steps: Vec<Step>) -> Result<Self, ParseError> {
        if steps.is_empty() {
            return Err(ParseError::new(0, "empty program"));
        }
        for (i, step) in steps.iter().enumerate() {
            if step.index != i {
                return Err(ParseError::new(i + 1, format!("expected step index {i}, found {}", step.index)));
            }
            step.validate(i + 1)?;
        }
        let mut used = vec![false; steps.len()];
        for step in &steps {
            for &d in &step.deps {
                used[d] = true;
            }
        }
        if let Some(unused) = used[..steps.len() - 1].iter().position(|u| !u) {
            return Err(ParseError::new(unused + 1, format!("step {unused} is never used by a later step")));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }
}

impl fmt::Display for QueryProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Parses the canonical program text, one step per line:
/// `<index>. <Function>("arg", ...) <- [dep, ...]`.
/// Blank lines are skipped; surrounding whitespace is tolerated.
pub fn parse_program(text: &str) -> Result<QueryProgram, ParseError> {
    let mut steps = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        last_line = i + 1;
        steps.push(parse_step(line, i + 1, steps.len())?);
    }
    if steps.is_empty() {
        return Err(ParseError::new(last_line, "empty program"));
    }
    QueryProgram::new(steps)
}

fn parse_step(line: &str, lineno: usize, expected_index: usize) -> Result<Step, ParseError> {
    let err = |reason: String| ParseError::new(lineno, reason);
    let mut cur = Cursor::new(line);

    let index_text = cur.take_while(|c| c.is_ascii_digit());
    let index: usize = index_text.parse().map_err(|_| err("expected a step index".into()))?;
    if index != expected_index {
        return Err(err(format!("expected step index {expected_index}, found {index}")));
    }
    cur.expect('.').map_err(err)?;
    cur.skip_ws();

    let name = cur.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
    let function: StepFunction =
        name.parse().map_err(|_| err(format!("unknown function {name:?}")))?;
    cur.skip_ws();
    cur.expect('(').map_err(err)?;

    let mut args = Vec::new();
    cur.skip_ws();
    if cur.peek() != Some(')') {
        loop {
            cur.skip_ws();
            args.push(cur.quoted().map_err(err)?);
            cur.skip_ws();
            match cur.next() {
                Some(',') => continue,
                Some(')') => break,
                other => return Err(err(format!("expected ',' or ')' in arguments, found {other:?}"))),
            }
        }
    } else {
        cur.next();
    }

    cur.skip_ws();
    let mut deps = Vec::new();
    if !cur.is_empty() {
        cur.expect('<').map_err(err)?;
        cur.expect('-').map_err(err)?;
        cur.skip_ws();
        cur.expect('[').map_err(err)?;
        loop {
            cur.skip_ws();
            if cur.peek() == Some(']') && deps.is_empty() {
                cur.next();
                break;
            }
            let d = cur.take_while(|c| c.is_ascii_digit());
            deps.push(d.parse::<usize>().map_err(|_| err("expected a dependency index".into()))?);
            cur.skip_ws();
            match cur.next() {
                Some(',') => continue,
                Some(']') => break,
                other => return Err(err(format!("expected ',' or ']' in deps, found {other:?}"))),
            }
        }
        cur.skip_ws();
        if !cur.is_empty() {
            return Err(err(format!("trailing input {:?}", cur.rest())));
        }
    }

    let step = Step { index, function, args, deps };
    step.validate(lineno)?;
    Ok(step)
}

struct Cursor<'a> {
    rest: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(s: &'a str) -> Self {
        Self { rest: s }
    }

    fn peek(&self) -> Option<char> {
        self.rest.chars().next()
    }

    fn next(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.rest = &self.rest[c.len_utf8()..];
        Some(c)
    }

    fn is_empty(&self) -> bool {
        self.rest.is_empty()
    }

    fn rest(&self) -> &'a str {
        self.rest
    }

    fn skip_ws(&mut self) {
        self.rest = self.rest.trim_start();
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let end = self.rest.find(|c: char| !pred(c)).unwrap_or(self.rest.len());
        let (head, tail) = self.rest.split_at(end);
        self.rest = tail;
        head
    }

    fn expect(&mut self, want: char) -> Result<(), String> {
        match self.next() {
            Some(c) if c == want => Ok(()),
            other => Err(format!("expected {want:?}, found {other:?}")),
        }
    }

    fn quoted(&mut self) -> Result<String, String> {
        self.expect('"')?;
        let mut out = String::new();
        loop {
            match self.next() {
                None => return Err("unterminated string argument".into()),
                Some('"') => return Ok(out),
                Some('\\') => match self.next() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some('n') => out.push('\n'),
                    other => return Err(format!("bad escape {other:?}")),
                },
                Some(c) => out.push(c),
            }
        }
    }
}
