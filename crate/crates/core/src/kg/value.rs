use std::fmt;

use serde::{Deserialize, Serialize};

/// Attribute value attached to an entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TypedValue {
    Text { value: String },
    Quantity { value: f64, unit: String },
    Year { value: i64 },
}

impl TypedValue {
    pub fn text(value: impl Into<String>) -> Self {
        TypedValue::Text { value: value.into() }
    }

    pub fn quantity(value: f64, unit: impl Into<String>) -> Self {
        TypedValue::Quantity { value, unit: unit.into() }
    }

    pub fn year(value: i64) -> Self {
        TypedValue::Year { value }
    }

    /// Interprets the object text of a triple for attribute `predicate`.
    ///
    /// A plain decimal number becomes a dimensionless quantity, a standalone
    /// year in `1000..=2999` becomes a `Year` when the predicate names a date or
    /// year, and anything else is text. Numbers are only recognised in their
    /// canonical rendering (`"2161000"`, `"1.5"`) so the stored value renders
    /// back to exactly the text it was parsed from.
    pub fn parse_for(predicate: &str, text: &str) -> Self {
        let text = text.trim();
        let pred = predicate.to_ascii_lowercase();
        if pred.ends_with("date") || pred.ends_with("year") {
            if let Some(year) = parse_year(text) {
                return TypedValue::year(year);
            }
        }
        if is_decimal(text) {
            if let Ok(n) = text.parse::<f64>() {
                if n.is_finite() && format_number(n) == text {
                    return TypedValue::quantity(n, "");
                }
            }
        }
        TypedValue::text(text)
    }

    /// Canonical rendering used by answers, matching and `FilterAttrEq`.
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    pub(crate) fn is_well_formed(&self) -> bool {
        match self {
            TypedValue::Quantity { value, .. } => value.is_finite(),
            _ => true,
        }
    }
}

impl fmt::Display for TypedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypedValue::Text { value } => f.write_str(value),
            TypedValue::Quantity { value, unit } if unit.is_empty() => {
                f.write_str(&format_number(*value))
            }
            TypedValue::Quantity { value, unit } => write!(f, "{} {}", format_number(*value), unit),
            TypedValue::Year { value } => write!(f, "{value}"),
        }
    }
}

pub(crate) fn format_number(n: f64) -> String {
    // `Display` for f64 is the shortest round-tripping form and never uses
    // exponent notation.
    let s = format!("{n}");
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn parse_year(text: &str) -> Option<i64> {
    if text.len() == 4 && text.bytes().all(|b| b.is_ascii_digit()) {
        let y: i64 = text.parse().ok()?;
        if (1000..=2999).contains(&y) {
            return Some(y);
        }
    }
    None
}

fn is_decimal(text: &str) -> bool {
    let body = text.strip_prefix(['+', '-']).unwrap_or(text);
    let mut parts = body.splitn(2, '.');
    let int = parts.next().unwrap_or("");
    let frac = parts.next();
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => digits(int),
        Some(f) => digits(int) && digits(f),
    }
}
