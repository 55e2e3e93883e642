//! Subject/predicate/object facts with optionally unknown slots.
//!
//! The wire form is `(s; p; o)` with `?` standing in for an unknown slot.
//! Semicolons are used as separators because labels frequently contain commas.

use std::fmt;

use serde::de::{self, SeqAccess, Visitor};
use serde::ser::SerializeTuple;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::KgError;

pub const UNKNOWN_MARK: &str = "?";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Known(String),
    Unknown,
}

impl Slot {
    /// Builds a slot from raw text: `?` becomes `Unknown`, everything else is
    /// trimmed and must be non-empty.
    pub fn parse(text: &str) -> Result<Self, KgError> {
        let trimmed = text.trim();
        if trimmed == UNKNOWN_MARK {
            return Ok(Slot::Unknown);
        }
        if trimmed.is_empty() {
            return Err(KgError::InvalidTriple("empty slot".into()));
        }
        Ok(Slot::Known(trimmed.to_string()))
    }

    pub fn known(&self) -> Option<&str> {
        match self {
            Slot::Known(s) => Some(s),
            Slot::Unknown => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Slot::Unknown)
    }

    /// Unknown matches anything; a known slot matches only identical text.
    pub fn unifies_with(&self, value: &str) -> bool {
        match self {
            Slot::Known(s) => s == value,
            Slot::Unknown => true,
        }
    }

    fn as_text(&self) -> &str {
        self.known().unwrap_or(UNKNOWN_MARK)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    subject: Slot,
    predicate: Slot,
    object: Slot,
}

impl Triple {
    pub fn new(subject: Slot, predicate: Slot, object: Slot) -> Result<Self, KgError> {
        for slot in [&subject, &predicate, &object] {
            if let Slot::Known(s) = slot {
                if s.is_empty() || s.trim() != s || s == UNKNOWN_MARK {
                    return Err(KgError::InvalidTriple(format!("slot {s:?} is not a trimmed label")));
                }
            }
        }
        if subject.is_unknown() && predicate.is_unknown() && object.is_unknown() {
            return Err(KgError::InvalidTriple("all three slots are unknown".into()));
        }
        Ok(Self { subject, predicate, object })
    }

    /// Parses each slot with [`Slot::parse`].
    pub fn from_parts(subject: &str, predicate: &str, object: &str) -> Result<Self, KgError> {
        Self::new(Slot::parse(subject)?, Slot::parse(predicate)?, Slot::parse(object)?)
    }

    /// Fully known triple from three labels.
    pub fn known(subject: &str, predicate: &str, object: &str) -> Result<Self, KgError> {
        let t = Self::from_parts(subject, predicate, object)?;
        if !t.is_complete() {
            return Err(KgError::IncompleteTriple(t.to_string()));
        }
        Ok(t)
    }

    /// Parses the canonical `(s; p; o)` text form.
    pub fn parse(text: &str) -> Result<Self, KgError> {
        let inner = text
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| KgError::InvalidTriple(format!("not a parenthesised triple: {text:?}")))?;
        let parts: Vec<&str> = inner.split(';').collect();
        if parts.len() != 3 {
            return Err(KgError::InvalidTriple(format!(
                "expected 3 `;`-separated slots, found {}",
                parts.len()
            )));
        }
        Self::from_parts(parts[0], parts[1], parts[2])
    }

    pub fn subject(&self) -> &Slot {
        &self.subject
    }

    pub fn predicate(&self) -> &Slot {
        &self.predicate
    }

    pub fn object(&self) -> &Slot {
        &self.object
    }

    pub fn slots(&self) -> [&Slot; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn unknown_count(&self) -> usize {
        self.slots().iter().filter(|s| s.is_unknown()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.unknown_count() == 0
    }

    pub fn unifies(&self, subject: &str, predicate: &str, object: &str) -> bool {
        self.subject.unifies_with(subject)
            && self.predicate.unifies_with(predicate)
            && self.object.unifies_with(object)
    }

    /// True when every known slot of `self` carries the same text in `other`.
    pub fn known_slots_agree(&self, other: &Triple) -> bool {
        self.slots()
            .iter()
            .zip(other.slots())
            .all(|(mine, theirs)| match mine {
                Slot::Known(s) => theirs.known() == Some(s.as_str()),
                Slot::Unknown => true,
            })
    }

    /// Known slot texts in subject, predicate, object order.
    pub fn known_texts(&self) -> impl Iterator<Item = &str> {
        self.slots().into_iter().filter_map(Slot::known)
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}; {}; {})",
            self.subject.as_text(),
            self.predicate.as_text(),
            self.object.as_text()
        )
    }
}

// Triples travel over the wire as `["s", "p", "o"]` with "?" for unknown slots.
impl Serialize for Triple {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut tup = serializer.serialize_tuple(3)?;
        for slot in self.slots() {
            tup.serialize_element(slot.as_text())?;
        }
        tup.end()
    }
}

impl<'de> Deserialize<'de> for Triple {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct TripleVisitor;

        impl<'de> Visitor<'de> for TripleVisitor {
            type Value = Triple;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a [subject, predicate, object] array or a \"(s; p; o)\" string")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Triple, E> {
                Triple::parse(v).map_err(E::custom)
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Triple, A::Error> {
                let mut parts: Vec<String> = Vec::with_capacity(3);
                while let Some(p) = seq.next_element::<String>()? {
                    parts.push(p);
                }
                if parts.len() != 3 {
                    return Err(de::Error::invalid_length(parts.len(), &self));
                }
                Triple::from_parts(&parts[0], &parts[1], &parts[2]).map_err(de::Error::custom)
            }
        }

        deserializer.deserialize_any(TripleVisitor)
    }
}
