//! In-memory knowledge graph: entities with concepts and typed attributes,
//! plus labeled relation edges between entities.

mod format;
mod triple;
mod value;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{load_kg, load_kg_str, restore, snapshot};
pub use triple::{Slot, Triple, UNKNOWN_MARK};
pub use value::TypedValue;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KgError {
    #[error("MalformedKg at line {line}: {reason}")]
    MalformedKg { line: usize, reason: String },
    #[error("DuplicateEntityId: {0}")]
    DuplicateEntityId(String),
    #[error("IncompleteTriple: {0} has unknown slots")]
    IncompleteTriple(String),
    #[error("InvalidTriple: {0}")]
    InvalidTriple(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub id: String,
    pub label: String,
    #[serde(default)]
    pub concepts: BTreeSet<String>,
    #[serde(default)]
    pub attributes: BTreeMap<String, Vec<TypedValue>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationEdge {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddOutcome {
    AddedEdge,
    AddedAttribute,
    AlreadyPresent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgStats {
    pub entities: usize,
    pub edges: usize,
    pub attributes: usize,
}

/// Entities keyed by id, relation edges, and a label index that always mirrors
/// entity labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeGraph {
    entities: BTreeMap<String, Entity>,
    edges: BTreeSet<RelationEdge>,
    label_index: BTreeMap<String, BTreeSet<String>>,
    next_generated: u64,
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a fully formed entity. Labels are trimmed; concepts must be non-empty.
    pub fn insert_entity(&mut self, mut entity: Entity) -> Result<(), KgError> {
        entity.label = entity.label.trim().to_string();
        if entity.label.is_empty() {
            return Err(KgError::MalformedKg { line: 0, reason: format!("entity {} has an empty label", entity.id) });
        }
        if entity.id.is_empty() {
            return Err(KgError::MalformedKg { line: 0, reason: "entity id is empty".into() });
        }
        if entity.concepts.iter().any(|c| c.is_empty()) {
            return Err(KgError::MalformedKg { line: 0, reason: format!("entity {} has an empty concept", entity.id) });
        }
        if entity.attributes.values().flatten().any(|v| !v.is_well_formed()) {
            return Err(KgError::MalformedKg { line: 0, reason: format!("entity {} has a non-finite quantity", entity.id) });
        }
        if self.entities.contains_key(&entity.id) {
            return Err(KgError::DuplicateEntityId(entity.id));
        }
        self.label_index
            .entry(entity.label.clone())
            .or_default()
            .insert(entity.id.clone());
        self.entities.insert(entity.id.clone(), entity);
        Ok(())
    }

    /// Inserts an edge between existing entities. Returns false if it was already present.
    pub fn insert_edge(&mut self, edge: RelationEdge) -> Result<bool, KgError> {
        for end in [&edge.subject, &edge.object] {
            if !self.entities.contains_key(end) {
                return Err(KgError::MalformedKg { line: 0, reason: format!("edge references unknown entity {end:?}") });
            }
        }
        if edge.predicate.trim().is_empty() {
            return Err(KgError::MalformedKg { line: 0, reason: "edge predicate is empty".into() });
        }
        Ok(self.edges.insert(edge))
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &RelationEdge> {
        self.edges.iter()
    }

    /// Ids of entities carrying exactly this label (after trimming).
    pub fn ids_for_label(&self, label: &str) -> impl Iterator<Item = &String> {
        self.label_index.get(label.trim()).into_iter().flatten()
    }

    pub fn label_index(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.label_index
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn stats(&self) -> KgStats {
        KgStats {
            entities: self.entities.len(),
            edges: self.edges.len(),
            attributes: self.entities.values().map(|e| e.attributes.values().map(Vec::len).sum::<usize>()).sum(),
        }
    }

    pub(crate) fn next_generated(&self) -> u64 {
        self.next_generated
    }

    pub(crate) fn set_next_generated(&mut self, n: u64) {
        self.next_generated = n;
    }

    /// Recomputes the label index from entity labels.
    pub fn rebuild_label_index(&self) -> BTreeMap<String, BTreeSet<String>> {
        let mut index: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for e in self.entities.values() {
            index.entry(e.label.clone()).or_default().insert(e.id.clone());
        }
        index
    }

    fn label_of(&self, id: &str) -> &str {
        self.entities.get(id).map(|e| e.label.as_str()).unwrap_or("")
    }

    fn resolve_or_create(&mut self, label: &str) -> String {
        if let Some(id) = self.ids_for_label(label).next() {
            return id.clone();
        }
        loop {
            let id = format!("gen:{}", self.next_generated);
            self.next_generated += 1;
            if !self.entities.contains_key(&id) {
                let entity = Entity {
                    id: id.clone(),
                    label: label.to_string(),
                    concepts: BTreeSet::new(),
                    attributes: BTreeMap::new(),
                };
                self.label_index.entry(entity.label.clone()).or_default().insert(id.clone());
                self.entities.insert(id.clone(), entity);
                return id;
            }
        }
    }

    /// Incorporates a fully known triple. An object naming an existing entity
    /// becomes a relation edge; otherwise it is stored as an attribute value on
    /// the subject. Unknown subjects are created on the fly.
    pub fn add_triple(&mut self, triple: &Triple) -> Result<AddOutcome, KgError> {
        let (Some(subject), Some(predicate), Some(object)) =
            (triple.subject().known(), triple.predicate().known(), triple.object().known())
        else {
            return Err(KgError::IncompleteTriple(triple.to_string()));
        };
        // The subject is resolved first so a self-referencing triple gives the
        // same outcome on every call.
        let subject_id = self.resolve_or_create(subject);
        let object_id = self.ids_for_label(object).next().cloned();
        match object_id {
            Some(object_id) => {
                let edge = RelationEdge { subject: subject_id, predicate: predicate.to_string(), object: object_id };
                if self.edges.insert(edge) {
                    Ok(AddOutcome::AddedEdge)
                } else {
                    Ok(AddOutcome::AlreadyPresent)
                }
            }
            None => {
                let value = TypedValue::parse_for(predicate, object);
                let entity = self.entities.get_mut(&subject_id).expect("subject resolved above");
                let values = entity.attributes.entry(predicate.to_string()).or_default();
                if values.iter().any(|v| v.canonical() == value.canonical()) {
                    Ok(AddOutcome::AlreadyPresent)
                } else {
                    values.push(value);
                    Ok(AddOutcome::AddedAttribute)
                }
            }
        }
    }

    /// Removes every edge and attribute value unifying with `pattern`.
    /// Entities are retained.
    pub fn remove_matching(&mut self, pattern: &Triple) -> usize {
        let before = self.edges.len();
        let doomed: Vec<RelationEdge> = self
            .edges
            .iter()
            .filter(|e| pattern.unifies(self.label_of(&e.subject), &e.predicate, self.label_of(&e.object)))
            .cloned()
            .collect();
        for e in &doomed {
            self.edges.remove(e);
        }
        let mut removed = before - self.edges.len();

        for entity in self.entities.values_mut() {
            if !pattern.subject().unifies_with(&entity.label) {
                continue;
            }
            entity.attributes.retain(|key, values| {
                if pattern.predicate().unifies_with(key) {
                    let n = values.len();
                    values.retain(|v| !pattern.object().unifies_with(&v.canonical()));
                    removed += n - values.len();
                }
                !values.is_empty()
            });
        }
        removed
    }

    /// All facts unifying with `pattern`, as fully known triples ordered by
    /// (subject label, predicate, object text).
    pub fn match_triples(&self, pattern: &Triple) -> Vec<Triple> {
        let mut found: BTreeSet<(String, String, String)> = BTreeSet::new();
        let subject_ids: Vec<&String> = match pattern.subject().known() {
            Some(label) => self.ids_for_label(label).collect(),
            None => self.entities.keys().collect(),
        };
        let subject_set: BTreeSet<&String> = subject_ids.iter().copied().collect();

        for edge in &self.edges {
            if !subject_set.contains(&edge.subject) {
                continue;
            }
            let s = self.label_of(&edge.subject);
            let o = self.label_of(&edge.object);
            if pattern.unifies(s, &edge.predicate, o) {
                found.insert((s.to_string(), edge.predicate.clone(), o.to_string()));
            }
        }
        for id in subject_ids {
            let entity = &self.entities[id];
            for (key, values) in &entity.attributes {
                if !pattern.predicate().unifies_with(key) {
                    continue;
                }
                for v in values {
                    let text = v.canonical();
                    if pattern.object().unifies_with(&text) {
                        found.insert((entity.label.clone(), key.clone(), text));
                    }
                }
            }
        }
        found
            .into_iter()
            .filter_map(|(s, p, o)| Triple::known(&s, &p, &o).ok())
            .collect()
    }
}
