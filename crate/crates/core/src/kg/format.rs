//! Line-delimited KG file format and snapshots.
//!
//! Each line is one record: `{"type":"entity",...}` or `{"type":"edge",...}`.
//! Snapshots prepend a `{"type":"snapshot",...}` header carrying record counts
//! so truncation is detectable on restore.

use std::io::{BufRead, BufReader, Read};

use serde::{Deserialize, Serialize};

use super::{Entity, KgError, KnowledgeGraph, RelationEdge};

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Snapshot(SnapshotHeader),
    Entity(Entity),
    Edge(RelationEdge),
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotHeader {
    version: u32,
    entities: usize,
    edges: usize,
    next_generated: u64,
}

fn malformed(line: usize, reason: impl Into<String>) -> KgError {
    KgError::MalformedKg { line, reason: reason.into() }
}

fn parse_records(source: impl Read) -> Result<(Option<SnapshotHeader>, KnowledgeGraph), KgError> {
    let reader = BufReader::new(source);
    let mut header = None;
    let mut entities: Vec<(usize, Entity)> = Vec::new();
    let mut edges: Vec<(usize, RelationEdge)> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| malformed(lineno, format!("unreadable line: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| malformed(lineno, e.to_string()))?;
        match record {
            Record::Snapshot(h) => {
                if lineno != 1 || header.is_some() {
                    return Err(malformed(lineno, "snapshot header must be the first line"));
                }
                if h.version != SNAPSHOT_VERSION {
                    return Err(malformed(lineno, format!("unsupported snapshot version {}", h.version)));
                }
                header = Some(h);
            }
            Record::Entity(e) => entities.push((lineno, e)),
            Record::Edge(e) => edges.push((lineno, e)),
        }
    }

    let mut kg = KnowledgeGraph::new();
    for (lineno, entity) in entities {
        kg.insert_entity(entity).map_err(|e| match e {
            KgError::MalformedKg { reason, .. } => malformed(lineno, reason),
            other => other,
        })?;
    }
    for (lineno, edge) in edges {
        let text = format!("{} -{}-> {}", edge.subject, edge.predicate, edge.object);
        match kg.insert_edge(edge) {
            Ok(true) => {}
            Ok(false) => return Err(malformed(lineno, format!("duplicate edge {text}"))),
            Err(KgError::MalformedKg { reason, .. }) => return Err(malformed(lineno, reason)),
            Err(other) => return Err(other),
        }
    }
    // Keep generated ids collision-free against ids already in the file.
    let max_gen = kg
        .entities()
        .filter_map(|e| e.id.strip_prefix("gen:").and_then(|n| n.parse::<u64>().ok()))
        .max();
    kg.set_next_generated(max_gen.map_or(0, |n| n + 1));
    Ok((header, kg))
}

/// Reads a KG file. A snapshot header, if present, is validated; it is not required.
pub fn load_kg(source: impl Read) -> Result<KnowledgeGraph, KgError> {
    let (header, kg) = parse_records(source)?;
    if let Some(h) = header {
        check_header(&h, &kg)?;
        let next = kg.next_generated().max(h.next_generated);
        let mut kg = kg;
        kg.set_next_generated(next);
        return Ok(kg);
    }
    Ok(kg)
}

pub fn load_kg_str(text: &str) -> Result<KnowledgeGraph, KgError> {
    load_kg(text.as_bytes())
}

fn check_header(h: &SnapshotHeader, kg: &KnowledgeGraph) -> Result<(), KgError> {
    if h.entities != kg.entity_count() || h.edges != kg.edge_count() {
        return Err(malformed(
            1,
            format!(
                "snapshot declares {} entities / {} edges but contains {} / {}",
                h.entities,
                h.edges,
                kg.entity_count(),
                kg.edge_count()
            ),
        ));
    }
    Ok(())
}

/// Serializes the graph as a headed KG file. Output is deterministic.
pub fn snapshot(kg: &KnowledgeGraph) -> Vec<u8> {
    let mut out = Vec::new();
    let header = Record::Snapshot(SnapshotHeader {
        version: SNAPSHOT_VERSION,
        entities: kg.entity_count(),
        edges: kg.edge_count(),
        next_generated: kg.next_generated(),
    });
    let mut push = |r: &Record| {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    };
    push(&header);
    for e in kg.entities() {
        push(&Record::Entity(e.clone()));
    }
    for e in kg.edges() {
        push(&Record::Edge(e.clone()));
    }
    out
}

/// Inverse of [`snapshot`]; the header is mandatory.
pub fn restore(bytes: &[u8]) -> Result<KnowledgeGraph, KgError> {
    let (header, kg) = parse_records(bytes)?;
    let Some(h) = header else {
        return Err(malformed(1, "missing snapshot header"));
    };
    check_header(&h, &kg)?;
    let mut kg = kg;
    let next = kg.next_generated().max(h.next_generated);
    kg.set_next_generated(next);
    Ok(kg)
}
