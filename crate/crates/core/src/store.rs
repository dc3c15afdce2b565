//! In-memory triple store with subject and object indices.
//!
//! Triples are read from tab-separated text: `subject \t property \t object`,
//! where an object prefixed with `L:` is a literal (the prefix is stripped).
//! Labels come from an optional second file of `id \t label` rows. Lines
//! starting with `#` are comments. Rows keep their file order, and every
//! lookup returns rows in that order.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    parse_entity_ref, parse_property_ref, Direction, EntityRef, IdError, NodeValue, PropertyRef,
    SchemaDialect, Triple,
};

pub const LITERAL_PREFIX: &str = "L:";

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{source_name} line {line}: {reason}")]
    MalformedRow {
        source_name: &'static str,
        line: usize,
        reason: String,
    },
    #[error("{source_name} line {line}: {err}")]
    BadId {
        source_name: &'static str,
        line: usize,
        err: IdError,
    },
    #[error("reading {path}: {err}")]
    Io { path: String, err: io::Error },
}

#[cfg(test)]
type IndexEntries = Vec<(String, usize)>;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum StoredObject {
    Entity(String),
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct StoredTriple {
    subject: String,
    predicate: String,
    object: StoredObject,
}

/// One neighbour of a queried entity: the connecting property and the node at
/// the other end.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NeighborRow {
    pub property: PropertyRef,
    pub value: NodeValue,
}

#[derive(Debug, Clone)]
pub struct Store {
    dialect: SchemaDialect,
    triples: Vec<StoredTriple>,
    by_subject: HashMap<String, Vec<usize>>,
    by_object: HashMap<String, Vec<usize>>,
    labels: HashMap<String, String>,
}

impl Store {
    /// Builds a store from triple rows and optional label rows.
    pub fn load<T: BufRead, L: BufRead>(
        dialect: SchemaDialect,
        triples: T,
        labels: Option<L>,
    ) -> Result<Store, LoadError> {
        let mut store = Store {
            dialect,
            triples: Vec::new(),
            by_subject: HashMap::new(),
            by_object: HashMap::new(),
            labels: HashMap::new(),
        };

        for (idx, line) in triples.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|err| LoadError::Io {
                path: "triples".into(),
                err,
            })?;
            if skip_line(&line) {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(LoadError::MalformedRow {
                    source_name: "triples",
                    line: line_no,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let bad_id = |err| LoadError::BadId {
                source_name: "triples",
                line: line_no,
                err,
            };
            let subject = parse_entity_ref(fields[0], dialect).map_err(bad_id)?.id;
            let predicate = parse_property_ref(fields[1], dialect).map_err(bad_id)?.id;
            let object = match fields[2].strip_prefix(LITERAL_PREFIX) {
                Some(text) => StoredObject::Literal(text.to_string()),
                None => {
                    StoredObject::Entity(parse_entity_ref(fields[2], dialect).map_err(bad_id)?.id)
                }
            };
            store.push(StoredTriple {
                subject,
                predicate,
                object,
            });
        }

        if let Some(labels) = labels {
            for (idx, line) in labels.lines().enumerate() {
                let line = line.map_err(|err| LoadError::Io {
                    path: "labels".into(),
                    err,
                })?;
                if skip_line(&line) {
                    continue;
                }
                match line.split_once('\t') {
                    Some((id, label)) if !id.is_empty() && !label.contains('\t') => {
                        store.labels.insert(id.to_string(), label.to_string());
                    }
                    _ => {
                        return Err(LoadError::MalformedRow {
                            source_name: "labels",
                            line: idx + 1,
                            reason: "expected 2 tab-separated fields".into(),
                        })
                    }
                }
            }
        }
        Ok(store)
    }

    pub fn load_files(
        dialect: SchemaDialect,
        triples: &Path,
        labels: Option<&Path>,
    ) -> Result<Store, LoadError> {
        let open = |p: &Path| {
            File::open(p)
                .map(BufReader::new)
                .map_err(|err| LoadError::Io {
                    path: p.display().to_string(),
                    err,
                })
        };
        let t = open(triples)?;
        let l = labels.map(open).transpose()?;
        Store::load(dialect, t, l)
    }

    /// Builds a store directly from triples. Labels carried by the triples'
    /// components are registered as well.
    pub fn from_triples(
        dialect: SchemaDialect,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Store {
        let mut store = Store {
            dialect,
            triples: Vec::new(),
            by_subject: HashMap::new(),
            by_object: HashMap::new(),
            labels: HashMap::new(),
        };
        for t in triples {
            let mut register = |id: &str, label: &Option<String>| {
                if let Some(l) = label {
                    store.labels.insert(id.to_string(), l.clone());
                }
            };
            register(&t.subject.id, &t.subject.label);
            register(&t.predicate.id, &t.predicate.label);
            let object = match t.object {
                NodeValue::Entity(e) => {
                    register(&e.id, &e.label);
                    StoredObject::Entity(e.id)
                }
                NodeValue::Literal { text, .. } => StoredObject::Literal(text),
            };
            store.push(StoredTriple {
                subject: t.subject.id,
                predicate: t.predicate.id,
                object,
            });
        }
        store
    }

    fn push(&mut self, t: StoredTriple) {
        let pos = self.triples.len();
        self.by_subject
            .entry(t.subject.clone())
            .or_default()
            .push(pos);
        if let StoredObject::Entity(o) = &t.object {
            self.by_object.entry(o.clone()).or_default().push(pos);
        }
        self.triples.push(t);
    }

    pub fn dialect(&self) -> SchemaDialect {
        self.dialect
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn label(&self, id: &str) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }

    pub fn entity(&self, id: &str) -> EntityRef {
        EntityRef {
            id: id.to_string(),
            label: self.labels.get(id).cloned(),
        }
    }

    pub fn property(&self, id: &str) -> PropertyRef {
        PropertyRef {
            id: id.to_string(),
            label: self.labels.get(id).cloned(),
        }
    }

    /// All triples in insertion order, with labels attached.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.triples.iter().map(|t| Triple {
            subject: self.entity(&t.subject),
            predicate: self.property(&t.predicate),
            object: self.node(&t.object),
        })
    }

    /// Ids of every entity that occurs as a subject or entity object, in first
    /// occurrence order.
    pub fn entity_ids(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for t in &self.triples {
            for id in std::iter::once(t.subject.as_str()).chain(match &t.object {
                StoredObject::Entity(o) => Some(o.as_str()),
                StoredObject::Literal(_) => None,
            }) {
                if seen.insert(id) {
                    out.push(id);
                }
            }
        }
        out
    }

    fn node(&self, object: &StoredObject) -> NodeValue {
        match object {
            StoredObject::Entity(id) => NodeValue::Entity(self.entity(id)),
            StoredObject::Literal(text) => NodeValue::literal(text.clone()),
        }
    }

    /// Positions of triples touching `entity` in `direction`, insertion order.
    fn positions(&self, entity: &str, direction: Direction) -> &[usize] {
        let index = match direction {
            Direction::Outgoing => &self.by_subject,
            Direction::Incoming => &self.by_object,
        };
        index.get(entity).map(Vec::as_slice).unwrap_or(&[])
    }

    /// 1-hop neighbourhood of `entity`. Unknown entities yield no rows.
    ///
    /// For outgoing rows the value is the triple object; for incoming rows it
    /// is the subject. Literal objects are never reachable as incoming rows.
    pub fn adjacent(
        &self,
        entity: &EntityRef,
        direction: Direction,
        filter: Option<&[PropertyRef]>,
    ) -> Vec<NeighborRow> {
        let allowed: Option<HashSet<&str>> =
            filter.map(|f| f.iter().map(|p| p.id.as_str()).collect());
        self.positions(&entity.id, direction)
            .iter()
            .map(|&pos| &self.triples[pos])
            .filter(|t| {
                allowed
                    .as_ref()
                    .is_none_or(|a| a.contains(t.predicate.as_str()))
            })
            .map(|t| NeighborRow {
                property: self.property(&t.predicate),
                value: match direction {
                    Direction::Outgoing => self.node(&t.object),
                    Direction::Incoming => NodeValue::Entity(self.entity(&t.subject)),
                },
            })
            .collect()
    }

    /// Whether `goal` is within `max_hops` edges of `start`, ignoring edge
    /// direction.
    pub fn reachable_within(&self, start: &EntityRef, goal: &EntityRef, max_hops: usize) -> bool {
        if start.id == goal.id {
            return true;
        }
        let mut seen: HashSet<&str> = HashSet::from([start.id.as_str()]);
        let mut frontier = VecDeque::from([(start.id.as_str(), 0usize)]);
        while let Some((node, depth)) = frontier.pop_front() {
            if depth == max_hops {
                continue;
            }
            let out = self
                .positions(node, Direction::Outgoing)
                .iter()
                .filter_map(|&p| match &self.triples[p].object {
                    StoredObject::Entity(o) => Some(o.as_str()),
                    StoredObject::Literal(_) => None,
                });
            let inc = self
                .positions(node, Direction::Incoming)
                .iter()
                .map(|&p| self.triples[p].subject.as_str());
            for next in out.chain(inc) {
                if next == goal.id {
                    return true;
                }
                if seen.insert(next) {
                    frontier.push_back((next, depth + 1));
                }
            }
        }
        false
    }

    /// (subject, position) and (object, position) pairs, sorted.
    #[cfg(test)]
    fn index_entries(&self) -> (IndexEntries, IndexEntries) {
        let flatten = |m: &HashMap<String, Vec<usize>>| {
            let mut v: Vec<(String, usize)> = m
                .iter()
                .flat_map(|(k, ps)| ps.iter().map(move |&p| (k.clone(), p)))
                .collect();
            v.sort();
            v
        };
        (flatten(&self.by_subject), flatten(&self.by_object))
    }
}

fn skip_line(line: &str) -> bool {
    line.trim().is_empty() || line.starts_with('#')
}
