//! Random graphs and a brute-force neighbourhood scan shared by the
//! integration tests.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use kgnav::search::SearchResult;
use kgnav::store::NeighborRow;
use kgnav::types::Triple;
use kgnav::{Direction, EntityRef, NodeValue, PropertyRef, SchemaDialect};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub struct RandomGraph {
    pub dialect: SchemaDialect,
    pub triples: Vec<Triple>,
    pub entities: Vec<String>,
    pub properties: Vec<String>,
}

fn random_label(rng: &mut impl Rng) -> Option<String> {
    const PARTS: [&str; 10] = [
        "Zundert",
        "river",
        "A|B",
        "van",
        "Gogh",
        "l'été",
        "x",
        "New\nline",
        "  pad ",
        "42",
    ];
    if rng.random_bool(0.2) {
        return None;
    }
    let n = rng.random_range(1..4);
    Some(
        (0..n)
            .map(|_| *PARTS.choose(rng).unwrap())
            .collect::<Vec<_>>()
            .join(" "),
    )
}

/// At most 1000 distinct triples over at most 50 entities and 20 properties.
pub fn random_graph(rng: &mut impl Rng) -> RandomGraph {
    let dialect = if rng.random_bool(0.5) {
        SchemaDialect::Freebase
    } else {
        SchemaDialect::Wikidata
    };
    let n_entities = rng.random_range(1..=50);
    let n_properties = rng.random_range(1..=20);
    let entities: Vec<String> = (0..n_entities)
        .map(|i| match dialect {
            SchemaDialect::Freebase => format!("m.0e{i}"),
            SchemaDialect::Wikidata => format!("wd:Q{}", 100 + i),
        })
        .collect();
    let properties: Vec<String> = (0..n_properties)
        .map(|j| match dialect {
            SchemaDialect::Freebase => format!("test.relation.p{j}"),
            SchemaDialect::Wikidata => format!("wdt:P{}", 10 + j),
        })
        .collect();
    let entity_labels: Vec<Option<String>> = entities.iter().map(|_| random_label(rng)).collect();
    let property_labels: Vec<Option<String>> =
        properties.iter().map(|_| random_label(rng)).collect();

    let target = rng.random_range(0..=1000);
    let mut seen = HashSet::new();
    let mut triples = Vec::new();
    for _ in 0..target * 2 {
        if triples.len() >= target {
            break;
        }
        let s = rng.random_range(0..n_entities);
        let p = rng.random_range(0..n_properties);
        let literal = rng.random_bool(0.2);
        let o = if literal {
            format!("lit {}", rng.random_range(0..30))
        } else {
            rng.random_range(0..n_entities).to_string()
        };
        if !seen.insert((s, p, o.clone(), literal)) {
            continue;
        }
        let object = if literal {
            NodeValue::literal(o)
        } else {
            let i: usize = o.parse().unwrap();
            NodeValue::Entity(EntityRef {
                id: entities[i].clone(),
                label: entity_labels[i].clone(),
            })
        };
        triples.push(Triple {
            subject: EntityRef {
                id: entities[s].clone(),
                label: entity_labels[s].clone(),
            },
            predicate: PropertyRef {
                id: properties[p].clone(),
                label: property_labels[p].clone(),
            },
            object,
        });
    }
    RandomGraph {
        dialect,
        triples,
        entities,
        properties,
    }
}

/// A random non-empty filter, sometimes naming properties absent from the graph.
pub fn random_filter(rng: &mut impl Rng, g: &RandomGraph) -> Vec<PropertyRef> {
    let mut pool = g.properties.clone();
    pool.push(match g.dialect {
        SchemaDialect::Freebase => "test.relation.absent".into(),
        SchemaDialect::Wikidata => "wdt:P9999".into(),
    });
    pool.shuffle(rng);
    let n = rng.random_range(1..=3.min(pool.len()));
    pool[..n]
        .iter()
        .map(|id| PropertyRef {
            id: id.clone(),
            label: None,
        })
        .collect()
}

/// Linear scan over the triple list.
pub fn brute_force(
    triples: &[Triple],
    entity: &str,
    direction: Direction,
    filter: Option<&[PropertyRef]>,
) -> Vec<NeighborRow> {
    let mut out = Vec::new();
    for t in triples {
        if let Some(f) = filter {
            if !f.iter().any(|p| p.id == t.predicate.id) {
                continue;
            }
        }
        let value = match direction {
            Direction::Outgoing if t.subject.id == entity => t.object.clone(),
            Direction::Incoming => match &t.object {
                NodeValue::Entity(e) if e.id == entity => NodeValue::Entity(t.subject.clone()),
                _ => continue,
            },
            _ => continue,
        };
        out.push(NeighborRow {
            property: t.predicate.clone(),
            value,
        });
    }
    out
}

/// The thresholds applied by hand to a full neighbourhood.
pub fn expected(rows: Vec<NeighborRow>, filtered: bool, k: usize, p: usize) -> SearchResult {
    if rows.len() > k && !filtered {
        let mut props: Vec<PropertyRef> = Vec::new();
        for r in rows {
            if !props.iter().any(|q| q.id == r.property.id) {
                props.push(r.property);
            }
        }
        let truncated = props.len() > p;
        props.truncate(p);
        SearchResult::PropertyTable {
            properties: props,
            truncated,
        }
    } else {
        let truncated = rows.len() > p;
        SearchResult::RowTable {
            rows: rows.into_iter().take(p).collect(),
            truncated,
        }
    }
}
