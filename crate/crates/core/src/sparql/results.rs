//! Reader for the SPARQL 1.1 query results JSON format.

use serde_json::{Map, Value};

use crate::sparql::{QueryMode, SparqlError, FREEBASE_NS, WIKIDATA_DIRECT_NS, WIKIDATA_ENTITY_NS};
use crate::store::NeighborRow;
use crate::types::{EntityRef, NodeValue, PropertyRef, SchemaDialect};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Bindings {
    Rows(Vec<NeighborRow>),
    Properties(Vec<PropertyRef>),
}

/// Maps a full IRI onto the dialect's short form (`m.0br66`, `wd:Q668`,
/// `wdt:P17`). Unknown namespaces are returned unchanged.
pub fn shorten_uri(uri: &str, dialect: SchemaDialect) -> String {
    match dialect {
        SchemaDialect::Freebase => uri.strip_prefix(FREEBASE_NS).unwrap_or(uri).to_string(),
        SchemaDialect::Wikidata => {
            if let Some(rest) = uri.strip_prefix(WIKIDATA_ENTITY_NS) {
                format!("wd:{rest}")
            } else if let Some(rest) = uri.strip_prefix(WIKIDATA_DIRECT_NS) {
                format!("wdt:{rest}")
            } else {
                uri.to_string()
            }
        }
    }
}

fn malformed(msg: impl Into<String>) -> SparqlError {
    SparqlError::MalformedResults(msg.into())
}

struct Term<'a> {
    kind: &'a str,
    value: &'a str,
    datatype: Option<&'a str>,
}

fn term<'a>(binding: &'a Map<String, Value>, var: &str) -> Result<Option<Term<'a>>, SparqlError> {
    let Some(t) = binding.get(var) else {
        return Ok(None);
    };
    let obj = t
        .as_object()
        .ok_or_else(|| malformed(format!("?{var} is not an object")))?;
    let kind = obj
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("?{var} has no type")))?;
    let value = obj
        .get("value")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(format!("?{var} has no value")))?;
    Ok(Some(Term {
        kind,
        value,
        datatype: obj.get("datatype").and_then(Value::as_str),
    }))
}

fn property(
    binding: &Map<String, Value>,
    dialect: SchemaDialect,
) -> Result<PropertyRef, SparqlError> {
    let t = term(binding, "property")?
        .ok_or_else(|| SparqlError::MissingVariable("property".into()))?;
    let id = shorten_uri(t.value, dialect);
    if !dialect.is_property_id(&id) {
        return Err(malformed(format!(
            "{:?} is not a {dialect} property",
            t.value
        )));
    }
    Ok(PropertyRef {
        id,
        label: term(binding, "propertyLabel")?.map(|l| l.value.to_string()),
    })
}

fn value(binding: &Map<String, Value>, dialect: SchemaDialect) -> Result<NodeValue, SparqlError> {
    let t = term(binding, "value")?.ok_or_else(|| SparqlError::MissingVariable("value".into()))?;
    let label = term(binding, "valueLabel")?.map(|l| l.value.to_string());
    Ok(match t.kind {
        "uri" => {
            let id = shorten_uri(t.value, dialect);
            if dialect.is_entity_id(&id) {
                NodeValue::Entity(EntityRef { id, label })
            } else {
                // Web links and other IRIs outside the entity grammar.
                NodeValue::literal(id)
            }
        }
        "literal" | "typed-literal" => NodeValue::Literal {
            text: t.value.to_string(),
            datatype: t.datatype.map(str::to_string),
        },
        "bnode" => NodeValue::literal(format!("_:{}", t.value)),
        other => return Err(malformed(format!("unknown term type {other:?}"))),
    })
}

/// Parses a results document produced by an adjacency query in `mode`.
pub fn parse_bindings(
    doc: &str,
    mode: QueryMode,
    dialect: SchemaDialect,
) -> Result<Bindings, SparqlError> {
    let root: Value = serde_json::from_str(doc).map_err(|e| malformed(e.to_string()))?;
    let bindings = root
        .pointer("/results/bindings")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("missing results.bindings array"))?;
    let objects = bindings.iter().map(|b| {
        b.as_object()
            .ok_or_else(|| malformed("binding is not an object"))
    });
    match mode {
        QueryMode::Rows => objects
            .map(|b| {
                let b = b?;
                Ok(NeighborRow {
                    property: property(b, dialect)?,
                    value: value(b, dialect)?,
                })
            })
            .collect::<Result<_, _>>()
            .map(Bindings::Rows),
        QueryMode::DistinctProperties => objects
            .map(|b| property(b?, dialect))
            .collect::<Result<_, _>>()
            .map(Bindings::Properties),
    }
}
