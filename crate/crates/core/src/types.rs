//! Shared vocabulary: identifiers, triples, directions and schema dialects.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

static FREEBASE_MID: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[mg]\.[A-Za-z0-9_]+$").unwrap());
// Schema paths (`people.person.place_of_birth`, `common.topic`). Types are
// graph nodes in Freebase, so they are accepted as entities as well.
static FREEBASE_PATH: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[a-z0-9_]+(\.[a-z0-9_]+)+$").unwrap());
static WIKIDATA_ENTITY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^wd:Q[0-9]+$").unwrap());
static WIKIDATA_PROPERTY: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^wdt:P[0-9]+$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("malformed identifier {text:?} for {dialect} schema")]
    Malformed {
        text: String,
        dialect: SchemaDialect,
    },
    #[error("malformed property {text:?} for {dialect} schema")]
    MalformedProperty {
        text: String,
        dialect: SchemaDialect,
    },
    #[error("unknown schema dialect {0:?} (expected 'freebase' or 'wikidata')")]
    UnknownDialect(String),
    #[error("unknown direction {0:?} (expected 'incoming' or 'outgoing')")]
    UnknownDirection(String),
}

/// Identifier conventions of a knowledge-graph family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemaDialect {
    Freebase,
    Wikidata,
}

impl SchemaDialect {
    pub fn is_entity_id(self, text: &str) -> bool {
        match self {
            SchemaDialect::Freebase => FREEBASE_MID.is_match(text) || FREEBASE_PATH.is_match(text),
            SchemaDialect::Wikidata => WIKIDATA_ENTITY.is_match(text),
        }
    }

    pub fn is_property_id(self, text: &str) -> bool {
        match self {
            SchemaDialect::Freebase => FREEBASE_PATH.is_match(text),
            SchemaDialect::Wikidata => WIKIDATA_PROPERTY.is_match(text),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaDialect::Freebase => "freebase",
            SchemaDialect::Wikidata => "wikidata",
        }
    }
}

impl fmt::Display for SchemaDialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaDialect {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "freebase" => Ok(SchemaDialect::Freebase),
            "wikidata" => Ok(SchemaDialect::Wikidata),
            other => Err(IdError::UnknownDialect(other.to_string())),
        }
    }
}

/// A graph node identified by a dialect-scoped id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl EntityRef {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

/// Validates `text` as an entity id under `dialect`.
pub fn parse_entity_ref(text: &str, dialect: SchemaDialect) -> Result<EntityRef, IdError> {
    if text.is_empty() || !dialect.is_entity_id(text) {
        return Err(IdError::Malformed {
            text: text.to_string(),
            dialect,
        });
    }
    Ok(EntityRef {
        id: text.to_string(),
        label: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PropertyRef {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

pub fn parse_property_ref(text: &str, dialect: SchemaDialect) -> Result<PropertyRef, IdError> {
    if text.is_empty() || !dialect.is_property_id(text) {
        return Err(IdError::MalformedProperty {
            text: text.to_string(),
            dialect,
        });
    }
    Ok(PropertyRef {
        id: text.to_string(),
        label: None,
    })
}

/// The object side of a triple. Literal text is kept exactly as the source
/// wrote it (`2007-06-05-08:00` stays as is).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeValue {
    Entity(EntityRef),
    Literal {
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        datatype: Option<String>,
    },
}

impl NodeValue {
    pub fn literal(text: impl Into<String>) -> Self {
        NodeValue::Literal {
            text: text.into(),
            datatype: None,
        }
    }

    /// Id for entities, raw text for literals.
    pub fn text(&self) -> &str {
        match self {
            NodeValue::Entity(e) => &e.id,
            NodeValue::Literal { text, .. } => text,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            NodeValue::Entity(e) => e.label.as_deref(),
            NodeValue::Literal { .. } => None,
        }
    }

    pub fn as_entity(&self) -> Option<&EntityRef> {
        match self {
            NodeValue::Entity(e) => Some(e),
            NodeValue::Literal { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityRef,
    pub predicate: PropertyRef,
    pub object: NodeValue,
}

/// Which end of a triple the queried entity sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The entity is the subject.
    Outgoing,
    /// The entity is the object.
    Incoming,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Outgoing => "outgoing",
            Direction::Incoming => "incoming",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = IdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "outgoing" => Ok(Direction::Outgoing),
            "incoming" => Ok(Direction::Incoming),
            other => Err(IdError::UnknownDirection(other.to_string())),
        }
    }
}
