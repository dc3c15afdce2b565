//! Adjacency retrieval from live SPARQL endpoints.

mod client;
mod query;
mod results;
pub mod stub;

use thiserror::Error;

use crate::types::IdError;

pub use client::{EndpointConfig, SparqlClient};
pub use query::{build_adjacency_query, AdjacencyQuery, LabelSource};
pub use results::{parse_bindings, shorten_uri, Bindings};

pub const FREEBASE_NS: &str = "http://rdf.freebase.com/ns/";
pub const WIKIDATA_ENTITY_NS: &str = "http://www.wikidata.org/entity/";
pub const WIKIDATA_DIRECT_NS: &str = "http://www.wikidata.org/prop/direct/";

/// Shape of an adjacency query's projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    /// property, propertyLabel, value, valueLabel
    Rows,
    /// DISTINCT property, propertyLabel
    DistinctProperties,
}

#[derive(Debug, Error)]
pub enum SparqlError {
    #[error("endpoint unreachable: {0}")]
    Unreachable(String),
    #[error("endpoint returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("query rejected by endpoint: {0}")]
    QueryRejected(String),
    #[error("malformed results document: {0}")]
    MalformedResults(String),
    #[error("results binding lacks required variable ?{0}")]
    MissingVariable(String),
    #[error("invalid query input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    InvalidEntity(#[from] IdError),
}

impl SparqlError {
    pub fn is_transient(&self) -> bool {
        match self {
            SparqlError::Unreachable(_) => true,
            SparqlError::Http { status, .. } => *status == 429 || (500..600).contains(status),
            _ => false,
        }
    }
}
