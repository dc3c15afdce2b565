//! The `search` tool: 1-hop retrieval with adaptive high-degree filtering.
//!
//! Given all rows `R` around an entity, the tool answers with
//!
//! * the unique properties of `R` when `|R| > k` and no property filter was
//!   given,
//! * otherwise the first `p` rows of `R`, flagged as truncated when `|R| > p`.
//!
//! Backends either hand back the complete `R` (the local store) or apply the
//! thresholds themselves with bounded queries (remote SPARQL endpoints).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparql::SparqlError;
use crate::store::{NeighborRow, Store};
use crate::types::{Direction, EntityRef, PropertyRef, SchemaDialect};

pub const DEFAULT_K: usize = 50;
pub const DEFAULT_P: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// High-degree threshold.
    pub k: usize,
    /// Maximum result size.
    pub p: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            k: DEFAULT_K,
            p: DEFAULT_P,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("search thresholds must be at least 1 (k={k}, p={p})")]
pub struct InvalidConfig {
    pub k: usize,
    pub p: usize,
}

impl SearchConfig {
    pub fn new(k: usize, p: usize) -> Result<Self, InvalidConfig> {
        if k == 0 || p == 0 {
            return Err(InvalidConfig { k, p });
        }
        Ok(SearchConfig { k, p })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchRequest {
    pub entity: EntityRef,
    pub direction: Direction,
    /// Never `Some(empty)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub properties: Option<Vec<PropertyRef>>,
}

impl SearchRequest {
    pub fn new(entity: EntityRef, direction: Direction, properties: Vec<PropertyRef>) -> Self {
        SearchRequest {
            entity,
            direction,
            properties: (!properties.is_empty()).then_some(properties),
        }
    }

    pub fn unfiltered(entity: EntityRef, direction: Direction) -> Self {
        SearchRequest::new(entity, direction, Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchResult {
    RowTable {
        rows: Vec<NeighborRow>,
        truncated: bool,
    },
    /// Distinct properties, first-occurrence order.
    PropertyTable {
        properties: Vec<PropertyRef>,
        truncated: bool,
    },
}

impl SearchResult {
    pub fn returned_count(&self) -> usize {
        match self {
            SearchResult::RowTable { rows, .. } => rows.len(),
            SearchResult::PropertyTable { properties, .. } => properties.len(),
        }
    }

    pub fn is_truncated(&self) -> bool {
        match self {
            SearchResult::RowTable { truncated, .. }
            | SearchResult::PropertyTable { truncated, .. } => *truncated,
        }
    }

    pub fn rows(&self) -> &[NeighborRow] {
        match self {
            SearchResult::RowTable { rows, .. } => rows,
            SearchResult::PropertyTable { .. } => &[],
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error(transparent)]
    Sparql(#[from] SparqlError),
    #[error("dialect mismatch: backend serves {backend}, request uses {request}")]
    DialectMismatch {
        backend: SchemaDialect,
        request: SchemaDialect,
    },
}

impl BackendError {
    /// Whether repeating the same request later could succeed.
    pub fn is_retriable(&self) -> bool {
        match self {
            BackendError::Sparql(e) => e.is_transient(),
            BackendError::DialectMismatch { .. } => false,
        }
    }
}

#[derive(Debug, Error)]
#[error("search {} {} failed: {source}", .request.entity.id, .request.direction)]
pub struct SearchError {
    pub request: SearchRequest,
    #[source]
    pub source: BackendError,
}

/// What a backend hands to the search tool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Retrieved {
    /// Every row matching the request, in backend order.
    Complete(Vec<NeighborRow>),
    /// The backend already applied the `k`/`p` thresholds.
    Bounded(SearchResult),
}

pub trait Backend: Send + Sync {
    fn dialect(&self) -> SchemaDialect;

    fn retrieve(
        &self,
        request: &SearchRequest,
        cfg: &SearchConfig,
    ) -> Result<Retrieved, BackendError>;
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn dialect(&self) -> SchemaDialect {
        (**self).dialect()
    }

    fn retrieve(
        &self,
        request: &SearchRequest,
        cfg: &SearchConfig,
    ) -> Result<Retrieved, BackendError> {
        (**self).retrieve(request, cfg)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn dialect(&self) -> SchemaDialect {
        (**self).dialect()
    }

    fn retrieve(
        &self,
        request: &SearchRequest,
        cfg: &SearchConfig,
    ) -> Result<Retrieved, BackendError> {
        (**self).retrieve(request, cfg)
    }
}

impl Backend for Store {
    fn dialect(&self) -> SchemaDialect {
        Store::dialect(self)
    }

    fn retrieve(
        &self,
        request: &SearchRequest,
        _cfg: &SearchConfig,
    ) -> Result<Retrieved, BackendError> {
        Ok(Retrieved::Complete(self.adjacent(
            &request.entity,
            request.direction,
            request.properties.as_deref(),
        )))
    }
}

/// Runs one search against `backend`.
pub fn search<B: Backend + ?Sized>(
    backend: &B,
    request: &SearchRequest,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    match backend.retrieve(request, cfg) {
        Ok(Retrieved::Complete(rows)) => {
            Ok(adaptive_select(rows, request.properties.is_some(), cfg))
        }
        Ok(Retrieved::Bounded(result)) => Ok(result),
        Err(source) => Err(SearchError {
            request: request.clone(),
            source,
        }),
    }
}

/// Applies the thresholds to a complete neighbourhood.
pub fn adaptive_select(
    mut rows: Vec<NeighborRow>,
    filtered: bool,
    cfg: &SearchConfig,
) -> SearchResult {
    if rows.len() > cfg.k && !filtered {
        let mut properties = unique_properties(rows);
        let truncated = properties.len() > cfg.p;
        properties.truncate(cfg.p);
        return SearchResult::PropertyTable {
            properties,
            truncated,
        };
    }
    let truncated = rows.len() > cfg.p;
    rows.truncate(cfg.p);
    SearchResult::RowTable { rows, truncated }
}

/// Distinct properties by id, in order of first occurrence.
pub fn unique_properties(rows: impl IntoIterator<Item = NeighborRow>) -> Vec<PropertyRef> {
    let mut seen = HashSet::new();
    rows.into_iter()
        .filter_map(|r| seen.insert(r.property.id.clone()).then_some(r.property))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::NodeValue;
    use proptest::prelude::*;

    fn ent(id: &str) -> EntityRef {
        EntityRef {
            id: id.into(),
            label: None,
        }
    }

    fn prop(id: &str) -> PropertyRef {
        PropertyRef {
            id: id.into(),
            label: None,
        }
    }

    /// `n` outgoing rows from `m.hub`, cycling over `props` properties.
    fn hub(n: usize, props: usize) -> Store {
        Store::from_triples(
            SchemaDialect::Freebase,
            (0..n).map(|i| crate::types::Triple {
                subject: ent("m.hub"),
                predicate: prop(&format!("test.hub.p{}", i % props)),
                object: NodeValue::Entity(ent(&format!("m.n{i}"))),
            }),
        )
    }

    #[test]
    fn exactly_k_rows_stay_a_row_table() {
        let store = hub(50, 7);
        let req = SearchRequest::unfiltered(ent("m.hub"), Direction::Outgoing);
        let res = search(&store, &req, &SearchConfig::default()).unwrap();
        assert!(
            matches!(res, SearchResult::RowTable { ref rows, truncated: false } if rows.len() == 50)
        );
    }

    #[test]
    fn k_plus_one_rows_become_properties() {
        let store = hub(51, 7);
        let req = SearchRequest::unfiltered(ent("m.hub"), Direction::Outgoing);
        let res = search(&store, &req, &SearchConfig::default()).unwrap();
        let want: Vec<_> = (0..7).map(|i| prop(&format!("test.hub.p{i}"))).collect();
        assert_eq!(
            res,
            SearchResult::PropertyTable {
                properties: want,
                truncated: false
            }
        );
    }

    #[test]
    fn filtered_overflow_is_truncated_at_p() {
        let store = hub(1500, 1);
        let req = SearchRequest::new(ent("m.hub"), Direction::Outgoing, vec![prop("test.hub.p0")]);
        let res = search(&store, &req, &SearchConfig::default()).unwrap();
        let full = store.adjacent(&req.entity, req.direction, req.properties.as_deref());
        assert_eq!(
            res,
            SearchResult::RowTable {
                rows: full[..1000].to_vec(),
                truncated: true
            }
        );
    }

    #[test]
    fn property_table_is_capped_at_p() {
        let store = hub(30, 30);
        let req = SearchRequest::unfiltered(ent("m.hub"), Direction::Outgoing);
        let res = search(&store, &req, &SearchConfig::new(5, 10).unwrap()).unwrap();
        assert!(
            matches!(res, SearchResult::PropertyTable { ref properties, truncated: true } if properties.len() == 10)
        );
    }

    #[test]
    fn empty_filter_means_unfiltered() {
        let req = SearchRequest::new(ent("m.1"), Direction::Incoming, vec![]);
        assert_eq!(req.properties, None);
        assert!(SearchConfig::new(0, 1).is_err());
        assert!(SearchConfig::new(1, 0).is_err());
    }

    proptest! {
        #[test]
        fn mode_exclusivity(delta in 0usize..3, filtered in any::<bool>(), k in 1usize..20, props in 1usize..5) {
            let n = k - 1 + delta;
            let store = hub(n, props);
            let filter = if filtered { (0..props).map(|i| prop(&format!("test.hub.p{i}"))).collect() } else { vec![] };
            let req = SearchRequest::new(ent("m.hub"), Direction::Outgoing, filter);
            let res = search(&store, &req, &SearchConfig::new(k, 1000).unwrap()).unwrap();
            let property_table = matches!(res, SearchResult::PropertyTable { .. });
            prop_assert_eq!(property_table, n > k && !filtered);
        }

        #[test]
        fn row_tables_respect_p(n in 0usize..60, p in 1usize..40) {
            let store = hub(n, 3);
            let req = SearchRequest::new(ent("m.hub"), Direction::Outgoing, vec![prop("test.hub.p0"), prop("test.hub.p1"), prop("test.hub.p2")]);
            let res = search(&store, &req, &SearchConfig::new(1, p).unwrap()).unwrap();
            match res {
                SearchResult::RowTable { rows, truncated } => {
                    prop_assert!(rows.len() <= p);
                    prop_assert_eq!(truncated, n > p);
                    if truncated { prop_assert_eq!(rows.len(), p); }
                    if n <= p { prop_assert_eq!(rows, store.adjacent(&req.entity, req.direction, req.properties.as_deref())); }
                }
                SearchResult::PropertyTable { .. } => prop_assert!(false, "filtered request produced property table"),
            }
        }
    }
}
