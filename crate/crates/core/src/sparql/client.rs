use std::time::Duration;

use crate::http::{RateLimiter, RetryPolicy};
use crate::search::{Backend, BackendError, Retrieved, SearchConfig, SearchRequest, SearchResult};
use crate::sparql::{
    parse_bindings, AdjacencyQuery, Bindings, LabelSource, QueryMode, SparqlError,
};
use crate::types::{Direction, EntityRef, PropertyRef, SchemaDialect};

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub url: String,
    pub dialect: SchemaDialect,
    pub timeout: Duration,
    /// Minimum spacing between request starts.
    pub min_request_interval: Duration,
    pub retry: RetryPolicy,
    pub labels: LabelSource,
    /// Extra header, e.g. `("Authorization", "Bearer …")`.
    pub auth_header: Option<(String, String)>,
    pub user_agent: String,
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>, dialect: SchemaDialect) -> Self {
        EndpointConfig {
            url: url.into(),
            dialect,
            timeout: Duration::from_secs(60),
            min_request_interval: Duration::from_millis(0),
            retry: RetryPolicy::default(),
            labels: LabelSource::default(),
            auth_header: None,
            user_agent: format!(
                "kgnav/{} (knowledge-graph navigation agent)",
                env!("CARGO_PKG_VERSION")
            ),
        }
    }
}

/// Blocking SPARQL client. Safe to share between threads; the rate limiter
/// serializes request admission across all of them.
pub struct SparqlClient {
    cfg: EndpointConfig,
    http: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl SparqlClient {
    pub fn new(cfg: EndpointConfig) -> Result<Self, SparqlError> {
        if cfg.timeout.is_zero() {
            return Err(SparqlError::InvalidInput(
                "request timeout must be positive".into(),
            ));
        }
        let http = reqwest::blocking::Client::builder()
            .timeout(cfg.timeout)
            .user_agent(cfg.user_agent.clone())
            .build()
            .map_err(|e| SparqlError::Unreachable(e.to_string()))?;
        Ok(SparqlClient {
            limiter: RateLimiter::new(cfg.min_request_interval),
            cfg,
            http,
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.cfg
    }

    /// POSTs one SELECT query and returns the raw results document.
    pub fn select(&self, query: &str) -> Result<String, SparqlError> {
        self.cfg
            .retry
            .run(|| self.select_once(query), SparqlError::is_transient)
    }

    fn select_once(&self, query: &str) -> Result<String, SparqlError> {
        let body = form_urlencoded::Serializer::new(String::new())
            .append_pair("query", query)
            .finish();
        let mut req = self
            .http
            .post(&self.cfg.url)
            .header("Accept", "application/sparql-results+json")
            .header("Content-Type", "application/x-www-form-urlencoded")
            .body(body);
        if let Some((name, value)) = &self.cfg.auth_header {
            req = req.header(name.as_str(), value.as_str());
        }
        self.limiter.acquire();
        let resp = req
            .send()
            .map_err(|e| SparqlError::Unreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .text()
            .map_err(|e| SparqlError::Unreachable(e.to_string()))?;
        match status {
            200..=299 => Ok(text),
            400 => Err(SparqlError::QueryRejected(text)),
            _ => Err(SparqlError::Http { status, body: text }),
        }
    }

    fn rows(
        &self,
        entity: &EntityRef,
        direction: Direction,
        filter: Option<&[PropertyRef]>,
        limit: usize,
    ) -> Result<Vec<crate::store::NeighborRow>, SparqlError> {
        let q = self.query(entity, direction, filter, QueryMode::Rows, limit)?;
        match parse_bindings(&self.select(&q)?, QueryMode::Rows, self.cfg.dialect)? {
            Bindings::Rows(rows) => Ok(rows),
            Bindings::Properties(_) => unreachable!("rows mode yields rows"),
        }
    }

    fn query(
        &self,
        entity: &EntityRef,
        direction: Direction,
        filter: Option<&[PropertyRef]>,
        mode: QueryMode,
        limit: usize,
    ) -> Result<String, SparqlError> {
        AdjacencyQuery {
            dialect: self.cfg.dialect,
            entity,
            direction,
            filter,
            mode,
            limit,
            labels: self.cfg.labels,
        }
        .build()
    }

    /// Retrieves a neighbourhood with bounded queries.
    ///
    /// Without a filter, a `LIMIT k+1` probe decides whether the entity is
    /// high-degree; if so a DISTINCT query lists its properties. With a
    /// filter, `LIMIT p+1` rows are fetched and the extra row only sets the
    /// overflow flag.
    pub fn fetch_neighbors(
        &self,
        entity: &EntityRef,
        direction: Direction,
        filter: Option<&[PropertyRef]>,
        k: usize,
        p: usize,
    ) -> Result<SearchResult, SparqlError> {
        if k == 0 || p == 0 {
            return Err(SparqlError::InvalidInput(format!(
                "k and p must be at least 1 (k={k}, p={p})"
            )));
        }
        let filter = filter.filter(|f| !f.is_empty());
        let (mut rows, limit) = match filter {
            None => {
                let probe = self.rows(entity, direction, None, k.saturating_add(1))?;
                if probe.len() > k {
                    let q = self.query(
                        entity,
                        direction,
                        None,
                        QueryMode::DistinctProperties,
                        p.saturating_add(1),
                    )?;
                    let Bindings::Properties(mut properties) = parse_bindings(
                        &self.select(&q)?,
                        QueryMode::DistinctProperties,
                        self.cfg.dialect,
                    )?
                    else {
                        unreachable!("distinct mode yields properties")
                    };
                    let truncated = properties.len() > p;
                    properties.truncate(p);
                    return Ok(SearchResult::PropertyTable {
                        properties,
                        truncated,
                    });
                }
                (probe, p)
            }
            Some(f) => (
                self.rows(entity, direction, Some(f), p.saturating_add(1))?,
                p,
            ),
        };
        let truncated = rows.len() > limit;
        rows.truncate(limit);
        Ok(SearchResult::RowTable { rows, truncated })
    }
}

impl Backend for SparqlClient {
    fn dialect(&self) -> SchemaDialect {
        self.cfg.dialect
    }

    fn retrieve(
        &self,
        request: &SearchRequest,
        cfg: &SearchConfig,
    ) -> Result<Retrieved, BackendError> {
        self.fetch_neighbors(
            &request.entity,
            request.direction,
            request.properties.as_deref(),
            cfg.k,
            cfg.p,
        )
        .map(Retrieved::Bounded)
        .map_err(BackendError::from)
    }
}
