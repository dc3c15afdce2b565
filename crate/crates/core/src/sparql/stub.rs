//! A small HTTP SPARQL endpoint backed by a [`Store`].
//!
//! It understands exactly the adjacency queries produced by
//! [`AdjacencyQuery`](crate::sparql::AdjacencyQuery): one triple pattern
//! around a fixed entity, an optional `VALUES ?property` list, an optional
//! `DISTINCT` projection and a `LIMIT`. Answers use full IRIs and language
//! tagged labels, like a real endpoint. Used for offline tests and demos.

use std::io;
use std::net::{SocketAddr, TcpListener};
use std::sync::atomic::{AtomicU16, AtomicUsize, Ordering};
use std::sync::{Arc, LazyLock, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Instant;

use regex::Regex;
use serde_json::{json, Value};
use socket2::{Domain, Protocol, Socket, Type};
use tiny_http::{Header, Method, Response, Server};

use crate::search::unique_properties;
use crate::sparql::{FREEBASE_NS, WIKIDATA_DIRECT_NS, WIKIDATA_ENTITY_NS};
use crate::store::Store;
use crate::types::{Direction, EntityRef, NodeValue, PropertyRef, SchemaDialect};

static OUTGOING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^\s*(\S+) \?property \?value \.\s*$").unwrap());
static INCOMING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?m)^\s*\?value \?property (\S+) \.\s*$").unwrap());
static VALUES: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"VALUES \?property \{([^}]*)\}").unwrap());
static LIMIT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^LIMIT (\d+)\s*$").unwrap());

/// A parsed adjacency query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubQuery {
    pub entity: String,
    pub direction: Direction,
    pub filter: Option<Vec<String>>,
    pub distinct: bool,
    pub limit: usize,
}

fn unprefix(term: &str, dialect: SchemaDialect) -> Option<String> {
    match dialect {
        SchemaDialect::Freebase => term.strip_prefix("ns:").map(str::to_string),
        SchemaDialect::Wikidata => {
            (term.starts_with("wd:") || term.starts_with("wdt:")).then(|| term.to_string())
        }
    }
}

pub fn parse_stub_query(text: &str, dialect: SchemaDialect) -> Result<StubQuery, String> {
    let (entity, direction) = if let Some(c) = OUTGOING.captures(text) {
        (c[1].to_string(), Direction::Outgoing)
    } else if let Some(c) = INCOMING.captures(text) {
        (c[1].to_string(), Direction::Incoming)
    } else {
        return Err("no adjacency triple pattern".into());
    };
    let entity =
        unprefix(&entity, dialect).ok_or_else(|| format!("unsupported entity term {entity}"))?;
    let filter = match VALUES.captures(text) {
        Some(c) => Some(
            c[1].split_whitespace()
                .map(|t| {
                    unprefix(t, dialect).ok_or_else(|| format!("unsupported property term {t}"))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let limits: Vec<_> = LIMIT.captures_iter(text).collect();
    if limits.len() != 1 {
        return Err(format!("expected one LIMIT clause, found {}", limits.len()));
    }
    let limit = limits[0][1]
        .parse()
        .map_err(|e| format!("bad LIMIT: {e}"))?;
    Ok(StubQuery {
        entity,
        direction,
        filter,
        distinct: text.contains("SELECT DISTINCT"),
        limit,
    })
}

fn expand(id: &str, dialect: SchemaDialect) -> String {
    match dialect {
        SchemaDialect::Freebase => format!("{FREEBASE_NS}{id}"),
        SchemaDialect::Wikidata => {
            if let Some(rest) = id.strip_prefix("wdt:") {
                format!("{WIKIDATA_DIRECT_NS}{rest}")
            } else if let Some(rest) = id.strip_prefix("wd:") {
                format!("{WIKIDATA_ENTITY_NS}{rest}")
            } else {
                id.to_string()
            }
        }
    }
}

fn label_term(label: &str) -> Value {
    json!({"type": "literal", "xml:lang": "en", "value": label})
}

fn property_binding(p: &PropertyRef, dialect: SchemaDialect) -> serde_json::Map<String, Value> {
    let mut b = serde_json::Map::new();
    b.insert(
        "property".into(),
        json!({"type": "uri", "value": expand(&p.id, dialect)}),
    );
    if let Some(l) = &p.label {
        b.insert("propertyLabel".into(), label_term(l));
    }
    b
}

/// Evaluates a parsed query against the store, producing a results document.
pub fn answer(store: &Store, q: &StubQuery) -> String {
    let dialect = store.dialect();
    let entity = EntityRef {
        id: q.entity.clone(),
        label: None,
    };
    let filter: Option<Vec<PropertyRef>> = q.filter.as_ref().map(|f| {
        f.iter()
            .map(|id| PropertyRef {
                id: id.clone(),
                label: None,
            })
            .collect()
    });
    let rows = store.adjacent(&entity, q.direction, filter.as_deref());
    let (vars, bindings): (&[&str], Vec<Value>) = if q.distinct {
        (
            &["property", "propertyLabel"],
            unique_properties(rows)
                .iter()
                .take(q.limit)
                .map(|p| Value::Object(property_binding(p, dialect)))
                .collect(),
        )
    } else {
        (
            &["property", "propertyLabel", "value", "valueLabel"],
            rows.iter()
                .take(q.limit)
                .map(|r| {
                    let mut b = property_binding(&r.property, dialect);
                    match &r.value {
                        NodeValue::Entity(e) => {
                            b.insert(
                                "value".into(),
                                json!({"type": "uri", "value": expand(&e.id, dialect)}),
                            );
                            if let Some(l) = &e.label {
                                b.insert("valueLabel".into(), label_term(l));
                            }
                        }
                        NodeValue::Literal { text, .. } => {
                            b.insert("value".into(), json!({"type": "literal", "value": text}));
                        }
                    }
                    Value::Object(b)
                })
                .collect(),
        )
    };
    json!({"head": {"vars": vars}, "results": {"bindings": bindings}}).to_string()
}

#[derive(Default)]
struct Shared {
    requests: AtomicUsize,
    fail_remaining: AtomicUsize,
    fail_status: AtomicU16,
    arrivals: Mutex<Vec<Instant>>,
    queries: Mutex<Vec<String>>,
}

/// Running stub endpoint; shuts down when dropped.
pub struct StubEndpoint {
    url: String,
    server: Arc<Server>,
    shared: Arc<Shared>,
    workers: Vec<JoinHandle<()>>,
}

impl StubEndpoint {
    /// Serves `store` on an ephemeral localhost port.
    pub fn serve(store: Arc<Store>) -> io::Result<StubEndpoint> {
        // Accepted sockets inherit TCP_NODELAY from the listener; without it
        // the split header/body writes stall on delayed ACKs under keep-alive.
        let socket = Socket::new(Domain::IPV4, Type::STREAM, Some(Protocol::TCP))?;
        socket.set_tcp_nodelay(true)?;
        socket.bind(&SocketAddr::from(([127, 0, 0, 1], 0)).into())?;
        socket.listen(128)?;
        let server =
            Server::from_listener(TcpListener::from(socket), None).map_err(io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| io::Error::other("stub endpoint has no IP address"))?;
        let server = Arc::new(server);
        let shared = Arc::new(Shared::default());
        let workers = (0..4)
            .map(|_| {
                let server = server.clone();
                let shared = shared.clone();
                let store = store.clone();
                thread::spawn(move || {
                    while let Ok(req) = server.recv() {
                        handle(req, &store, &shared);
                    }
                })
            })
            .collect();
        Ok(StubEndpoint {
            url: format!("http://{addr}/sparql"),
            server,
            shared,
            workers,
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn request_count(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }

    /// Answer the next `n` requests with `status` instead of results.
    pub fn fail_next(&self, n: usize, status: u16) {
        self.shared.fail_status.store(status, Ordering::SeqCst);
        self.shared.fail_remaining.store(n, Ordering::SeqCst);
    }

    pub fn arrivals(&self) -> Vec<Instant> {
        self.shared.arrivals.lock().unwrap().clone()
    }

    /// Query texts received so far, in arrival order.
    pub fn queries(&self) -> Vec<String> {
        self.shared.queries.lock().unwrap().clone()
    }
}

impl Drop for StubEndpoint {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn handle(mut req: tiny_http::Request, store: &Store, shared: &Shared) {
    shared.arrivals.lock().unwrap().push(Instant::now());
    shared.requests.fetch_add(1, Ordering::SeqCst);

    let mut body = String::new();
    let query = match req.method() {
        Method::Post => {
            let _ = req.as_reader().read_to_string(&mut body);
            find_query(&body)
        }
        _ => req.url().split_once('?').and_then(|(_, qs)| find_query(qs)),
    };

    let respond = |req: tiny_http::Request, status: u16, body: String, json: bool| {
        let ctype = if json {
            "application/sparql-results+json"
        } else {
            "text/plain"
        };
        let resp = Response::from_string(body)
            .with_status_code(status)
            .with_header(Header::from_bytes("Content-Type", ctype).expect("static header"));
        let _ = req.respond(resp);
    };

    let failing = shared
        .fail_remaining
        .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
        .is_ok();
    if failing {
        let status = shared.fail_status.load(Ordering::SeqCst);
        return respond(req, status, "injected failure".into(), false);
    }

    let Some(query) = query else {
        return respond(req, 400, "missing query parameter".into(), false);
    };
    shared.queries.lock().unwrap().push(query.clone());
    match parse_stub_query(&query, store.dialect()) {
        Ok(q) => respond(req, 200, answer(store, &q), true),
        Err(e) => respond(req, 400, format!("parse error: {e}"), false),
    }
}

fn find_query(form: &str) -> Option<String> {
    form_urlencoded::parse(form.as_bytes())
        .find(|(k, _)| k == "query")
        .map(|(_, v)| v.into_owned())
}
