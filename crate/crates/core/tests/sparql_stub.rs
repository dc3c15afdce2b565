mod common;

use std::sync::Arc;
use std::time::Duration;

use kgnav::http::RetryPolicy;
use kgnav::search::{search, SearchConfig, SearchRequest, SearchResult};
use kgnav::sparql::stub::StubEndpoint;
use kgnav::sparql::{EndpointConfig, SparqlClient, SparqlError};
use kgnav::types::Triple;
use kgnav::{Direction, EntityRef, NodeValue, PropertyRef, SchemaDialect, Store};

fn e(id: &str) -> EntityRef {
    EntityRef {
        id: id.into(),
        label: None,
    }
}

fn p(id: &str) -> PropertyRef {
    PropertyRef {
        id: id.into(),
        label: None,
    }
}

fn vangogh() -> Arc<Store> {
    let dir = common::fixtures().join("vangogh");
    Arc::new(
        Store::load_files(
            SchemaDialect::Freebase,
            &dir.join("triples.tsv"),
            Some(&dir.join("labels.tsv")),
        )
        .unwrap(),
    )
}

fn client(url: &str, retry: RetryPolicy) -> SparqlClient {
    let mut cfg = EndpointConfig::new(url, SchemaDialect::Freebase);
    cfg.retry = retry;
    SparqlClient::new(cfg).unwrap()
}

fn fast_retry(n: u32) -> RetryPolicy {
    RetryPolicy {
        max_retries: n,
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(20),
    }
}

#[test]
fn remote_matches_local_on_the_fixture() {
    let store = vangogh();
    let stub = StubEndpoint::serve(store.clone()).unwrap();
    let remote = client(stub.url(), RetryPolicy::none());
    let cfg = SearchConfig::default();
    for req in [
        SearchRequest::unfiltered(e("m.07_m2"), Direction::Outgoing),
        SearchRequest::unfiltered(e("m.059j2"), Direction::Outgoing),
        SearchRequest::unfiltered(e("m.059j2"), Direction::Incoming),
        SearchRequest::new(
            e("m.059j2"),
            Direction::Outgoing,
            vec![p("location.country.capital")],
        ),
        SearchRequest::unfiltered(e("m.0zzzz"), Direction::Outgoing),
    ] {
        assert_eq!(
            search(&remote, &req, &cfg).unwrap(),
            search(store.as_ref(), &req, &cfg).unwrap(),
            "{req:?}"
        );
    }
}

#[test]
fn high_degree_probe_then_distinct() {
    let stub = StubEndpoint::serve(vangogh()).unwrap();
    let remote = client(stub.url(), RetryPolicy::none());
    let result = remote
        .fetch_neighbors(&e("m.059j2"), Direction::Outgoing, None, 50, 1000)
        .unwrap();
    let SearchResult::PropertyTable {
        properties,
        truncated,
    } = result
    else {
        panic!("expected a property table");
    };
    assert_eq!(properties.len(), 30);
    assert!(!truncated);
    assert_eq!(properties[2].id, "location.country.capital");
    assert_eq!(properties[2].label.as_deref(), Some("Capital"));
    let q = stub.queries();
    assert_eq!(q.len(), 2);
    assert!(q[0].contains("LIMIT 51") && !q[0].contains("DISTINCT"));
    assert!(q[1].contains("SELECT DISTINCT") && q[1].contains("LIMIT 1001"));
}

#[test]
fn filtered_overflow_is_truncated_at_p() {
    let hub = EntityRef {
        id: "m.0hub".into(),
        label: Some("Hub".into()),
    };
    let triples = (0..1500).map(|i| Triple {
        subject: hub.clone(),
        predicate: PropertyRef {
            id: "test.hub.member".into(),
            label: Some("Member".into()),
        },
        object: NodeValue::Entity(EntityRef {
            id: format!("m.0n{i}"),
            label: Some(format!("Member {i}")),
        }),
    });
    let store = Arc::new(Store::from_triples(SchemaDialect::Freebase, triples));
    let stub = StubEndpoint::serve(store.clone()).unwrap();
    let remote = client(stub.url(), RetryPolicy::none());
    let filter = [p("test.hub.member")];
    let result = remote
        .fetch_neighbors(&e("m.0hub"), Direction::Outgoing, Some(&filter), 50, 1000)
        .unwrap();
    assert!(result.is_truncated());
    assert_eq!(result.returned_count(), 1000);
    assert_eq!(result.rows()[999].value.text(), "m.0n999");
    assert_eq!(stub.queries().len(), 1);
    assert!(stub.queries()[0].contains("LIMIT 1001"));

    // Exactly p rows is not an overflow.
    let result = remote
        .fetch_neighbors(&e("m.0hub"), Direction::Outgoing, Some(&filter), 50, 1500)
        .unwrap();
    assert!(!result.is_truncated());
    assert_eq!(result.returned_count(), 1500);
}

#[test]
fn transient_failures_are_retried() {
    let stub = StubEndpoint::serve(vangogh()).unwrap();
    let remote = client(stub.url(), fast_retry(3));
    stub.fail_next(2, 503);
    let r = remote
        .fetch_neighbors(&e("m.07_m2"), Direction::Outgoing, None, 50, 1000)
        .unwrap();
    assert_eq!(r.returned_count(), 5);
    assert_eq!(stub.request_count(), 3);

    stub.fail_next(10, 429);
    let err = remote
        .fetch_neighbors(&e("m.07_m2"), Direction::Outgoing, None, 50, 1000)
        .unwrap_err();
    assert!(matches!(err, SparqlError::Http { status: 429, .. }));
    assert!(err.is_transient());
    assert_eq!(stub.request_count(), 3 + 4);
}

#[test]
fn permanent_failures_are_not_retried() {
    let stub = StubEndpoint::serve(vangogh()).unwrap();
    let remote = client(stub.url(), fast_retry(3));
    stub.fail_next(1, 400);
    let err = remote
        .fetch_neighbors(&e("m.07_m2"), Direction::Outgoing, None, 50, 1000)
        .unwrap_err();
    assert!(matches!(err, SparqlError::QueryRejected(_)));
    assert_eq!(stub.request_count(), 1);

    stub.fail_next(1, 404);
    let err = remote
        .select("SELECT * WHERE { ?s ?p ?o } LIMIT 1")
        .unwrap_err();
    assert!(matches!(err, SparqlError::Http { status: 404, .. }));
    assert_eq!(stub.request_count(), 2);
}

#[test]
fn unreachable_endpoint_is_transient() {
    let err = client("http://127.0.0.1:9/sparql", RetryPolicy::none())
        .fetch_neighbors(&e("m.07_m2"), Direction::Outgoing, None, 50, 1000)
        .unwrap_err();
    assert!(matches!(err, SparqlError::Unreachable(_)));
    assert!(err.is_transient());
}

#[test]
fn requests_are_spaced() {
    let stub = StubEndpoint::serve(vangogh()).unwrap();
    let mut cfg = EndpointConfig::new(stub.url(), SchemaDialect::Freebase);
    cfg.min_request_interval = Duration::from_millis(40);
    let remote = Arc::new(SparqlClient::new(cfg).unwrap());
    std::thread::scope(|s| {
        for _ in 0..3 {
            let remote = remote.clone();
            s.spawn(move || {
                for _ in 0..2 {
                    remote
                        .fetch_neighbors(&e("m.07_m2"), Direction::Outgoing, None, 50, 1000)
                        .unwrap();
                }
            });
        }
    });
    let mut arrivals = stub.arrivals();
    arrivals.sort();
    assert_eq!(arrivals.len(), 6);
    for w in arrivals.windows(2) {
        // Small slack for scheduling between admission and arrival.
        assert!(
            w[1] - w[0] >= Duration::from_millis(30),
            "{:?}",
            w[1] - w[0]
        );
    }
}

#[test]
fn dialect_mismatch_in_identifiers_is_rejected_before_sending() {
    let stub = StubEndpoint::serve(vangogh()).unwrap();
    let remote = client(stub.url(), RetryPolicy::none());
    let err = remote
        .fetch_neighbors(&e("wd:Q5089"), Direction::Outgoing, None, 50, 1000)
        .unwrap_err();
    assert!(!err.is_transient());
    assert_eq!(stub.request_count(), 0);
}
