use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use vwsd_client::stub::{embedding_handler, StubReply, StubServer};
use vwsd_client::{
    populate_store, ClientError, EmbedClient, EmbedItem, EmbedRequest, EmbedResponse, EmbedVector,
    PopulateOptions, RetryPolicy,
};
use vwsd_core::{store_coverage_check, Dataset, EmbeddingSpace, EmbeddingStore, Kind, QuerySource, SystemSpec};

fn fast_policy() -> RetryPolicy {
    RetryPolicy {
        max_retries: 3,
        base_delay: Duration::from_millis(1),
        timeout: Duration::from_secs(10),
    }
}

fn text_request(keys: &[&str]) -> EmbedRequest {
    EmbedRequest {
        space: "clip-en".into(),
        kind: Kind::Text,
        items: keys
            .iter()
            .map(|k| EmbedItem { key: k.to_string(), payload: k.to_string() })
            .collect(),
    }
}

fn dead_endpoint() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    format!("http://{addr}")
}

#[test]
fn zero_items() {
    let server = StubServer::start(embedding_handler(4)).unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    let resp = client.fetch_embeddings(&text_request(&[])).unwrap();
    assert!(resp.vectors.is_empty());
}

#[test]
fn three_texts_dim_four() {
    let server = StubServer::start(embedding_handler(4)).unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    let resp = client
        .fetch_embeddings(&text_request(&["angora city", "internet router", "breaking wheel"]))
        .unwrap();
    assert_eq!(resp.dim, 4);
    assert_eq!(resp.vectors.len(), 3);
    assert!(resp.vectors.iter().all(|v| v.vec.len() == 4));
    assert_eq!(server.request_count(), 1);
}

#[test]
fn full_batch_of_256() {
    let server = StubServer::start(embedding_handler(8)).unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    let keys: Vec<String> = (0..256).map(|i| format!("k{i}")).collect();
    let refs: Vec<&str> = keys.iter().map(String::as_str).collect();
    let resp = client.fetch_embeddings(&text_request(&refs)).unwrap();
    assert_eq!(resp.vectors.len(), 256);
}

#[test]
fn partial_response_names_missing_key() {
    let server = StubServer::start(|req: &EmbedRequest| {
        StubReply::json(&EmbedResponse {
            space: req.space.clone(),
            dim: 2,
            vectors: req
                .items
                .iter()
                .filter(|i| i.key != "b")
                .map(|i| EmbedVector { key: i.key.clone(), vec: vec![1.0, 0.0] })
                .collect(),
        })
    })
    .unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    match client.fetch_embeddings(&text_request(&["a", "b", "c"])) {
        Err(ClientError::PartialFailure { missing }) => assert_eq!(missing, vec!["b".to_string()]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn client_error_is_not_retried() {
    let server = StubServer::start(|_: &EmbedRequest| StubReply::error(400, "unknown space")).unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    match client.fetch_embeddings(&text_request(&["a"])) {
        Err(ClientError::Request { status, message }) => {
            assert_eq!(status, 400);
            assert_eq!(message, "unknown space");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(server.request_count(), 1);
}

#[test]
fn server_errors_are_retried() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let ok = embedding_handler(3);
    let server = StubServer::start(move |req: &EmbedRequest| {
        if seen.fetch_add(1, Ordering::SeqCst) < 2 {
            StubReply::error(503, "warming up")
        } else {
            ok(req)
        }
    })
    .unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    let resp = client.fetch_embeddings(&text_request(&["a"])).unwrap();
    assert_eq!(resp.vectors.len(), 1);
    assert_eq!(calls.load(Ordering::SeqCst), 3);
}

#[test]
fn unreachable_server_exhausts_retries() {
    let client = EmbedClient::new(dead_endpoint(), fast_policy());
    match client.fetch_embeddings(&text_request(&["a"])) {
        Err(e @ ClientError::Transport { attempts: 4, .. }) => assert!(e.is_transport()),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn bearer_token_is_forwarded() {
    // The stub ignores headers; this only checks the request still succeeds.
    let server = StubServer::start(embedding_handler(2)).unwrap();
    let client = EmbedClient::new(server.url(), fast_policy()).with_bearer_token("secret");
    assert!(client.fetch_embeddings(&text_request(&["a"])).is_ok());
}

fn dataset(n: usize) -> Dataset {
    let text: String = (0..n)
        .map(|i| {
            let imgs: Vec<String> = (0..10).map(|j| format!("img{i}_{j}.jpg")).collect();
            format!("w\tw phrase {i}\t{}\n", imgs.join("\t"))
        })
        .collect();
    Dataset::parse(&text, "fixture").unwrap()
}

fn base() -> SystemSpec {
    SystemSpec::new("base", "clip-en", QuerySource::Phrase)
}

#[test]
fn populate_fills_and_is_idempotent() {
    let ds = dataset(30); // 30 phrases + 300 images
    let server = StubServer::start(embedding_handler(8)).unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    let (store, stats) =
        populate_store(&client, &ds, &[base()], &[], &EmbeddingStore::new(), &PopulateOptions::default()).unwrap();
    // 30 text keys fit one batch, 300 image keys need ceil(300/256) = 2.
    assert_eq!(stats.requests, 3);
    assert_eq!(stats.fetched, 330);
    assert!(store_coverage_check(&store, &ds, &[base()], &[]).is_empty());

    let before = server.request_count();
    let (again, stats) = populate_store(&client, &ds, &[base()], &[], &store, &PopulateOptions::default()).unwrap();
    assert_eq!(stats.requests, 0);
    assert_eq!(server.request_count(), before);
    assert_eq!(again, store);
}

#[test]
fn populate_only_requests_missing_keys() {
    let ds = dataset(30);
    let mut existing = EmbeddingStore::new();
    existing.add_space(EmbeddingSpace::new("clip-en", 8, true).unwrap()).unwrap();
    for inst in &ds.instances {
        existing
            .insert("clip-en", Kind::Text, &inst.full_phrase, vectors::unit(8, 0))
            .unwrap();
    }
    let server = StubServer::start(embedding_handler(8)).unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    let (store, stats) = populate_store(&client, &ds, &[base()], &[], &existing, &PopulateOptions::default()).unwrap();
    assert_eq!(stats.requests, 2);
    assert!(server.requests().iter().all(|r| r.kind == Kind::Image));
    // Existing entries are left exactly as they were.
    assert_eq!(
        store.get("clip-en", Kind::Text, &ds.instances[0].full_phrase),
        Some(&vectors::unit(8, 0)[..])
    );
}

#[test]
fn populate_failure_leaves_store_untouched() {
    let ds = dataset(3);
    let client = EmbedClient::new(dead_endpoint(), fast_policy());
    let existing = EmbeddingStore::new();
    let err = populate_store(&client, &ds, &[base()], &[], &existing, &PopulateOptions::default()).unwrap_err();
    assert!(err.is_transport());
    match err {
        ClientError::Populate { succeeded, total, .. } => {
            assert_eq!(succeeded, 0);
            assert_eq!(total, 2);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(existing.is_empty());
}

#[test]
fn populate_respects_raw_spaces() {
    let ds = dataset(1);
    let server = StubServer::start(|req: &EmbedRequest| {
        StubReply::json(&EmbedResponse {
            space: req.space.clone(),
            dim: 2,
            vectors: req
                .items
                .iter()
                .map(|i| EmbedVector { key: i.key.clone(), vec: vec![3.0, 4.0] })
                .collect(),
        })
    })
    .unwrap();
    let client = EmbedClient::new(server.url(), fast_policy());
    let spec = SystemSpec::new("feat", "inception-feat", QuerySource::Phrase);
    let mut opts = PopulateOptions::default();
    // Normalized by default: [3, 4] is rejected.
    assert!(populate_store(&client, &ds, std::slice::from_ref(&spec), &[], &EmbeddingStore::new(), &opts).is_err());
    opts.normalized.insert("inception-feat".into(), false);
    let (store, _) = populate_store(&client, &ds, &[spec], &[], &EmbeddingStore::new(), &opts).unwrap();
    assert!(!store.space("inception-feat").unwrap().normalized);
}

mod vectors {
    pub fn unit(dim: usize, axis: usize) -> Vec<f32> {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        v
    }
}
