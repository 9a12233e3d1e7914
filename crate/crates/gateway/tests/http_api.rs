mod common;

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{header, Method, Request, StatusCode};
use common::{engine, ingested, PROTEIN_Q};
use nutrifilter::app::{self, QueryResponse};
use nutrifilter::http::{router, AppState};
use nutrifilter_core::corpus::{food_groups, ingest_path};
use nutrifilter_core::embeddings::{EmbedError, Embedder, Embedding, HashEmbedder};
use nutrifilter_core::filtergen::{Fault, RetrievalEngine, ScriptedBackend, ScriptedResponse};
use nutrifilter_core::store::Tier;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(state: AppState, method: Method, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header(header::CONTENT_TYPE, "application/json");
    }
    let req = req.body(Body::from(body.unwrap_or_default().to_string())).unwrap();
    let resp = router(state).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn ready() -> (tempfile::TempDir, AppState) {
    let (dir, _, config) = ingested();
    (dir, AppState::new(engine(&config)))
}

#[tokio::test]
async fn health_reports_store_and_backends() {
    let (_dir, state) = ready();
    let (status, body) = call(state, Method::GET, "/api/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["store_size"], 213);
    assert_eq!(body["backend_kinds"], json!({"embedding": "hash", "llm": "scripted"}));
}

#[tokio::test]
async fn without_snapshot_everything_is_503() {
    for (method, uri, body) in [
        (Method::GET, "/api/health", None),
        (Method::GET, "/api/groups", None),
        (Method::GET, "/api/schema", None),
        (Method::POST, "/api/query", Some(r#"{"question": "x"}"#)),
    ] {
        let (status, _) = call(AppState::default(), method, uri, body).await;
        assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE, "{uri}");
    }
}

#[tokio::test]
async fn groups_and_schema() {
    let (_dir, state) = ready();
    let (status, groups) = call(state.clone(), Method::GET, "/api/groups", None).await;
    assert_eq!(status, StatusCode::OK);
    let groups: Vec<String> = serde_json::from_value(groups).unwrap();
    let items = ingest_path(&common::core_data("fixture_corpus.jsonl")).unwrap();
    let expected: Vec<String> = food_groups(&items).into_iter().collect();
    assert!(expected.len() >= 8);
    assert_eq!(groups, expected);

    let (status, schema) = call(state, Method::GET, "/api/schema", None).await;
    assert_eq!(status, StatusCode::OK);
    let fields = schema.as_array().unwrap();
    assert!(fields.contains(&json!({"name": "food group", "kind": "categorical"})));
    assert!(fields.contains(&json!({"name": "protein, total", "kind": "numeric"})));
}

#[tokio::test]
async fn strict_query() {
    let (_dir, state) = ready();
    let body = json!({ "question": PROTEIN_Q }).to_string();
    let (status, value) = call(state, Method::POST, "/api/query", Some(&body)).await;
    assert_eq!(status, StatusCode::OK);
    let resp: QueryResponse = serde_json::from_value(value).unwrap();
    assert_eq!(resp.tier, Tier::Strict);
    assert_eq!(resp.filter_document, json!({"protein, total": {"$gt": 12}}));
    assert_eq!(resp.threshold_used, None);
    assert_eq!(resp.attempts.len(), 1);
    assert!(resp.attempts[0].error.is_none());
    let provolon = resp.items.iter().find(|i| i.id == "fcdb-0211").unwrap();
    assert_eq!(provolon.name, "Cheese Provolon");
    assert_eq!(provolon.food_group, "Cheeses");
    assert_eq!(provolon.distance, None);
    assert!(!provolon.components.contains_key("food group"));
    assert!(resp
        .items
        .iter()
        .all(|i| i.components["protein, total"].as_f64().unwrap() > 12.0));
}

#[tokio::test]
async fn fallback_query_reports_failed_attempts() {
    let (_dir, _, config) = ingested();
    let base = app::open_store(&config).unwrap();
    let backend = ScriptedBackend::new("faulty").with_default(vec![
        ScriptedResponse::Fault {
            fault: Fault::WrongField,
        },
        ScriptedResponse::Fault {
            fault: Fault::Unavailable,
        },
    ]);
    let engine = RetrievalEngine::new(base.store, Arc::new(backend), base.embedder)
        .unwrap()
        .with_threshold(0.95);
    let (status, value) = call(
        AppState::new(engine),
        Method::POST,
        "/api/query",
        Some(r#"{"question":"salty things"}"#),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(value["tier"], "Semantic");
    assert_eq!(value["filter_document"], json!({}));
    assert_eq!(value["threshold_used"], 0.95);
    let attempts = value["attempts"].as_array().unwrap();
    assert_eq!(attempts.len(), 3);
    assert!(attempts[0]["error"].as_str().unwrap().starts_with("UnknownField"));
    assert!(attempts[1]["error"].as_str().unwrap().starts_with("BackendUnavailable"));
    assert!(attempts[2]["error"].is_null());
    for item in value["items"].as_array().unwrap() {
        assert!(item["distance"].as_f64().unwrap() <= 0.95);
    }
}

#[tokio::test]
async fn identical_requests_give_identical_bodies() {
    let (_dir, state) = ready();
    for question in [PROTEIN_Q, "something with no script"] {
        let body = json!({ "question": question }).to_string();
        let (_, mut a) = call(state.clone(), Method::POST, "/api/query", Some(&body)).await;
        let (_, mut b) = call(state.clone(), Method::POST, "/api/query", Some(&body)).await;
        a["duration_ms"] = Value::Null;
        b["duration_ms"] = Value::Null;
        assert_eq!(a.to_string(), b.to_string());
    }
}

#[tokio::test]
async fn non_ascii_text_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("sl.jsonl");
    let line = |id: &str, name: &str, protein: f64| {
        json!({"id": id, "name": name, "food_group": "Jedi iz testa", "kind": "generic",
               "components": {"protein, total": {"value": protein, "unit": "g"}}})
        .to_string()
    };
    std::fs::write(
        &corpus,
        format!(
            "{}\n{}\n",
            line("sl-1", "Štruklji s skuto", 9.5),
            line("sl-2", "Žlikrofi", 4.0)
        ),
    )
    .unwrap();
    let snapshot = dir.path().join("sl.snapshot.jsonl");
    let embedder = HashEmbedder::new(64, 0);
    app::ingest_to_snapshot(&corpus, &snapshot, &embedder).unwrap();
    let (store, _) = app::load_snapshot(&snapshot).unwrap();

    let question = "Katere jedi iz testa imajo več kot 5 g beljakovin?";
    let backend = ScriptedBackend::new("sl").with(
        question,
        vec![ScriptedResponse::document(json!({"$and": [
            {"food group": "Jedi iz testa"}, {"protein, total": {"$gt": 5}}
        ]}))],
    );
    let engine = RetrievalEngine::new(Arc::new(store), Arc::new(backend), Arc::new(embedder)).unwrap();
    let body = json!({ "question": question }).to_string();
    let (status, value) = call(AppState::new(engine), Method::POST, "/api/query", Some(&body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(value["tier"], "Strict");
    assert_eq!(value["items"].as_array().unwrap().len(), 1);
    assert_eq!(value["items"][0]["name"], "Štruklji s skuto");
    assert_eq!(value["items"][0]["food_group"], "Jedi iz testa");
}

#[tokio::test]
async fn malformed_requests_are_400() {
    let (_dir, state) = ready();
    for body in ["not json", r#"{"q": "x"}"#, r#"{"question": "   "}"#] {
        let (status, value) = call(state.clone(), Method::POST, "/api/query", Some(body)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
        assert!(value["error"].is_string());
    }
}

struct Down;

impl Embedder for Down {
    fn kind(&self) -> &'static str {
        "down"
    }
    fn describe(&self) -> String {
        "down".into()
    }
    fn dimension(&self) -> usize {
        HashEmbedder::DEFAULT_DIMENSION
    }
    fn embed_batch(&self, _: &[String]) -> Result<Vec<Embedding>, EmbedError> {
        Err(EmbedError::BackendUnavailable("offline".into()))
    }
}

#[tokio::test]
async fn embedding_outage_is_502() {
    let (_dir, _, config) = ingested();
    let base = app::open_store(&config).unwrap();
    let llm = app::configured_llm(&config).unwrap();
    let engine = RetrievalEngine::new(base.store, llm, Arc::new(Down)).unwrap();
    let state = AppState::new(engine);
    let (status, value) = call(
        state.clone(),
        Method::POST,
        "/api/query",
        Some(r#"{"question":"anything"}"#),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(value["error"].as_str().unwrap().contains("offline"));
    // Strict answers never touch the embedder.
    let body = json!({ "question": PROTEIN_Q }).to_string();
    let (status, _) = call(state, Method::POST, "/api/query", Some(&body)).await;
    assert_eq!(status, StatusCode::OK);
}
