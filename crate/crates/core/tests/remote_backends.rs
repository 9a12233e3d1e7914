use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use nutrifilter_core::embeddings::{embed, EmbedError, Embedder, RemoteEmbedder, RemoteEmbedderConfig};
use nutrifilter_core::filtergen::{BackendError, FilterMode, LlmBackend, LlmRequest, RemoteLlm, RemoteLlmConfig};
use nutrifilter_core::transport::TransportConfig;
use serde_json::{json, Value};

#[derive(Debug, Clone)]
struct Recorded {
    authorization: Option<String>,
    body: Value,
}

/// Serves canned `(status, body)` replies in order, one per connection,
/// repeating the last one when the script runs out.
struct MockServer {
    url: String,
    requests: Arc<Mutex<Vec<Recorded>>>,
}

impl MockServer {
    fn start(replies: Vec<(u16, Value)>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = requests.clone();
        thread::spawn(move || {
            for (n, stream) in listener.incoming().enumerate() {
                let Ok(stream) = stream else { break };
                let (status, body) = replies[n.min(replies.len() - 1)].clone();
                handle(stream, status, &body, &log);
            }
        });
        Self { url, requests }
    }

    fn requests(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }
}

fn handle(stream: TcpStream, status: u16, body: &Value, log: &Mutex<Vec<Recorded>>) -> Option<()> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut length = 0;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).ok()?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            match name.to_ascii_lowercase().as_str() {
                "content-length" => length = value.trim().parse().ok()?,
                "authorization" => authorization = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut buf = vec![0; length];
    reader.read_exact(&mut buf).ok()?;
    log.lock().unwrap().push(Recorded {
        authorization,
        body: serde_json::from_slice(&buf).ok()?,
    });
    let text = body.to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    )
    .ok()
}

fn chat(content: &str) -> Value {
    json!({"choices": [{"message": {"role": "assistant", "content": content}}]})
}

fn llm(url: &str, token_env: Option<&str>, retries: u32) -> RemoteLlm {
    let mut config = RemoteLlmConfig::new(url, "gpt-test");
    config.token_env = token_env.map(String::from);
    config.max_retries = retries;
    RemoteLlm::new(config)
}

fn ask(backend: &RemoteLlm) -> Result<String, BackendError> {
    backend.complete(&LlmRequest {
        mode: FilterMode::Strict,
        question: "q",
        prompt: "the prompt",
    })
}

#[test]
fn chat_completion_round_trip() {
    std::env::set_var("NF_TEST_LLM_TOKEN", "sekrit");
    let server = MockServer::start(vec![(200, chat(r#"{"salt": {"$lt": 1}}"#))]);
    let reply = ask(&llm(&server.url, Some("NF_TEST_LLM_TOKEN"), 0)).unwrap();
    assert_eq!(reply, r#"{"salt": {"$lt": 1}}"#);
    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(reqs[0].authorization.as_deref(), Some("Bearer sekrit"));
    assert_eq!(reqs[0].body["model"], "gpt-test");
    assert_eq!(reqs[0].body["temperature"], 0.0);
    assert_eq!(reqs[0].body["messages"][0]["content"], "the prompt");
}

#[test]
fn server_errors_are_retried() {
    let server = MockServer::start(vec![(503, json!({})), (200, chat("ok"))]);
    assert_eq!(ask(&llm(&server.url, None, 2)).unwrap(), "ok");
    assert_eq!(server.requests().len(), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let server = MockServer::start(vec![(400, json!({"error": "bad"}))]);
    let err = ask(&llm(&server.url, None, 3)).unwrap_err();
    assert!(err.to_string().contains("400"), "{err}");
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn missing_content_or_token_is_unavailable() {
    let server = MockServer::start(vec![(200, json!({"choices": []}))]);
    assert!(matches!(
        ask(&llm(&server.url, None, 0)),
        Err(BackendError::Unavailable(_))
    ));
    let err = ask(&llm(&server.url, Some("NF_TEST_TOKEN_NEVER_SET"), 0)).unwrap_err();
    assert!(err.to_string().contains("NF_TEST_TOKEN_NEVER_SET"));
}

#[test]
fn unreachable_endpoint_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}/v1");
    assert!(matches!(ask(&llm(&url, None, 0)), Err(BackendError::Unavailable(_))));
}

fn embedder(url: &str, dimension: usize, batch_size: usize) -> RemoteEmbedder {
    RemoteEmbedder::new(
        RemoteEmbedderConfig {
            endpoint: url.into(),
            model: "embed-test".into(),
            dimension,
            token_env: None,
            batch_size,
        },
        TransportConfig {
            max_retries: 0,
            ..TransportConfig::default()
        },
    )
}

#[test]
fn embeddings_are_batched_and_reordered_by_index() {
    let batch = json!({"data": [
        {"index": 1, "embedding": [0.0, 1.0]},
        {"index": 0, "embedding": [1.0, 0.0]}
    ]});
    let server = MockServer::start(vec![(200, batch)]);
    let e = embedder(&server.url, 2, 2);
    let texts: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
    let out = embed(&e, &texts).unwrap();
    assert_eq!(out.len(), 4);
    assert_eq!(out[0].values(), &[1.0, 0.0]);
    assert_eq!(out[1].values(), &[0.0, 1.0]);
    let reqs = server.requests();
    assert_eq!(reqs.len(), 2);
    assert_eq!(reqs[0].body["input"], json!(["a", "b"]));
    assert_eq!(reqs[1].body["input"], json!(["c", "d"]));
    assert_eq!(reqs[0].body["dimensions"], 2);
    assert_eq!(e.describe(), "remote:embed-test:dim=2");
}

#[test]
fn wrong_sized_embedding_responses_are_rejected() {
    let server = MockServer::start(vec![(200, json!({"data": [{"embedding": [1.0, 0.0, 0.0]}]}))]);
    let err = embed(&embedder(&server.url, 2, 8), &["a".to_string()]).unwrap_err();
    assert!(
        matches!(err, EmbedError::DimensionMismatch { expected: 2, found: 3 }),
        "{err}"
    );

    let server = MockServer::start(vec![(200, json!({"data": []}))]);
    let err = embed(&embedder(&server.url, 2, 8), &["a".to_string()]).unwrap_err();
    assert!(matches!(err, EmbedError::BackendUnavailable(_)), "{err}");
}
