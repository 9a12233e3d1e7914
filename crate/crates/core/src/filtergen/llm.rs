use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::FilterMode;
use crate::transport::{token_from_env, HttpTransport, TransportConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("LLM backend unavailable: {0}")]
    Unavailable(String),
}

/// One filter-generation call.
#[derive(Debug, Clone, Copy)]
pub struct LlmRequest<'a> {
    pub mode: FilterMode,
    pub question: &'a str,
    /// Fully rendered prompt.
    pub prompt: &'a str,
}

pub trait LlmBackend: Send + Sync {
    /// `remote-http` or `scripted`.
    fn kind(&self) -> &'static str;

    /// Model label used in reports.
    fn model(&self) -> &str;

    fn complete(&self, request: &LlmRequest<'_>) -> Result<String, BackendError>;
}

/// Injected failure for a scripted call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    /// Replies with text that is not JSON.
    Malformed,
    /// Replies with a well-formed filter on a misspelled field.
    WrongField,
    /// The call fails at the transport level.
    Unavailable,
}

impl Fault {
    pub const MALFORMED_TEXT: &'static str = "not json";
    pub const WRONG_FIELD_TEXT: &'static str = r#"{"protien, totl": {"$gt": 12}}"#;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedResponse {
    /// Reply text, verbatim.
    Text(String),
    /// A JSON document, replied in compact form.
    Document {
        document: Value,
    },
    Fault {
        fault: Fault,
    },
}

impl ScriptedResponse {
    pub fn document(doc: Value) -> Self {
        ScriptedResponse::Document { document: doc }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    model: Option<String>,
    /// Question → replies, indexed by attempt (strict first, loose second).
    responses: HashMap<String, Vec<ScriptedResponse>>,
    /// Replies for questions not listed.
    #[serde(default)]
    default: Option<Vec<ScriptedResponse>>,
}

/// Deterministic test double: replies are looked up by question and attempt.
///
/// Script file format:
///
/// ```text
/// {
///   "model": "scripted-perfect",
///   "responses": {
///     "Which foods have more than 12 g of protein?": ["{\"protein, total\": {\"$gt\": 12}}"],
///     "Which cheeses are low in salt?": [{"fault": "malformed"}, {"document": {"food group": "Cheeses"}}]
///   },
///   "default": [{"fault": "unavailable"}]
/// }
/// ```
///
/// Entry 0 answers the strict attempt and entry 1 the loose attempt. A
/// missing entry behaves like an unavailable backend.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    model: String,
    responses: HashMap<String, Vec<ScriptedResponse>>,
    default: Option<Vec<ScriptedResponse>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("reading script {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing script: {0}")]
    Parse(#[from] serde_json::Error),
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::new("scripted")
    }
}

impl ScriptedBackend {
    pub fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            responses: HashMap::new(),
            default: None,
        }
    }

    pub fn with(mut self, question: impl Into<String>, replies: Vec<ScriptedResponse>) -> Self {
        self.responses.insert(question.into(), replies);
        self
    }

    pub fn with_default(mut self, replies: Vec<ScriptedResponse>) -> Self {
        self.default = Some(replies);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, ScriptError> {
        let file: ScriptFile = serde_json::from_str(text)?;
        Ok(Self {
            model: file.model.unwrap_or_else(|| "scripted".into()),
            responses: file.responses,
            default: file.default,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ScriptError> {
        let text = fs::read_to_string(path).map_err(|source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn questions(&self) -> impl Iterator<Item = &str> {
        self.responses.keys().map(String::as_str)
    }
}

impl LlmBackend for ScriptedBackend {
    fn kind(&self) -> &'static str {
        "scripted"
    }

    fn model(&self) -> &str {
        &self.model
    }

    fn complete(&self, request: &LlmRequest<'_>) -> Result<String, BackendError> {
        let index = match request.mode {
            FilterMode::Strict => 0,
            FilterMode::Loose => 1,
        };
        let replies = self
            .responses
            .get(request.question)
            .or(self.default.as_ref())
            .ok_or_else(|| BackendError::Unavailable(format!("no script for {:?}", request.question)))?;
        match replies.get(index) {
            Some(ScriptedResponse::Text(t)) => Ok(t.clone()),
            Some(ScriptedResponse::Document { document }) => Ok(document.to_string()),
            Some(ScriptedResponse::Fault { fault }) => match fault {
                Fault::Malformed => Ok(Fault::MALFORMED_TEXT.into()),
                Fault::WrongField => Ok(Fault::WRONG_FIELD_TEXT.into()),
                Fault::Unavailable => Err(BackendError::Unavailable("scripted fault".into())),
            },
            None => Err(BackendError::Unavailable(format!(
                "no scripted reply #{index} for {:?}",
                request.question
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteLlmConfig {
    /// Chat-completions URL, e.g. `https://api.openai.com/v1/chat/completions`.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    #[serde(default = "default_token_env")]
    pub token_env: Option<String>,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

fn default_token_env() -> Option<String> {
    Some("LLM_API_TOKEN".into())
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_retries() -> u32 {
    2
}

fn default_in_flight() -> usize {
    4
}

impl RemoteLlmConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            token_env: default_token_env(),
            temperature: 0.0,
            timeout_secs: default_timeout_secs(),
            max_retries: default_retries(),
            max_in_flight: default_in_flight(),
        }
    }
}

/// Chat-completion client:
///
/// ```text
/// POST <endpoint>
/// {"model": "...", "messages": [{"role": "user", "content": "<prompt>"}], "temperature": 0}
/// -> {"choices": [{"message": {"content": "<reply>"}}]}
/// ```
pub struct RemoteLlm {
    config: RemoteLlmConfig,
    transport: HttpTransport,
}

impl RemoteLlm {
    pub fn new(config: RemoteLlmConfig) -> Self {
        let transport = HttpTransport::new(TransportConfig {
            timeout: Duration::from_secs(config.timeout_secs),
            max_retries: config.max_retries,
            max_in_flight: config.max_in_flight,
            ..TransportConfig::default()
        });
        Self { config, transport }
    }
}

impl LlmBackend for RemoteLlm {
    fn kind(&self) -> &'static str {
        "remote-http"
    }

    fn model(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, request: &LlmRequest<'_>) -> Result<String, BackendError> {
        let token = token_from_env(self.config.token_env.as_deref()).map_err(|e| BackendError::Unavailable(e.0))?;
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.config.temperature,
        });
        let reply = self
            .transport
            .post_json(&self.config.endpoint, token.as_deref(), &body)
            .map_err(|e| BackendError::Unavailable(e.0))?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| BackendError::Unavailable("response has no choices[0].message.content".into()))
    }
}
