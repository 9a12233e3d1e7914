use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{EmbedError, Embedder, Embedding};
use crate::transport::{token_from_env, HttpTransport, TransportConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteEmbedderConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    /// Environment variable holding the bearer token; no auth header when unset.
    #[serde(default)]
    pub token_env: Option<String>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
}

fn default_dimension() -> usize {
    3072
}

fn default_batch() -> usize {
    64
}

/// Embedding API client speaking the OpenAI-style embeddings protocol:
///
/// ```text
/// POST <endpoint>
/// {"model": "...", "input": ["text", ...], "dimensions": 3072}
/// -> {"data": [{"index": 0, "embedding": [0.1, ...]}, ...]}
/// ```
pub struct RemoteEmbedder {
    config: RemoteEmbedderConfig,
    transport: HttpTransport,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    #[serde(default)]
    index: Option<usize>,
    embedding: Vec<f64>,
}

impl RemoteEmbedder {
    pub fn new(config: RemoteEmbedderConfig, transport: TransportConfig) -> Self {
        Self {
            config,
            transport: HttpTransport::new(transport),
        }
    }

    fn embed_chunk(&self, texts: &[String], token: Option<&str>) -> Result<Vec<Embedding>, EmbedError> {
        let body = json!({
            "model": self.config.model,
            "input": texts,
            "dimensions": self.config.dimension,
        });
        let value = self
            .transport
            .post_json(&self.config.endpoint, token, &body)
            .map_err(|e| EmbedError::BackendUnavailable(e.0))?;
        let mut response: EmbeddingResponse = serde_json::from_value(value)
            .map_err(|e| EmbedError::BackendUnavailable(format!("unexpected response shape: {e}")))?;
        if response.data.iter().all(|d| d.index.is_some()) {
            response.data.sort_by_key(|d| d.index);
        }
        Ok(response.data.into_iter().map(|d| Embedding::new(d.embedding)).collect())
    }
}

impl Embedder for RemoteEmbedder {
    fn kind(&self) -> &'static str {
        "remote"
    }

    fn describe(&self) -> String {
        format!("remote:{}:dim={}", self.config.model, self.config.dimension)
    }

    fn dimension(&self) -> usize {
        self.config.dimension
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbedError> {
        let token =
            token_from_env(self.config.token_env.as_deref()).map_err(|e| EmbedError::BackendUnavailable(e.0))?;
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.config.batch_size.max(1)) {
            let vectors = self.embed_chunk(chunk, token.as_deref())?;
            if vectors.len() != chunk.len() {
                return Err(EmbedError::BackendUnavailable(format!(
                    "expected {} embeddings, got {}",
                    chunk.len(),
                    vectors.len()
                )));
            }
            out.extend(vectors);
        }
        Ok(out)
    }
}
