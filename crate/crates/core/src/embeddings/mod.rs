//! Embedding backends, cosine distance and threshold calibration.

mod calibrate;
mod hashing;
mod remote;

use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate, DistanceStats, Sampling, DEFAULT_EXACT_LIMIT, DEFAULT_SAMPLE_PAIRS};
pub use hashing::HashEmbedder;
pub use remote::{RemoteEmbedder, RemoteEmbedderConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("need at least 2 vectors to calibrate, got {0}")]
    TooFewVectors(usize),
}

/// A dense embedding. Distances use the raw values; nothing is normalized
/// on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// `1 - a·b / (|a| |b|)`, clamped to `[0, 2]`.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64, EmbedError> {
    if a.dimension() != b.dimension() {
        return Err(EmbedError::DimensionMismatch {
            expected: a.dimension(),
            found: b.dimension(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(EmbedError::ZeroNorm);
    }
    Ok(distance_with_norms(a.values(), na, b.values(), nb))
}

pub(crate) fn distance_with_norms(a: &[f64], na: f64, b: &[f64], nb: f64) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
}

/// A text embedding model.
pub trait Embedder: Send + Sync {
    /// Short backend label, e.g. `hash` or `remote`.
    fn kind(&self) -> &'static str;

    /// Identifies the model configuration; stored in snapshots so queries
    /// are embedded the same way the corpus was.
    fn describe(&self) -> String;

    fn dimension(&self) -> usize;

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Embedding>, EmbedError>;
}

/// Embeds `texts`, checking that the backend returned one finite vector of
/// the configured dimension per input.
pub fn embed(backend: &dyn Embedder, texts: &[String]) -> Result<Vec<Embedding>, EmbedError> {
    if texts.is_empty() {
        return Ok(Vec::new());
    }
    let vectors = backend.embed_batch(texts)?;
    if vectors.len() != texts.len() {
        return Err(EmbedError::BackendUnavailable(format!(
            "backend returned {} vectors for {} texts",
            vectors.len(),
            texts.len()
        )));
    }
    for v in &vectors {
        if v.dimension() != backend.dimension() {
            return Err(EmbedError::DimensionMismatch {
                expected: backend.dimension(),
                found: v.dimension(),
            });
        }
        if !v.is_finite() {
            return Err(EmbedError::BackendUnavailable(
                "backend returned non-finite values".into(),
            ));
        }
    }
    Ok(vectors)
}
