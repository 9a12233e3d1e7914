use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{generate_loose, generate_strict, FilterAttempt, GenerationError, LlmBackend, PromptContext, PromptSpec};
use crate::embeddings::{embed, EmbedError, Embedder, Embedding};
use crate::filter::{FieldSchema, FilterExpr, SchemaConflict};
use crate::store::{RetrievalResult, StoreError, Tier, VectorStore, DEFAULT_LIMIT};

/// Error recorded for a failed tier. `kind` is a filter error kind
/// (`SyntaxError`, `UnknownField`, `TypeMismatch`, `StructureError`) or
/// `BackendUnavailable`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptError {
    pub kind: String,
    pub path: String,
    pub message: String,
}

impl From<&GenerationError> for AttemptError {
    fn from(e: &GenerationError) -> Self {
        match e {
            GenerationError::Filter(f) => AttemptError {
                kind: f.kind.to_string(),
                path: f.path.clone(),
                message: f.message.clone(),
            },
            GenerationError::Backend(b) => AttemptError {
                kind: "BackendUnavailable".into(),
                path: String::new(),
                message: b.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub tier: Tier,
    /// LLM reply, verbatim. Always `None` for the semantic tier.
    pub raw_response: Option<String>,
    pub error: Option<AttemptError>,
    pub duration_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutcome {
    pub result: RetrievalResult,
    /// A prefix of Strict, Loose, Semantic; the last one produced `result`.
    pub attempts: Vec<Attempt>,
}

#[derive(Debug, thiserror::Error)]
pub enum CascadeError {
    #[error("cannot embed the question: {0}")]
    EmbeddingUnavailable(#[from] EmbedError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Schema(#[from] SchemaConflict),
    #[error("embedder produces {embedder}-dimensional vectors but the store holds {store}")]
    DimensionMismatch { store: usize, embedder: usize },
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn record(tier: Tier, attempt: &FilterAttempt, start: Instant) -> Attempt {
    Attempt {
        tier,
        raw_response: attempt.raw_response.clone(),
        error: attempt.result.as_ref().err().map(AttemptError::from),
        duration_ms: elapsed_ms(start),
    }
}

fn embed_question(embedder: &dyn Embedder, question: &str) -> Result<Embedding, EmbedError> {
    embed(embedder, &[question.to_string()])?
        .pop()
        .ok_or_else(|| EmbedError::BackendUnavailable("no vector returned".into()))
}

/// Runs the strict → loose → semantic cascade for one question.
///
/// Strict success answers with `query_filtered` and never embeds the
/// question. Otherwise the question is embedded once and searched with the
/// loose filter, or with no prefilter if loose generation failed too.
/// Only an embedding failure (or an invalid threshold) is an error.
#[allow(clippy::too_many_arguments)]
pub fn retrieve_with_cascade(
    question: &str,
    store: &VectorStore,
    ctx: &PromptContext<'_>,
    llm: &dyn LlmBackend,
    embedder: &dyn Embedder,
    prompt: &PromptSpec,
    threshold: f64,
    limit: usize,
) -> Result<CascadeOutcome, CascadeError> {
    let mut attempts = Vec::with_capacity(3);

    let start = Instant::now();
    let strict = generate_strict(question, ctx, llm, prompt);
    attempts.push(record(Tier::Strict, &strict, start));
    if let Ok(filter) = &strict.result {
        return Ok(CascadeOutcome {
            result: store.query_filtered(filter, limit),
            attempts,
        });
    }

    let start = Instant::now();
    let loose = generate_loose(question, ctx, llm, prompt);
    if let Ok(filter) = &loose.result {
        let query = embed_question(embedder, question)?;
        let result = store.query_semantic(&query, filter, threshold, limit)?;
        attempts.push(record(Tier::Loose, &loose, start));
        return Ok(CascadeOutcome { result, attempts });
    }
    attempts.push(record(Tier::Loose, &loose, start));

    let start = Instant::now();
    let query = embed_question(embedder, question)?;
    let result = store.query_semantic(&query, &FilterExpr::MatchAll, threshold, limit)?;
    attempts.push(Attempt {
        tier: Tier::Semantic,
        raw_response: None,
        error: None,
        duration_ms: elapsed_ms(start),
    });
    Ok(CascadeOutcome { result, attempts })
}

/// A frozen store plus the backends and settings needed to answer
/// questions. Cheap to share across threads.
#[derive(Clone)]
pub struct RetrievalEngine {
    store: Arc<VectorStore>,
    schema: FieldSchema,
    groups: BTreeSet<String>,
    llm: Arc<dyn LlmBackend>,
    embedder: Arc<dyn Embedder>,
    prompt: PromptSpec,
    threshold: f64,
    limit: usize,
}

impl RetrievalEngine {
    /// Fails if the store's metadata has conflicting field kinds or the
    /// embedder's dimension differs from the store's. The threshold
    /// defaults to 1.0.
    pub fn new(
        store: Arc<VectorStore>,
        llm: Arc<dyn LlmBackend>,
        embedder: Arc<dyn Embedder>,
    ) -> Result<Self, CascadeError> {
        if embedder.dimension() != store.dimension() {
            return Err(CascadeError::DimensionMismatch {
                store: store.dimension(),
                embedder: embedder.dimension(),
            });
        }
        Ok(Self {
            schema: store.schema()?,
            groups: store.food_groups(),
            store,
            llm,
            embedder,
            prompt: PromptSpec::default(),
            threshold: 1.0,
            limit: DEFAULT_LIMIT,
        })
    }

    pub fn with_prompt(mut self, prompt: PromptSpec) -> Self {
        self.prompt = prompt;
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }

    pub fn schema(&self) -> &FieldSchema {
        &self.schema
    }

    pub fn food_groups(&self) -> &BTreeSet<String> {
        &self.groups
    }

    pub fn llm(&self) -> &dyn LlmBackend {
        self.llm.as_ref()
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn retrieve(&self, question: &str) -> Result<CascadeOutcome, CascadeError> {
        self.retrieve_with_threshold(question, self.threshold)
    }

    pub fn retrieve_with_threshold(&self, question: &str, threshold: f64) -> Result<CascadeOutcome, CascadeError> {
        let ctx = PromptContext {
            schema: &self.schema,
            food_groups: &self.groups,
        };
        retrieve_with_cascade(
            question,
            &self.store,
            &ctx,
            self.llm.as_ref(),
            self.embedder.as_ref(),
            &self.prompt,
            threshold,
            self.limit,
        )
    }
}
