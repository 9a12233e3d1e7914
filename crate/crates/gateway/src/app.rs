//! Builds stores, backends and engines from an [`AppConfig`].

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use nutrifilter_core::corpus::{ingest_path, CorpusError};
use nutrifilter_core::embeddings::{
    calibrate, DistanceStats, EmbedError, Embedder, Embedding, HashEmbedder, RemoteEmbedder, Sampling,
};
use nutrifilter_core::filter::{FieldKind, FOOD_GROUP};
use nutrifilter_core::filtergen::{
    Attempt, CascadeError, CascadeOutcome, LlmBackend, PromptSpec, RemoteLlm, RetrievalEngine, ScriptedBackend,
};
use nutrifilter_core::store::{build_entries, SnapshotHeader, Tier, VectorStore};
use nutrifilter_core::transport::TransportConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{AppConfig, ConfigError, EmbeddingConfig, LlmConfig, ThresholdSetting};

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("backend error: {0}")]
    Backend(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Config(_) => 1,
            AppError::Data(_) => 2,
            AppError::Backend(_) => 3,
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<CorpusError> for AppError {
    fn from(e: CorpusError) -> Self {
        AppError::Data(e.to_string())
    }
}

impl From<EmbedError> for AppError {
    fn from(e: EmbedError) -> Self {
        match e {
            EmbedError::BackendUnavailable(_) => AppError::Backend(e.to_string()),
            _ => AppError::Data(e.to_string()),
        }
    }
}

impl From<CascadeError> for AppError {
    fn from(e: CascadeError) -> Self {
        match e {
            CascadeError::EmbeddingUnavailable(_) => AppError::Backend(e.to_string()),
            _ => AppError::Data(e.to_string()),
        }
    }
}

pub fn build_embedder(config: &EmbeddingConfig) -> Arc<dyn Embedder> {
    match config {
        EmbeddingConfig::Hash { dimension, seed } => Arc::new(HashEmbedder::new(*dimension, *seed)),
        EmbeddingConfig::Remote {
            timeout_secs,
            max_retries,
            max_in_flight,
            ..
        } => {
            let transport = TransportConfig {
                timeout: Duration::from_secs(*timeout_secs),
                max_retries: *max_retries,
                max_in_flight: *max_in_flight,
                ..TransportConfig::default()
            };
            Arc::new(RemoteEmbedder::new(
                config.remote_config().expect("remote variant"),
                transport,
            ))
        }
    }
}

pub fn build_llm(config: &LlmConfig) -> Result<Arc<dyn LlmBackend>, AppError> {
    match config {
        LlmConfig::Scripted { script } => Ok(Arc::new(load_script(script)?)),
        LlmConfig::Remote { .. } => Ok(Arc::new(RemoteLlm::new(
            config.remote_config().expect("remote variant"),
        ))),
    }
}

pub fn load_script(path: &Path) -> Result<ScriptedBackend, AppError> {
    ScriptedBackend::from_path(path).map_err(|e| AppError::Config(e.to_string()))
}

pub fn build_prompts(config: &AppConfig) -> Result<PromptSpec, AppError> {
    let defaults = PromptSpec::default();
    let read = |p: &Option<PathBuf>, fallback: &str| -> Result<String, AppError> {
        match p {
            Some(path) => fs::read_to_string(path).map_err(|e| AppError::Config(format!("{}: {e}", path.display()))),
            None => Ok(fallback.to_string()),
        }
    };
    let strict = read(
        &config.prompts.strict,
        defaults.template(nutrifilter_core::filtergen::FilterMode::Strict),
    )?;
    let loose = read(
        &config.prompts.loose,
        defaults.template(nutrifilter_core::filtergen::FilterMode::Loose),
    )?;
    PromptSpec::new(strict, loose).map_err(|e| AppError::Config(e.to_string()))
}

/// Reads the corpus, embeds every item and writes a snapshot to `out`.
/// The file is replaced atomically. Returns the number of items.
pub fn ingest_to_snapshot(corpus: &Path, out: &Path, embedder: &dyn Embedder) -> Result<usize, AppError> {
    let items = ingest_path(corpus)?;
    let entries = build_entries(&items, embedder)?;
    let mut store = VectorStore::new(embedder.dimension());
    store.upsert(entries).map_err(|e| AppError::Data(e.to_string()))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| AppError::Data(format!("{}: {e}", dir.display())))?;
    }
    let tmp = out.with_extension("tmp");
    let write = || -> Result<(), Box<dyn std::error::Error>> {
        let mut w = BufWriter::new(File::create(&tmp)?);
        store.write_snapshot(&embedder.describe(), &mut w)?;
        w.flush()?;
        fs::rename(&tmp, out)?;
        Ok(())
    };
    write().map_err(|e| AppError::Data(format!("writing {}: {e}", out.display())))?;
    Ok(store.len())
}

pub fn load_snapshot(path: &Path) -> Result<(VectorStore, SnapshotHeader), AppError> {
    let file = File::open(path).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))?;
    VectorStore::read_snapshot(BufReader::new(file)).map_err(|e| AppError::Data(format!("{}: {e}", path.display())))
}

pub fn store_vectors(store: &VectorStore) -> Vec<Embedding> {
    store.entries().map(|e| e.vector.clone()).collect()
}

pub fn calibrate_store(store: &VectorStore, sampling: Sampling, seed: u64) -> Result<DistanceStats, AppError> {
    Ok(calibrate(&store_vectors(store), sampling, seed)?)
}

pub fn resolve_threshold(setting: ThresholdSetting, store: &VectorStore, seed: u64) -> Result<f64, AppError> {
    match setting {
        ThresholdSetting::Value(v) => Ok(v),
        ThresholdSetting::Calibrated(i) => {
            let t = calibrate_store(store, Sampling::default(), seed)?.thresholds()[i];
            if t > 0.0 && t <= 2.0 {
                Ok(t)
            } else {
                Err(AppError::Data(format!("calibrated threshold {t} is outside (0, 2]")))
            }
        }
    }
}

/// A loaded snapshot with the embedder that matches it.
pub struct LoadedStore {
    pub store: Arc<VectorStore>,
    pub header: SnapshotHeader,
    pub embedder: Arc<dyn Embedder>,
}

pub fn open_store(config: &AppConfig) -> Result<LoadedStore, AppError> {
    let path = config
        .snapshot
        .as_deref()
        .ok_or_else(|| AppError::Config("no snapshot path configured".into()))?;
    let (store, header) = load_snapshot(path)?;
    let embedder = build_embedder(&config.embedding);
    if header.embedder != embedder.describe() {
        return Err(AppError::Config(format!(
            "snapshot was built with `{}` but the configured embedder is `{}`",
            header.embedder,
            embedder.describe()
        )));
    }
    Ok(LoadedStore {
        store: Arc::new(store),
        header,
        embedder,
    })
}

pub fn build_engine(
    config: &AppConfig,
    loaded: &LoadedStore,
    llm: Arc<dyn LlmBackend>,
) -> Result<RetrievalEngine, AppError> {
    let threshold = resolve_threshold(config.threshold, &loaded.store, config.seed)?;
    let engine = RetrievalEngine::new(loaded.store.clone(), llm, loaded.embedder.clone())
        .map_err(AppError::from)?
        .with_prompt(build_prompts(config)?)
        .with_threshold(threshold)
        .with_limit(config.limit);
    Ok(engine)
}

pub fn configured_llm(config: &AppConfig) -> Result<Arc<dyn LlmBackend>, AppError> {
    let llm = config
        .llm
        .as_ref()
        .ok_or_else(|| AppError::Config("no [llm] section configured".into()))?;
    build_llm(llm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemView {
    pub id: String,
    pub name: String,
    pub food_group: String,
    pub components: Map<String, Value>,
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptView {
    pub tier: Tier,
    pub error: Option<String>,
}

impl From<&Attempt> for AttemptView {
    fn from(a: &Attempt) -> Self {
        AttemptView {
            tier: a.tier,
            error: a.error.as_ref().map(|e| {
                if e.path.is_empty() {
                    format!("{}: {}", e.kind, e.message)
                } else {
                    format!("{} at {}: {}", e.kind, e.path, e.message)
                }
            }),
        }
    }
}

/// Answer to one question, shared by `POST /api/query` and `query --json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub filter_document: Value,
    pub tier: Tier,
    pub threshold_used: Option<f64>,
    pub items: Vec<ItemView>,
    pub attempts: Vec<AttemptView>,
    pub duration_ms: f64,
}

impl QueryResponse {
    pub fn new(store: &VectorStore, outcome: &CascadeOutcome, duration_ms: f64) -> Self {
        let items = outcome
            .result
            .items
            .iter()
            .filter_map(|hit| {
                let entry = store.get(&hit.item_id)?;
                let components = entry
                    .metadata
                    .iter()
                    .filter(|(k, _)| k.as_str() != FOOD_GROUP)
                    .map(|(k, v)| (k.clone(), serde_json::to_value(v).unwrap_or(Value::Null)))
                    .collect();
                Some(ItemView {
                    id: entry.item_id.clone(),
                    name: entry.name.clone(),
                    food_group: entry.food_group().unwrap_or_default().to_string(),
                    components,
                    distance: hit.distance,
                })
            })
            .collect();
        QueryResponse {
            filter_document: outcome.result.filter_used.to_document(),
            tier: outcome.result.tier,
            threshold_used: outcome.result.threshold_used,
            items,
            attempts: outcome.attempts.iter().map(AttemptView::from).collect(),
            duration_ms,
        }
    }
}

/// Runs the cascade for `question` and times it.
pub fn answer(engine: &RetrievalEngine, question: &str) -> Result<QueryResponse, CascadeError> {
    let start = std::time::Instant::now();
    let outcome = engine.retrieve(question)?;
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    Ok(QueryResponse::new(engine.store(), &outcome, ms))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldView {
    pub name: String,
    pub kind: String,
}

pub fn schema_view(engine: &RetrievalEngine) -> Vec<FieldView> {
    engine
        .schema()
        .fields()
        .map(|(name, kind)| FieldView {
            name: name.to_string(),
            kind: match kind {
                FieldKind::Numeric => "numeric",
                FieldKind::Categorical => "categorical",
            }
            .into(),
        })
        .collect()
}
