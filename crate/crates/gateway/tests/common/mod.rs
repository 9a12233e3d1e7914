#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nutrifilter::app;
use nutrifilter::config::AppConfig;
use nutrifilter_core::filtergen::RetrievalEngine;

pub const PROTEIN_Q: &str = "Which foods have more than 12 g of protein?";

pub fn core_data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(name)
}

/// Writes `nutrifilter.toml` into `dir` with the fixture corpus, a snapshot
/// path inside `dir` and the scripted backend, plus any `extra` lines.
pub fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let text = format!(
        "corpus = {:?}\nsnapshot = \"fixture.snapshot.jsonl\"\nthreshold = 0.95\n{extra}\n\n[llm]\nkind = \"scripted\"\nscript = {:?}\n",
        core_data("fixture_corpus.jsonl").display().to_string(),
        core_data("scripted_perfect.json").display().to_string(),
    );
    let path = dir.join("nutrifilter.toml");
    std::fs::write(&path, text).unwrap();
    path
}

/// A config in a fresh temp dir with the snapshot already ingested.
pub fn ingested() -> (tempfile::TempDir, PathBuf, AppConfig) {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "");
    let config = AppConfig::load(&path).unwrap();
    let embedder = app::build_embedder(&config.embedding);
    app::ingest_to_snapshot(
        config.corpus.as_deref().unwrap(),
        config.snapshot.as_deref().unwrap(),
        embedder.as_ref(),
    )
    .unwrap();
    (dir, path, config)
}

pub fn engine(config: &AppConfig) -> RetrievalEngine {
    let loaded = app::open_store(config).unwrap();
    app::build_engine(config, &loaded, app::configured_llm(config).unwrap()).unwrap()
}
