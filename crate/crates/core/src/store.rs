//! In-memory vector store with per-item metadata.
//!
//! Two query paths: [`VectorStore::query_filtered`] returns every entry a
//! filter matches without touching vectors, and
//! [`VectorStore::query_semantic`] restricts by a prefilter, then keeps
//! entries within a cosine-distance threshold of the query vector. Both are
//! exact linear scans.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{serialize, FoodItem};
use crate::embeddings::{distance_with_norms, embed, EmbedError, Embedder, Embedding};
use crate::filter::{evaluate, FieldKind, FieldSchema, FilterExpr, Metadata, Scalar, SchemaConflict, FOOD_GROUP};

pub const DEFAULT_LIMIT: usize = 10_000;

const SNAPSHOT_FORMAT: &str = "nutrifilter-snapshot";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("dimension mismatch for `{item_id}`: store is {expected}, vector is {found}")]
    DimensionMismatch {
        item_id: String,
        expected: usize,
        found: usize,
    },
    #[error("zero-norm vector for `{0}`")]
    ZeroNorm(String),
    #[error("threshold must lie in (0, 2], got {0}")]
    InvalidThreshold(f64),
    #[error("snapshot line {line}: {message}")]
    Snapshot { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub item_id: String,
    pub name: String,
    pub metadata: Metadata,
    pub vector: Embedding,
    pub sentence: String,
}

impl StoreEntry {
    pub fn food_group(&self) -> Option<&str> {
        self.metadata.get(FOOD_GROUP).and_then(|v| v.as_text())
    }
}

/// Which cascade tier produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    Strict,
    Loose,
    Semantic,
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Strict => "Strict",
            Tier::Loose => "Loose",
            Tier::Semantic => "Semantic",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedItem {
    pub item_id: String,
    /// Cosine distance to the query; `None` for filter-only retrieval.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalResult {
    pub items: Vec<RetrievedItem>,
    pub tier: Tier,
    pub filter_used: FilterExpr,
    pub threshold_used: Option<f64>,
    /// More entries qualified than `limit` allowed.
    pub truncated: bool,
}

impl RetrievalResult {
    pub fn ids(&self) -> BTreeSet<String> {
        self.items.iter().map(|i| i.item_id.clone()).collect()
    }
}

struct Slot {
    entry: StoreEntry,
    norm: f64,
}

/// Entries keyed by item id. Mutation needs `&mut self`; once shared behind
/// an `Arc` the store is read-only and queries may run concurrently.
pub struct VectorStore {
    dimension: usize,
    slots: BTreeMap<String, Slot>,
}

impl VectorStore {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            slots: BTreeMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, item_id: &str) -> Option<&StoreEntry> {
        self.slots.get(item_id).map(|s| &s.entry)
    }

    /// Entries in item-id order.
    pub fn entries(&self) -> impl Iterator<Item = &StoreEntry> {
        self.slots.values().map(|s| &s.entry)
    }

    pub fn food_groups(&self) -> BTreeSet<String> {
        self.entries()
            .filter_map(|e| e.food_group().map(str::to_string))
            .collect()
    }

    /// Field schema implied by the stored metadata: text values are
    /// categorical, numbers numeric.
    pub fn schema(&self) -> Result<FieldSchema, SchemaConflict> {
        let mut schema = FieldSchema::new();
        for entry in self.entries() {
            for (name, value) in &entry.metadata {
                let kind = match value {
                    Scalar::Number(_) => FieldKind::Numeric,
                    Scalar::Text(_) => FieldKind::Categorical,
                };
                schema.insert(name, kind)?;
            }
        }
        Ok(schema)
    }

    /// Inserts or replaces entries by id. The batch is validated before any
    /// entry is written, so a failing batch leaves the store unchanged.
    pub fn upsert(&mut self, entries: Vec<StoreEntry>) -> Result<usize, StoreError> {
        let mut norms = Vec::with_capacity(entries.len());
        for e in &entries {
            if e.vector.dimension() != self.dimension {
                return Err(StoreError::DimensionMismatch {
                    item_id: e.item_id.clone(),
                    expected: self.dimension,
                    found: e.vector.dimension(),
                });
            }
            let norm = e.vector.norm();
            if norm == 0.0 || !norm.is_finite() {
                return Err(StoreError::ZeroNorm(e.item_id.clone()));
            }
            norms.push(norm);
        }
        let count = entries.len();
        for (entry, norm) in entries.into_iter().zip(norms) {
            self.slots.insert(entry.item_id.clone(), Slot { entry, norm });
        }
        Ok(count)
    }

    /// Every entry satisfying `filter`, in id order, capped at `limit`.
    pub fn query_filtered(&self, filter: &FilterExpr, limit: usize) -> RetrievalResult {
        let mut matches = self
            .entries()
            .filter(|e| evaluate(filter, &e.metadata))
            .map(|e| RetrievedItem {
                item_id: e.item_id.clone(),
                distance: None,
            });
        let items: Vec<RetrievedItem> = matches.by_ref().take(limit).collect();
        let truncated = matches.next().is_some();
        RetrievalResult {
            items,
            tier: Tier::Strict,
            filter_used: filter.clone(),
            threshold_used: None,
            truncated,
        }
    }

    /// Entries satisfying `prefilter` whose distance to `query` is at most
    /// `threshold`, nearest first (ties by id), capped at `limit`.
    ///
    /// The result tier is [`Tier::Semantic`] for a `MatchAll` prefilter and
    /// [`Tier::Loose`] otherwise.
    pub fn query_semantic(
        &self,
        query: &Embedding,
        prefilter: &FilterExpr,
        threshold: f64,
        limit: usize,
    ) -> Result<RetrievalResult, StoreError> {
        if !(threshold > 0.0 && threshold <= 2.0) {
            return Err(StoreError::InvalidThreshold(threshold));
        }
        if query.dimension() != self.dimension {
            return Err(StoreError::DimensionMismatch {
                item_id: "<query>".into(),
                expected: self.dimension,
                found: query.dimension(),
            });
        }
        let qnorm = query.norm();
        if qnorm == 0.0 || !qnorm.is_finite() {
            return Err(StoreError::ZeroNorm("<query>".into()));
        }

        let candidates: Vec<&Slot> = self
            .slots
            .values()
            .filter(|s| evaluate(prefilter, &s.entry.metadata))
            .collect();
        let mut hits: Vec<(f64, &str)> = candidates
            .par_iter()
            .map(|s| {
                let d = distance_with_norms(query.values(), qnorm, s.entry.vector.values(), s.norm);
                (d, s.entry.item_id.as_str())
            })
            .filter(|(d, _)| *d <= threshold)
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));

        let truncated = hits.len() > limit;
        hits.truncate(limit);
        Ok(RetrievalResult {
            items: hits
                .into_iter()
                .map(|(d, id)| RetrievedItem {
                    item_id: id.to_string(),
                    distance: Some(d),
                })
                .collect(),
            tier: if prefilter.is_match_all() {
                Tier::Semantic
            } else {
                Tier::Loose
            },
            filter_used: prefilter.clone(),
            threshold_used: Some(threshold),
            truncated,
        })
    }

    /// Writes a JSON-lines snapshot: a header line, then one entry per line.
    pub fn write_snapshot<W: Write>(&self, embedder: &str, mut out: W) -> Result<(), StoreError> {
        let header = SnapshotHeader {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            dimension: self.dimension,
            embedder: embedder.into(),
            count: self.len(),
        };
        serde_json::to_writer(&mut out, &header).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
        for entry in self.entries() {
            serde_json::to_writer(&mut out, entry).map_err(io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_snapshot<R: BufRead>(source: R) -> Result<(Self, SnapshotHeader), StoreError> {
        let mut lines = source.lines().enumerate();
        let header: SnapshotHeader = match lines.next() {
            Some((_, line)) => serde_json::from_str(&line?).map_err(|e| StoreError::Snapshot {
                line: 1,
                message: format!("bad header: {e}"),
            })?,
            None => {
                return Err(StoreError::Snapshot {
                    line: 1,
                    message: "empty snapshot".into(),
                })
            }
        };
        if header.format != SNAPSHOT_FORMAT || header.version != SNAPSHOT_VERSION {
            return Err(StoreError::Snapshot {
                line: 1,
                message: format!("unsupported snapshot {} v{}", header.format, header.version),
            });
        }
        let mut entries = Vec::with_capacity(header.count);
        for (idx, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: StoreEntry = serde_json::from_str(&line).map_err(|e| StoreError::Snapshot {
                line: idx + 1,
                message: e.to_string(),
            })?;
            entries.push(entry);
        }
        if entries.len() != header.count {
            return Err(StoreError::Snapshot {
                line: entries.len() + 1,
                message: format!("header promises {} entries, found {}", header.count, entries.len()),
            });
        }
        let mut store = VectorStore::new(header.dimension);
        store.upsert(entries)?;
        Ok((store, header))
    }
}

/// Serializes and embeds `items` into store entries, in input order.
pub fn build_entries(items: &[FoodItem], embedder: &dyn Embedder) -> Result<Vec<StoreEntry>, EmbedError> {
    let sentences: Vec<String> = items.iter().map(|i| serialize(i).sentence).collect();
    let vectors = embed(embedder, &sentences)?;
    Ok(items
        .iter()
        .zip(sentences)
        .zip(vectors)
        .map(|((item, sentence), vector)| StoreEntry {
            item_id: item.id.clone(),
            name: item.name.clone(),
            metadata: item.metadata(),
            vector,
            sentence,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub format: String,
    pub version: u32,
    pub dimension: usize,
    /// [`crate::embeddings::Embedder::describe`] of the model that built it.
    pub embedder: String,
    pub count: usize,
}
