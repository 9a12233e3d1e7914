//! Shared test helpers: an independent filter interpreter, random filter
//! and corpus generators, and fixture loaders.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use nutrifilter_core::corpus::{ingest_path, FoodItem};
use nutrifilter_core::embeddings::{Embedder, Embedding, HashEmbedder};
use nutrifilter_core::eval::{load_questions, resolve, ResolvedQuestion};
use nutrifilter_core::filter::{FieldSchema, Metadata, Scalar};
use nutrifilter_core::filtergen::{RetrievalEngine, ScriptedBackend};
use nutrifilter_core::store::{build_entries, VectorStore};
use rand::Rng;
use serde_json::{json, Map, Value};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

// ---------------------------------------------------------------------------
// Brute-force interpreter over raw JSON documents. Written against the
// dialect rules directly; shares no code with the crate's parser or
// evaluator.

fn canon(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

fn same(a: &Value, b: &Value) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64()?.partial_cmp(&y.as_f64()?),
        (Value::String(x), Value::String(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

pub fn oracle_matches(doc: &Value, record: &Map<String, Value>) -> bool {
    let obj = doc.as_object().expect("filter documents are objects");
    if obj.is_empty() {
        return true;
    }
    let (key, value) = obj.iter().next().unwrap();
    match key.as_str() {
        "$and" => value.as_array().unwrap().iter().all(|c| oracle_matches(c, record)),
        "$or" => value.as_array().unwrap().iter().any(|c| oracle_matches(c, record)),
        field => {
            let (op, operand) = match value.as_object() {
                Some(o) => {
                    let (op, operand) = o.iter().next().unwrap();
                    (op.as_str(), operand)
                }
                None => ("$eq", value),
            };
            let Some(actual) = record.get(&canon(field)) else {
                return false;
            };
            use std::cmp::Ordering::*;
            match op {
                "$in" => operand
                    .as_array()
                    .unwrap()
                    .iter()
                    .any(|v| same(actual, v) == Some(Equal)),
                "$nin" => {
                    let list = operand.as_array().unwrap();
                    list.iter().all(|v| same(actual, v).is_some())
                        && list.iter().all(|v| same(actual, v) != Some(Equal))
                }
                _ => match same(actual, operand) {
                    None => false,
                    Some(ord) => match op {
                        "$eq" => ord == Equal,
                        "$ne" => ord != Equal,
                        "$gt" => ord == Greater,
                        "$gte" => ord != Less,
                        "$lt" => ord == Less,
                        "$lte" => ord != Greater,
                        other => panic!("oracle: unknown operator {other}"),
                    },
                },
            }
        }
    }
}

pub fn metadata_json(meta: &Metadata) -> Map<String, Value> {
    meta.iter()
        .map(|(k, v)| {
            let v = match v {
                Scalar::Number(n) => json!(n),
                Scalar::Text(t) => json!(t),
            };
            (k.clone(), v)
        })
        .collect()
}

/// Ids of store entries the oracle says match `doc`.
pub fn brute_force_ids(doc: &Value, store: &VectorStore) -> BTreeSet<String> {
    store
        .entries()
        .filter(|e| oracle_matches(doc, &metadata_json(&e.metadata)))
        .map(|e| e.item_id.clone())
        .collect()
}

// ---------------------------------------------------------------------------
// Random filters and corpora.

pub const NUMERIC_FIELDS: [&str; 4] = ["protein, total", "salt", "energy", "vitamin c"];
pub const GROUPS: [&str; 4] = ["Cheeses", "Fish", "Breads", "Fruit juices"];

pub fn random_schema() -> FieldSchema {
    FieldSchema::with_components(NUMERIC_FIELDS).unwrap()
}

fn random_number<R: Rng>(rng: &mut R) -> f64 {
    // a coarse grid so equality comparisons hit
    rng.random_range(0..20) as f64 * 0.5
}

/// Field name as an LLM might write it: random case and spacing.
fn spelled<R: Rng>(rng: &mut R, canonical: &str) -> String {
    match rng.random_range(0..4) {
        0 => canonical.to_uppercase(),
        1 => format!("  {} ", canonical.replace(' ', "   ")),
        _ => canonical.to_string(),
    }
}

fn random_leaf<R: Rng>(rng: &mut R) -> Value {
    if rng.random_bool(0.3) {
        let field = spelled(rng, "food group");
        let pick = |rng: &mut R| json!(GROUPS[rng.random_range(0..GROUPS.len())]);
        let node = match rng.random_range(0..5) {
            0 => pick(rng),
            1 => json!({"$eq": pick(rng)}),
            2 => json!({"$ne": pick(rng)}),
            3 | 4 => {
                let len = rng.random_range(1..4);
                let values: Vec<Value> = (0..len).map(|_| pick(rng)).collect();
                let op = if rng.random_bool(0.5) { "$in" } else { "$nin" };
                json!({ op: values })
            }
            _ => unreachable!(),
        };
        return json!({ field: node });
    }
    let canonical = NUMERIC_FIELDS[rng.random_range(0..NUMERIC_FIELDS.len())];
    let field = spelled(rng, canonical);
    let ops = ["$eq", "$ne", "$gt", "$gte", "$lt", "$lte", "$in", "$nin", "implicit"];
    let op = ops[rng.random_range(0..ops.len())];
    let node = match op {
        "implicit" => json!(random_number(rng)),
        "$in" | "$nin" => {
            let len = rng.random_range(1..4);
            let values: Vec<f64> = (0..len).map(|_| random_number(rng)).collect();
            json!({ op: values })
        }
        _ => json!({ op: random_number(rng) }),
    };
    json!({ field: node })
}

/// A random valid filter document of nesting depth at most `depth`;
/// occasionally the match-all `{}`.
pub fn random_filter<R: Rng>(rng: &mut R, depth: u32) -> Value {
    if rng.random_bool(0.03) {
        return json!({});
    }
    random_clause(rng, depth)
}

fn random_clause<R: Rng>(rng: &mut R, depth: u32) -> Value {
    if depth == 0 || rng.random_bool(0.4) {
        return random_leaf(rng);
    }
    let len = rng.random_range(2..4);
    let clauses: Vec<Value> = (0..len).map(|_| random_clause(rng, depth - 1)).collect();
    if rng.random_bool(0.5) {
        json!({ "$and": clauses })
    } else {
        json!({ "$or": clauses })
    }
}

/// Up to `max_items` records; each numeric field is missing with
/// probability 0.2.
pub fn random_records<R: Rng>(rng: &mut R, max_items: usize) -> Vec<(String, Metadata)> {
    let n = rng.random_range(0..=max_items);
    (0..n)
        .map(|i| {
            let mut meta: Metadata = BTreeMap::new();
            meta.insert(
                "food group".into(),
                Scalar::from(GROUPS[rng.random_range(0..GROUPS.len())]),
            );
            for f in NUMERIC_FIELDS {
                if rng.random_bool(0.8) {
                    meta.insert(f.into(), Scalar::from(random_number(rng)));
                }
            }
            (format!("r{i:04}"), meta)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Fixture corpus.

pub fn fixture_items() -> Vec<FoodItem> {
    ingest_path(&data_path("fixture_corpus.jsonl")).expect("fixture corpus loads")
}

pub fn store_with(items: &[FoodItem], embedder: &dyn Embedder) -> VectorStore {
    let mut store = VectorStore::new(embedder.dimension());
    store.upsert(build_entries(items, embedder).unwrap()).unwrap();
    store
}

pub fn hash_embedder() -> Arc<HashEmbedder> {
    Arc::new(HashEmbedder::new(HashEmbedder::DEFAULT_DIMENSION, 0))
}

pub fn fixture_store() -> Arc<VectorStore> {
    Arc::new(store_with(&fixture_items(), hash_embedder().as_ref()))
}

pub fn perfect_backend() -> ScriptedBackend {
    ScriptedBackend::from_path(&data_path("scripted_perfect.json")).unwrap()
}

pub fn perfect_engine() -> RetrievalEngine {
    RetrievalEngine::new(fixture_store(), Arc::new(perfect_backend()), hash_embedder()).unwrap()
}

pub fn mini_questions(engine: &RetrievalEngine) -> Vec<ResolvedQuestion> {
    let cases = load_questions(&data_path("mini_questions.json")).unwrap();
    resolve(cases, engine.store(), engine.schema()).unwrap()
}

// ---------------------------------------------------------------------------
// Calibration fixture.

/// 200 vectors in a plane at angles `0.05 k` with norms `1 + k mod 7`.
/// Pair distances are `1 - cos(0.05 (j - i))`, independent of the norms.
pub fn arc_fixture() -> Vec<Embedding> {
    (0..200)
        .map(|k| {
            let theta = k as f64 * 0.05;
            let r = 1.0 + (k % 7) as f64;
            Embedding::new(vec![r * theta.cos(), r * theta.sin(), 0.0])
        })
        .collect()
}

/// Enumerates the closed-form pair distances, two-pass.
pub fn arc_enumerated() -> (f64, f64, usize) {
    let mut d = Vec::new();
    for i in 0..200 {
        for j in i + 1..200 {
            d.push((1.0 - ((j - i) as f64 * 0.05).cos()).clamp(0.0, 2.0));
        }
    }
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt(), d.len())
}
