use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::filter::{evaluate, parse_filter, FieldSchema, FilterError};
use crate::store::VectorStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "Easy",
            Difficulty::Medium => "Medium",
            Difficulty::Hard => "Hard",
        })
    }
}

/// Ground truth as written in a question file: a filter document evaluated
/// against the corpus, or a hand-listed id set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroundTruth {
    Filter(Value),
    Ids(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionCase {
    pub id: String,
    pub question: String,
    pub difficulty: Difficulty,
    pub ground_truth: GroundTruth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

/// A question with its ground truth resolved to item ids.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedQuestion {
    pub case: QuestionCase,
    pub truth: BTreeSet<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum QuestionError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing question file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate question id `{0}`")]
    DuplicateId(String),
    #[error("question `{id}`: ground-truth filter invalid: {error}")]
    InvalidFilter { id: String, error: FilterError },
    #[error("question `{id}`: ground truth names unknown item `{item}`")]
    UnknownItem { id: String, item: String },
}

/// Parses a question file: a JSON array of cases.
pub fn parse_questions(text: &str) -> Result<Vec<QuestionCase>, QuestionError> {
    let cases: Vec<QuestionCase> = serde_json::from_str(text)?;
    let mut seen = HashSet::new();
    for case in &cases {
        if !seen.insert(case.id.as_str()) {
            return Err(QuestionError::DuplicateId(case.id.clone()));
        }
    }
    Ok(cases)
}

pub fn load_questions(path: &Path) -> Result<Vec<QuestionCase>, QuestionError> {
    let text = fs::read_to_string(path).map_err(|source| QuestionError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_questions(&text)
}

/// Resolves every case's ground truth against the store contents.
pub fn resolve(
    cases: Vec<QuestionCase>,
    store: &VectorStore,
    schema: &FieldSchema,
) -> Result<Vec<ResolvedQuestion>, QuestionError> {
    cases
        .into_iter()
        .map(|case| {
            let truth = match &case.ground_truth {
                GroundTruth::Filter(doc) => {
                    let filter =
                        parse_filter(&doc.to_string(), schema).map_err(|error| QuestionError::InvalidFilter {
                            id: case.id.clone(),
                            error,
                        })?;
                    store
                        .entries()
                        .filter(|e| evaluate(&filter, &e.metadata))
                        .map(|e| e.item_id.clone())
                        .collect()
                }
                GroundTruth::Ids(ids) => {
                    if let Some(item) = ids.iter().find(|i| store.get(i).is_none()) {
                        return Err(QuestionError::UnknownItem {
                            id: case.id.clone(),
                            item: item.clone(),
                        });
                    }
                    ids.iter().cloned().collect()
                }
            };
            Ok(ResolvedQuestion { case, truth })
        })
        .collect()
}
