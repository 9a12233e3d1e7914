use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// Set-based retrieval quality for one question. Ranking is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores `retrieved` against `ground_truth`.
///
/// When both sets are empty every measure is 1; when exactly one is empty
/// every measure is 0. F1 is computed as `2tp / (2tp + fp + fn)`, which
/// equals the harmonic mean of precision and recall.
pub fn score(ground_truth: &BTreeSet<String>, retrieved: &BTreeSet<String>) -> Metrics {
    let tp = ground_truth.intersection(retrieved).count();
    let fp = retrieved.len() - tp;
    let fn_ = ground_truth.len() - tp;
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    if ground_truth.is_empty() != retrieved.is_empty() {
        return Metrics {
            tp,
            fp,
            fn_,
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
        };
    }
    Metrics {
        tp,
        fp,
        fn_,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        f1: ratio(2 * tp, 2 * tp + fp + fn_),
    }
}
