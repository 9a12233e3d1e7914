//! Evaluation harness: question sets, F1 scoring, suite runs and reports.

mod metrics;
mod questions;
mod report;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::filtergen::{Attempt, RetrievalEngine};
use crate::store::Tier;

pub use metrics::{score, Metrics};
pub use questions::{
    load_questions, parse_questions, resolve, Difficulty, GroundTruth, QuestionCase, QuestionError, ResolvedQuestion,
};
pub use report::{parse_csv, render_report, ReportError, ReportFormat, TABLE_CAPTION};

/// Aggregate F1 for one model, threshold and difficulty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub threshold: f64,
    pub difficulty: Difficulty,
    /// Mean over runs of the per-run mean F1. `None` when the set has no
    /// question of this difficulty.
    pub mean_f1: Option<f64>,
    /// Population standard deviation over runs.
    pub std_f1: Option<f64>,
    pub runs: usize,
}

/// One question in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub model: String,
    pub threshold: f64,
    pub run: usize,
    pub question_id: String,
    pub difficulty: Difficulty,
    /// `None` when the cascade failed outright.
    pub tier: Option<Tier>,
    pub metrics: Metrics,
    /// Set when the cascade failed; the question is scored zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    pub breakdown: Vec<QuestionRecord>,
}

impl EvalReport {
    /// Appends another report, e.g. a second model's.
    pub fn merge(&mut self, other: EvalReport) {
        self.rows.extend(other.rows);
        self.breakdown.extend(other.breakdown);
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Full trace of one question in one run, written as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub model: String,
    pub threshold: f64,
    pub run: usize,
    pub question_id: String,
    pub question: String,
    pub difficulty: Difficulty,
    pub tier: Option<Tier>,
    pub filter_used: Option<Value>,
    pub attempts: Vec<Attempt>,
    pub retrieved: Vec<String>,
    pub ground_truth: Vec<String>,
    pub metrics: Metrics,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutput {
    pub report: EvalReport,
    pub audit: Vec<AuditRecord>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SuiteError {
    #[error("runs must be at least 1")]
    NoRuns,
    #[error("at least one threshold is required")]
    NoThresholds,
    #[error("threshold must lie in (0, 2], got {0}")]
    InvalidThreshold(f64),
}

/// Runs every question `runs` times at each threshold and aggregates F1
/// per difficulty.
///
/// Within a run, questions execute concurrently in an order shuffled from
/// `seed` and the run index. Results are put back in question-file order
/// before aggregation, so the report does not depend on scheduling. A
/// question whose cascade fails scores zero and carries the error.
pub fn run_suite(
    questions: &[ResolvedQuestion],
    engine: &RetrievalEngine,
    thresholds: &[f64],
    runs: usize,
    seed: u64,
) -> Result<SuiteOutput, SuiteError> {
    if runs == 0 {
        return Err(SuiteError::NoRuns);
    }
    if thresholds.is_empty() {
        return Err(SuiteError::NoThresholds);
    }
    if let Some(&t) = thresholds.iter().find(|&&t| !(t > 0.0 && t <= 2.0)) {
        return Err(SuiteError::InvalidThreshold(t));
    }
    let model = engine.llm().model().to_string();
    let mut report = EvalReport::default();
    let mut audit = Vec::new();

    for &threshold in thresholds {
        // per_run[r][q] = f1 of question q in run r
        let mut per_run: Vec<Vec<f64>> = Vec::with_capacity(runs);
        for run in 0..runs {
            let mut order: Vec<usize> = (0..questions.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            order.shuffle(&mut rng);
            let mut results: Vec<(usize, AuditRecord)> = order
                .par_iter()
                .map(|&q| (q, answer(&questions[q], engine, &model, threshold, run)))
                .collect();
            results.sort_by_key(|(q, _)| *q);

            per_run.push(results.iter().map(|(_, a)| a.metrics.f1).collect());
            for (_, a) in results {
                report.breakdown.push(QuestionRecord {
                    model: a.model.clone(),
                    threshold,
                    run,
                    question_id: a.question_id.clone(),
                    difficulty: a.difficulty,
                    tier: a.tier,
                    metrics: a.metrics,
                    error: a.error.clone(),
                });
                audit.push(a);
            }
        }

        for difficulty in Difficulty::ALL {
            let members: Vec<usize> = (0..questions.len())
                .filter(|&q| questions[q].case.difficulty == difficulty)
                .collect();
            let (mean_f1, std_f1) = if members.is_empty() {
                (None, None)
            } else {
                let run_means: Vec<f64> = per_run
                    .iter()
                    .map(|scores| members.iter().map(|&q| scores[q]).sum::<f64>() / members.len() as f64)
                    .collect();
                let (m, s) = mean_std(&run_means);
                (Some(m), Some(s))
            };
            report.rows.push(ReportRow {
                model: model.clone(),
                threshold,
                difficulty,
                mean_f1,
                std_f1,
                runs,
            });
        }
    }
    Ok(SuiteOutput { report, audit })
}

fn answer(q: &ResolvedQuestion, engine: &RetrievalEngine, model: &str, threshold: f64, run: usize) -> AuditRecord {
    let outcome = engine.retrieve_with_threshold(&q.case.question, threshold);
    let (tier, filter_used, attempts, retrieved, error) = match outcome {
        Ok(o) => (
            Some(o.result.tier),
            Some(o.result.filter_used.to_document()),
            o.attempts,
            o.result.ids(),
            None,
        ),
        Err(e) => (None, None, Vec::new(), BTreeSet::new(), Some(e.to_string())),
    };
    let metrics = if error.is_some() {
        Metrics {
            precision: 0.0,
            recall: 0.0,
            f1: 0.0,
            ..score(&q.truth, &retrieved)
        }
    } else {
        score(&q.truth, &retrieved)
    };
    AuditRecord {
        model: model.to_string(),
        threshold,
        run,
        question_id: q.case.id.clone(),
        question: q.case.question.clone(),
        difficulty: q.case.difficulty,
        tier,
        filter_used,
        attempts,
        retrieved: retrieved.into_iter().collect(),
        ground_truth: q.truth.iter().cloned().collect(),
        metrics,
        error,
    }
}

/// Mean and population standard deviation, summed in order.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_is_population() {
        let (m, s) = mean_std(&[1.0, 0.0]);
        assert_eq!(m, 0.5);
        assert_eq!(s, 0.5);
        assert_eq!(mean_std(&[0.25; 5]).1, 0.0);
    }

    #[test]
    fn merge_appends() {
        let row = ReportRow {
            model: "a".into(),
            threshold: 0.5,
            difficulty: Difficulty::Easy,
            mean_f1: Some(1.0),
            std_f1: Some(0.0),
            runs: 1,
        };
        let mut a = EvalReport {
            rows: vec![row.clone()],
            breakdown: vec![],
        };
        a.merge(EvalReport {
            rows: vec![ReportRow {
                model: "b".into(),
                ..row
            }],
            breakdown: vec![],
        });
        assert_eq!(a.rows.len(), 2);
        assert_eq!(a.rows[1].model, "b");
    }
}
