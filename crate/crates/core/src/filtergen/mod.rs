//! LLM filter generation and the retrieval cascade.
//!
//! A question is first sent with the strict prompt, which lists every field.
//! If that reply does not yield a valid filter, a fresh call with the loose
//! prompt asks for a food-group constraint only. If that fails too, the
//! question is answered by unfiltered semantic search. See
//! [`retrieve_with_cascade`].

mod cascade;
mod llm;
mod prompt;
mod sanitize;

use serde::{Deserialize, Serialize};

use crate::filter::{is_food_group_only, loose_projection, parse_filter, FilterError, FilterErrorKind, FilterExpr};

pub use cascade::{retrieve_with_cascade, Attempt, AttemptError, CascadeError, CascadeOutcome, RetrievalEngine};
pub use llm::{
    BackendError, Fault, LlmBackend, LlmRequest, RemoteLlm, RemoteLlmConfig, ScriptError, ScriptedBackend,
    ScriptedResponse,
};
pub use prompt::{PromptContext, PromptError, PromptSpec};
pub use sanitize::extract_document;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    Strict,
    Loose,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerationError {
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Outcome of one generation call, with the reply kept verbatim.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterAttempt {
    /// `None` when the backend never replied.
    pub raw_response: Option<String>,
    pub result: Result<FilterExpr, GenerationError>,
}

fn generate(
    mode: FilterMode,
    question: &str,
    ctx: &PromptContext<'_>,
    backend: &dyn LlmBackend,
    prompt: &PromptSpec,
) -> FilterAttempt {
    let rendered = prompt.render(mode, question, ctx);
    let request = LlmRequest {
        mode,
        question,
        prompt: &rendered,
    };
    match backend.complete(&request) {
        Err(e) => FilterAttempt {
            raw_response: None,
            result: Err(e.into()),
        },
        Ok(reply) => {
            let result = parse_filter(extract_document(&reply), ctx.schema).map_err(GenerationError::from);
            FilterAttempt {
                raw_response: Some(reply),
                result,
            }
        }
    }
}

/// Asks for a filter over any schema field.
pub fn generate_strict(
    question: &str,
    ctx: &PromptContext<'_>,
    backend: &dyn LlmBackend,
    prompt: &PromptSpec,
) -> FilterAttempt {
    generate(FilterMode::Strict, question, ctx, backend, prompt)
}

/// Asks for a food-group-only filter.
///
/// The parsed filter must be its own loose projection and must actually
/// constrain the food group; anything else is a `StructureError`.
pub fn generate_loose(
    question: &str,
    ctx: &PromptContext<'_>,
    backend: &dyn LlmBackend,
    prompt: &PromptSpec,
) -> FilterAttempt {
    let mut attempt = generate(FilterMode::Loose, question, ctx, backend, prompt);
    if let Ok(filter) = &attempt.result {
        let problem = if filter.is_match_all() {
            Some("no food group constraint")
        } else if !is_food_group_only(filter) || loose_projection(filter) != *filter {
            Some("loose filters may only use `food group` with $eq or $in")
        } else {
            None
        };
        if let Some(message) = problem {
            attempt.result = Err(FilterError::new(FilterErrorKind::StructureError, "", message).into());
        }
    }
    attempt
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::filter::{CmpOp, FieldSchema};

    const QUESTION: &str = "Which foods have more than 12 g of protein?";

    fn fixture() -> (FieldSchema, BTreeSet<String>) {
        let schema = FieldSchema::with_components(["protein, total", "salt"]).unwrap();
        let groups = ["Cheeses", "Fish"].into_iter().map(String::from).collect();
        (schema, groups)
    }

    fn run(mode: FilterMode, reply: &str) -> FilterAttempt {
        let (schema, groups) = fixture();
        let ctx = PromptContext {
            schema: &schema,
            food_groups: &groups,
        };
        let backend = ScriptedBackend::new("m").with(
            QUESTION,
            vec![
                ScriptedResponse::Text(reply.into()),
                ScriptedResponse::Text(reply.into()),
            ],
        );
        let prompt = PromptSpec::default();
        match mode {
            FilterMode::Strict => generate_strict(QUESTION, &ctx, &backend, &prompt),
            FilterMode::Loose => generate_loose(QUESTION, &ctx, &backend, &prompt),
        }
    }

    fn kind(attempt: &FilterAttempt) -> FilterErrorKind {
        match &attempt.result {
            Err(GenerationError::Filter(e)) => e.kind,
            other => panic!("expected a filter error, got {other:?}"),
        }
    }

    #[test]
    fn strict_protein_example() {
        let reply = r#"{"protein, total": {"$gt": 12}}"#;
        let attempt = run(FilterMode::Strict, reply);
        assert_eq!(attempt.result, Ok(FilterExpr::cmp("protein, total", CmpOp::Gt, 12.0)));
        assert_eq!(attempt.raw_response.as_deref(), Some(reply));
    }

    #[test]
    fn strict_faults() {
        assert_eq!(kind(&run(FilterMode::Strict, "not json")), FilterErrorKind::SyntaxError);
        assert_eq!(
            kind(&run(FilterMode::Strict, r#"{"protien":{"$gt":12}}"#)),
            FilterErrorKind::UnknownField
        );
    }

    #[test]
    fn fenced_reply_is_kept_verbatim_in_log() {
        let reply = "```json\n{\"salt\": {\"$lt\": 1}}\n```";
        let attempt = run(FilterMode::Strict, reply);
        assert!(attempt.result.is_ok());
        assert_eq!(attempt.raw_response.as_deref(), Some(reply));
    }

    #[test]
    fn loose_accepts_food_group_only() {
        let attempt = run(FilterMode::Loose, r#"{"food group": "Cheeses"}"#);
        assert_eq!(attempt.result, Ok(FilterExpr::food_group("Cheeses")));
        let attempt = run(FilterMode::Loose, r#"{"food group": {"$in": ["Cheeses", "Fish"]}}"#);
        assert!(attempt.result.is_ok());
    }

    #[test]
    fn loose_rejects_other_fields() {
        assert_eq!(
            kind(&run(FilterMode::Loose, r#"{"salt": {"$lt": 1}}"#)),
            FilterErrorKind::StructureError
        );
        assert_eq!(
            kind(&run(FilterMode::Loose, r#"{"food group": {"$ne": "Fish"}}"#)),
            FilterErrorKind::StructureError
        );
        assert_eq!(kind(&run(FilterMode::Loose, "{}")), FilterErrorKind::StructureError);
        assert_eq!(kind(&run(FilterMode::Loose, "oops")), FilterErrorKind::SyntaxError);
    }

    #[test]
    fn backend_failure_has_no_raw_response() {
        let (schema, groups) = fixture();
        let ctx = PromptContext {
            schema: &schema,
            food_groups: &groups,
        };
        let attempt = generate_strict(QUESTION, &ctx, &ScriptedBackend::new("m"), &PromptSpec::default());
        assert_eq!(attempt.raw_response, None);
        assert!(matches!(attempt.result, Err(GenerationError::Backend(_))));
    }
}
