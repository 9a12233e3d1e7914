use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use super::FilterMode;
use crate::filter::{FieldKind, FieldSchema, FOOD_GROUP};

const DEFAULT_STRICT: &str = include_str!("../../prompts/strict.txt");
const DEFAULT_LOOSE: &str = include_str!("../../prompts/loose.txt");

const SLOTS: [&str; 4] = ["components", "syntax_rules", "response_format", "question"];

const STRICT_RULES: &str = r#"- A filter is a JSON object. `{"field": {"$op": value}}` compares one field.
- Comparison operators: $eq, $ne, $gt, $gte, $lt, $lte (single value), $in, $nin (non-empty list).
- `{"field": value}` is shorthand for $eq.
- Combine filters with {"$and": [f1, f2, ...]} or {"$or": [f1, f2, ...]}; each needs at least two filters.
- Each object holds exactly one key. Use $and to combine several conditions.
- Numbers are plain JSON numbers in grams (or kcal for energy); convert mg and µg to grams.
- Use field names exactly as listed. Ranges such as "between 30 and 35" include both ends ($gte/$lte)."#;

const LOOSE_RULES: &str = r#"- Use only the "food group" field, with $eq or $in: {"food group": "Cheeses"} or {"food group": {"$in": ["Fish", "Cheeses"]}}.
- Use group names exactly as listed."#;

const RESPONSE_FORMAT: &str =
    "Reply with the filter as a single JSON object and nothing else: no prose, no code fences.";

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("reading template {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{mode:?} template is missing the `{{{slot}}}` slot")]
    MissingSlot { mode: FilterMode, slot: &'static str },
}

/// What the prompt tells the model about the data.
#[derive(Debug, Clone, Copy)]
pub struct PromptContext<'a> {
    pub schema: &'a FieldSchema,
    pub food_groups: &'a BTreeSet<String>,
}

/// Strict and loose prompt templates with `{components}`, `{syntax_rules}`,
/// `{response_format}` and `{question}` slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    strict_template: String,
    loose_template: String,
}

impl Default for PromptSpec {
    fn default() -> Self {
        Self::new(DEFAULT_STRICT, DEFAULT_LOOSE).expect("bundled templates are complete")
    }
}

impl PromptSpec {
    pub fn new(strict: impl Into<String>, loose: impl Into<String>) -> Result<Self, PromptError> {
        let spec = Self {
            strict_template: strict.into(),
            loose_template: loose.into(),
        };
        for (mode, template) in [
            (FilterMode::Strict, &spec.strict_template),
            (FilterMode::Loose, &spec.loose_template),
        ] {
            if let Some(slot) = SLOTS.iter().find(|s| !template.contains(&format!("{{{s}}}"))) {
                return Err(PromptError::MissingSlot { mode, slot });
            }
        }
        Ok(spec)
    }

    pub fn from_files(strict: &Path, loose: &Path) -> Result<Self, PromptError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| PromptError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        Self::new(read(strict)?, read(loose)?)
    }

    pub fn template(&self, mode: FilterMode) -> &str {
        match mode {
            FilterMode::Strict => &self.strict_template,
            FilterMode::Loose => &self.loose_template,
        }
    }

    pub fn render(&self, mode: FilterMode, question: &str, ctx: &PromptContext<'_>) -> String {
        let components = match mode {
            FilterMode::Strict => describe_fields(ctx),
            FilterMode::Loose => describe_food_group(ctx),
        };
        let rules = match mode {
            FilterMode::Strict => STRICT_RULES,
            FilterMode::Loose => LOOSE_RULES,
        };
        fill(self.template(mode), |slot| match slot {
            "components" => Some(components.as_str()),
            "syntax_rules" => Some(rules),
            "response_format" => Some(RESPONSE_FORMAT),
            "question" => Some(question),
            _ => None,
        })
    }
}

fn describe_food_group(ctx: &PromptContext<'_>) -> String {
    let groups: Vec<String> = ctx.food_groups.iter().map(|g| format!("\"{g}\"")).collect();
    format!("- {FOOD_GROUP} (text; one of: {})", groups.join(", "))
}

fn describe_fields(ctx: &PromptContext<'_>) -> String {
    let mut lines = vec![describe_food_group(ctx)];
    lines.extend(
        ctx.schema
            .fields()
            .filter(|(_, kind)| *kind == FieldKind::Numeric)
            .map(|(name, _)| format!("- {name}")),
    );
    lines.join("\n")
}

/// Single-pass slot substitution, so slot-like text inside substituted
/// values (a question containing `{question}`) is left alone.
fn fill<'a>(template: &str, lookup: impl Fn(&str) -> Option<&'a str>) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after
            .find('}')
            .and_then(|close| lookup(&after[..close]).map(|v| (close, v)))
        {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}
