//! Metadata filter language.
//!
//! Filters are JSON objects in the Chroma `where` dialect:
//!
//! ```text
//! {"protein, total": {"$gt": 12}}
//! {"$and": [{"food group": "Cheeses"}, {"salt": {"$lt": 3}}]}
//! {}
//! ```
//!
//! Documents are parsed against a [`FieldSchema`] into a validated
//! [`FilterExpr`], which [`evaluate`] then applies to record metadata. A
//! field missing from a record fails every comparison on it, `$ne` and
//! `$nin` included.

mod eval;
mod parse;
mod schema;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};

pub use eval::{evaluate, is_food_group_only, loose_projection};
pub use parse::parse_filter;
pub use schema::{canonical_field_name, FieldKind, FieldSchema, SchemaConflict, FOOD_GROUP};

/// A single metadata value: a measurement or a category label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Scalar::Number(n) => Some(*n),
            Scalar::Text(_) => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Scalar::Text(s) => Some(s),
            Scalar::Number(_) => None,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Scalar::Number(n) => number_to_json(*n),
            Scalar::Text(s) => Value::String(s.clone()),
        }
    }
}

impl From<f64> for Scalar {
    fn from(v: f64) -> Self {
        Scalar::Number(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Text(v.to_string())
    }
}

impl From<String> for Scalar {
    fn from(v: String) -> Self {
        Scalar::Text(v)
    }
}

/// Field name → value map a filter is evaluated against.
pub type Metadata = BTreeMap<String, Scalar>;

/// Integral values render without a fractional part so that generated
/// documents read like hand-written ones (`12`, not `12.0`).
pub(crate) fn number_to_json(n: f64) -> Value {
    const EXACT_INT: f64 = 9_007_199_254_740_992.0;
    if n.fract() == 0.0 && n.abs() < EXACT_INT {
        Value::Number(Number::from(n as i64))
    } else {
        Number::from_f64(n).map(Value::Number).unwrap_or(Value::Null)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Gt,
    Gte,
    Lt,
    Lte,
    In,
    Nin,
}

impl CmpOp {
    pub const ALL: [CmpOp; 8] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Gt,
        CmpOp::Gte,
        CmpOp::Lt,
        CmpOp::Lte,
        CmpOp::In,
        CmpOp::Nin,
    ];

    pub fn token(self) -> &'static str {
        match self {
            CmpOp::Eq => "$eq",
            CmpOp::Ne => "$ne",
            CmpOp::Gt => "$gt",
            CmpOp::Gte => "$gte",
            CmpOp::Lt => "$lt",
            CmpOp::Lte => "$lte",
            CmpOp::In => "$in",
            CmpOp::Nin => "$nin",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.token() == token)
    }

    /// Ordering comparisons, valid only on numeric fields.
    pub fn is_range(self) -> bool {
        matches!(self, CmpOp::Gt | CmpOp::Gte | CmpOp::Lt | CmpOp::Lte)
    }

    /// Set membership, taking a list operand.
    pub fn is_membership(self) -> bool {
        matches!(self, CmpOp::In | CmpOp::Nin)
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Scalar(Scalar),
    List(Vec<Scalar>),
}

impl Operand {
    fn to_json(&self) -> Value {
        match self {
            Operand::Scalar(s) => s.to_json(),
            Operand::List(items) => Value::Array(items.iter().map(Scalar::to_json).collect()),
        }
    }
}

/// Validated filter AST. Field names are canonical schema names.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterExpr {
    /// The empty filter `{}`.
    MatchAll,
    Cmp {
        field: String,
        op: CmpOp,
        value: Operand,
    },
    /// At least two clauses.
    And(Vec<FilterExpr>),
    /// At least two clauses.
    Or(Vec<FilterExpr>),
}

impl FilterExpr {
    /// Builds a comparison without schema validation. Prefer
    /// [`parse_filter`] for anything that did not originate in code.
    pub fn cmp(field: &str, op: CmpOp, value: impl Into<Scalar>) -> Self {
        FilterExpr::Cmp {
            field: canonical_field_name(field),
            op,
            value: Operand::Scalar(value.into()),
        }
    }

    pub fn membership(field: &str, op: CmpOp, values: Vec<Scalar>) -> Self {
        FilterExpr::Cmp {
            field: canonical_field_name(field),
            op,
            value: Operand::List(values),
        }
    }

    pub fn food_group(group: &str) -> Self {
        Self::cmp(FOOD_GROUP, CmpOp::Eq, group)
    }

    pub fn is_match_all(&self) -> bool {
        matches!(self, FilterExpr::MatchAll)
    }

    /// Every field name the filter references, deduplicated and sorted.
    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_fields(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_fields<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            FilterExpr::MatchAll => {}
            FilterExpr::Cmp { field, .. } => out.push(field),
            FilterExpr::And(clauses) | FilterExpr::Or(clauses) => {
                for clause in clauses {
                    clause.collect_fields(out);
                }
            }
        }
    }

    /// Explicit-operator JSON document for this filter.
    pub fn to_document(&self) -> Value {
        match self {
            FilterExpr::MatchAll => Value::Object(Map::new()),
            FilterExpr::Cmp { field, op, value } => {
                let mut inner = Map::new();
                inner.insert(op.token().to_string(), value.to_json());
                let mut outer = Map::new();
                outer.insert(field.clone(), Value::Object(inner));
                Value::Object(outer)
            }
            FilterExpr::And(clauses) | FilterExpr::Or(clauses) => {
                let key = if matches!(self, FilterExpr::And(_)) {
                    "$and"
                } else {
                    "$or"
                };
                let mut outer = Map::new();
                outer.insert(
                    key.to_string(),
                    Value::Array(clauses.iter().map(FilterExpr::to_document).collect()),
                );
                Value::Object(outer)
            }
        }
    }
}

impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_document())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FilterErrorKind {
    SyntaxError,
    UnknownField,
    TypeMismatch,
    StructureError,
}

impl fmt::Display for FilterErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FilterErrorKind::SyntaxError => "SyntaxError",
            FilterErrorKind::UnknownField => "UnknownField",
            FilterErrorKind::TypeMismatch => "TypeMismatch",
            FilterErrorKind::StructureError => "StructureError",
        };
        f.write_str(name)
    }
}

/// Why a filter document was rejected. Serializes as `{kind, path, message}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind} at `{path}`: {message}")]
pub struct FilterError {
    pub kind: FilterErrorKind,
    /// Location inside the document, e.g. `$and[1].salt.$lt`; empty for the root.
    pub path: String,
    pub message: String,
}

impl FilterError {
    pub fn new(kind: FilterErrorKind, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            kind,
            path: path.into(),
            message: message.into(),
        }
    }
}
