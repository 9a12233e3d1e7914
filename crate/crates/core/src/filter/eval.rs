use super::{CmpOp, FilterExpr, Metadata, Operand, Scalar, FOOD_GROUP};

/// Whether `record` satisfies `filter`.
///
/// A field absent from the record (or holding a value of the wrong type)
/// fails every comparison on it, including `$ne` and `$nin`.
pub fn evaluate(filter: &FilterExpr, record: &Metadata) -> bool {
    match filter {
        FilterExpr::MatchAll => true,
        FilterExpr::And(clauses) => clauses.iter().all(|c| evaluate(c, record)),
        FilterExpr::Or(clauses) => clauses.iter().any(|c| evaluate(c, record)),
        FilterExpr::Cmp { field, op, value } => match record.get(field) {
            Some(actual) => compare(actual, *op, value),
            None => false,
        },
    }
}

fn compare(actual: &Scalar, op: CmpOp, operand: &Operand) -> bool {
    match (op, operand) {
        (CmpOp::In, Operand::List(items)) => items.iter().any(|v| same_type_eq(actual, v) == Some(true)),
        (CmpOp::Nin, Operand::List(items)) => items.iter().all(|v| same_type_eq(actual, v) == Some(false)),
        (CmpOp::Eq, Operand::Scalar(v)) => same_type_eq(actual, v) == Some(true),
        (CmpOp::Ne, Operand::Scalar(v)) => same_type_eq(actual, v) == Some(false),
        (op, Operand::Scalar(Scalar::Number(bound))) if op.is_range() => {
            let Some(x) = actual.as_number() else {
                return false;
            };
            match op {
                CmpOp::Gt => x > *bound,
                CmpOp::Gte => x >= *bound,
                CmpOp::Lt => x < *bound,
                CmpOp::Lte => x <= *bound,
                _ => unreachable!("range operator"),
            }
        }
        // shapes rejected by the parser
        _ => false,
    }
}

/// `None` when the two values have different types.
fn same_type_eq(a: &Scalar, b: &Scalar) -> Option<bool> {
    match (a, b) {
        (Scalar::Number(x), Scalar::Number(y)) => Some(x == y),
        (Scalar::Text(x), Scalar::Text(y)) => Some(x == y),
        _ => None,
    }
}

/// True when every comparison is a `$eq`/`$in` on `food group`.
/// `MatchAll` trivially qualifies.
pub fn is_food_group_only(filter: &FilterExpr) -> bool {
    match filter {
        FilterExpr::MatchAll => true,
        FilterExpr::Cmp { field, op, .. } => field == FOOD_GROUP && matches!(op, CmpOp::Eq | CmpOp::In),
        FilterExpr::And(clauses) | FilterExpr::Or(clauses) => clauses.iter().all(is_food_group_only),
    }
}

/// Relaxes a filter to its food-group constraints.
///
/// Every comparison that is not a food-group `$eq`/`$in` is replaced by
/// "true" and the result simplified, so the projection matches a superset of
/// the original whenever the original can match at all. Pure food-group
/// filters are returned unchanged; filters with no usable food-group
/// constraint collapse to [`FilterExpr::MatchAll`].
pub fn loose_projection(filter: &FilterExpr) -> FilterExpr {
    match filter {
        FilterExpr::MatchAll => FilterExpr::MatchAll,
        FilterExpr::Cmp { .. } => {
            if is_food_group_only(filter) {
                filter.clone()
            } else {
                FilterExpr::MatchAll
            }
        }
        FilterExpr::And(clauses) => {
            let mut kept: Vec<FilterExpr> = clauses
                .iter()
                .map(loose_projection)
                .filter(|c| !c.is_match_all())
                .collect();
            match kept.len() {
                0 => FilterExpr::MatchAll,
                1 => kept.pop().expect("one clause"),
                _ => FilterExpr::And(kept),
            }
        }
        FilterExpr::Or(clauses) => {
            let projected: Vec<FilterExpr> = clauses.iter().map(loose_projection).collect();
            if projected.iter().any(FilterExpr::is_match_all) {
                FilterExpr::MatchAll
            } else {
                FilterExpr::Or(projected)
            }
        }
    }
}
