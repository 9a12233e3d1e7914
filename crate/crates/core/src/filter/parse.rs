use serde_json::{Map, Value};

use super::{CmpOp, FieldKind, FieldSchema, FilterError, FilterErrorKind, FilterExpr, Operand, Scalar};

/// Parses and validates a filter document.
///
/// Accepts the implicit-equality shorthand `{field: value}`. Every object
/// node must carry exactly one key; `$and`/`$or` need at least two clauses.
/// No number/text coercion is performed.
pub fn parse_filter(document: &str, schema: &FieldSchema) -> Result<FilterExpr, FilterError> {
    let value: Value = serde_json::from_str(document)
        .map_err(|e| FilterError::new(FilterErrorKind::SyntaxError, "", format!("malformed JSON: {e}")))?;
    let root = value.as_object().ok_or_else(|| {
        FilterError::new(
            FilterErrorKind::StructureError,
            "",
            format!("filter must be a JSON object, found {}", json_type(&value)),
        )
    })?;
    if root.is_empty() {
        return Ok(FilterExpr::MatchAll);
    }
    Parser { schema }.node(root, &mut Path::default())
}

#[derive(Default)]
struct Path(Vec<Segment>);

enum Segment {
    Key(String),
    Index(usize),
}

impl Path {
    fn render(&self) -> String {
        let mut out = String::new();
        for seg in &self.0 {
            match seg {
                Segment::Key(k) => {
                    if !out.is_empty() {
                        out.push('.');
                    }
                    out.push_str(k);
                }
                Segment::Index(i) => out.push_str(&format!("[{i}]")),
            }
        }
        out
    }

    fn with<T>(&mut self, seg: Segment, f: impl FnOnce(&mut Self) -> T) -> T {
        self.0.push(seg);
        let out = f(self);
        self.0.pop();
        out
    }

    fn error(&self, kind: FilterErrorKind, message: impl Into<String>) -> FilterError {
        FilterError::new(kind, self.render(), message)
    }
}

fn json_type(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

struct Parser<'a> {
    schema: &'a FieldSchema,
}

impl Parser<'_> {
    fn node(&self, obj: &Map<String, Value>, path: &mut Path) -> Result<FilterExpr, FilterError> {
        let (key, value) = match obj.len() {
            1 => obj.iter().next().expect("one entry"),
            0 => {
                return Err(path.error(
                    FilterErrorKind::StructureError,
                    "empty object is only allowed as the whole filter",
                ))
            }
            n => {
                return Err(path.error(
                    FilterErrorKind::StructureError,
                    format!("expected exactly one key per object, found {n}; combine clauses with $and"),
                ))
            }
        };

        match key.as_str() {
            "$and" | "$or" => path.with(Segment::Key(key.clone()), |path| {
                let clauses = self.clauses(key, value, path)?;
                Ok(if key == "$and" {
                    FilterExpr::And(clauses)
                } else {
                    FilterExpr::Or(clauses)
                })
            }),
            k if k.starts_with('$') => {
                let message = if CmpOp::from_token(k).is_some() {
                    format!("comparison operator `{k}` must be nested under a field name")
                } else {
                    format!("unknown logical operator `{k}`")
                };
                Err(path.error(FilterErrorKind::StructureError, message))
            }
            _ => path.with(Segment::Key(key.clone()), |path| self.comparison(key, value, path)),
        }
    }

    fn clauses(&self, op: &str, value: &Value, path: &mut Path) -> Result<Vec<FilterExpr>, FilterError> {
        let items = value.as_array().ok_or_else(|| {
            path.error(
                FilterErrorKind::StructureError,
                format!("`{op}` expects a list of filters, found {}", json_type(value)),
            )
        })?;
        if items.len() < 2 {
            return Err(path.error(
                FilterErrorKind::StructureError,
                format!("`{op}` needs at least 2 clauses, found {}", items.len()),
            ));
        }
        items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                path.with(Segment::Index(i), |path| match item.as_object() {
                    Some(obj) => self.node(obj, path),
                    None => Err(path.error(
                        FilterErrorKind::StructureError,
                        format!("`{op}` clause must be an object, found {}", json_type(item)),
                    )),
                })
            })
            .collect()
    }

    fn comparison(&self, raw_field: &str, value: &Value, path: &mut Path) -> Result<FilterExpr, FilterError> {
        let (field, kind) = self
            .schema
            .resolve(raw_field)
            .ok_or_else(|| path.error(FilterErrorKind::UnknownField, format!("unknown field `{raw_field}`")))?;

        let (op, operand_value) = match value {
            Value::Object(ops) => {
                if ops.len() != 1 {
                    return Err(path.error(
                        FilterErrorKind::StructureError,
                        format!("expected exactly one operator, found {}", ops.len()),
                    ));
                }
                let (token, v) = ops.iter().next().expect("one entry");
                let op = CmpOp::from_token(token).ok_or_else(|| {
                    path.error(
                        FilterErrorKind::StructureError,
                        format!("unknown comparison operator `{token}`"),
                    )
                })?;
                path.0.push(Segment::Key(token.clone()));
                (op, v)
            }
            _ => {
                path.0.push(Segment::Key("$eq".into()));
                (CmpOp::Eq, value)
            }
        };

        let result = self.operand(op, kind, field, operand_value, path);
        path.0.pop();
        let value = result?;
        Ok(FilterExpr::Cmp {
            field: field.to_string(),
            op,
            value,
        })
    }

    fn operand(
        &self,
        op: CmpOp,
        kind: FieldKind,
        field: &str,
        value: &Value,
        path: &mut Path,
    ) -> Result<Operand, FilterError> {
        if op.is_range() && kind == FieldKind::Categorical {
            return Err(path.error(
                FilterErrorKind::TypeMismatch,
                format!("`{op}` requires a numeric field, `{field}` is categorical"),
            ));
        }
        if op.is_membership() {
            let items = value.as_array().ok_or_else(|| {
                path.error(
                    FilterErrorKind::StructureError,
                    format!("`{op}` expects a list, found {}", json_type(value)),
                )
            })?;
            if items.is_empty() {
                return Err(path.error(
                    FilterErrorKind::StructureError,
                    format!("`{op}` list must not be empty"),
                ));
            }
            let scalars = items
                .iter()
                .enumerate()
                .map(|(i, item)| path.with(Segment::Index(i), |path| scalar(item, kind, field, path)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Operand::List(scalars))
        } else {
            if value.is_array() {
                return Err(path.error(
                    FilterErrorKind::StructureError,
                    format!("`{op}` expects a single value; use $in/$nin for lists"),
                ));
            }
            scalar(value, kind, field, path).map(Operand::Scalar)
        }
    }
}

fn scalar(value: &Value, kind: FieldKind, field: &str, path: &Path) -> Result<Scalar, FilterError> {
    match (value, kind) {
        (Value::Number(n), FieldKind::Numeric) => n.as_f64().map(Scalar::Number).ok_or_else(|| {
            path.error(
                FilterErrorKind::TypeMismatch,
                format!("number `{n}` is not representable"),
            )
        }),
        (Value::String(s), FieldKind::Categorical) => Ok(Scalar::Text(s.clone())),
        (Value::Object(_), _) => Err(path.error(
            FilterErrorKind::StructureError,
            "nested object where a value was expected",
        )),
        (other, FieldKind::Numeric) => Err(path.error(
            FilterErrorKind::TypeMismatch,
            format!("`{field}` is numeric, found {}", json_type(other)),
        )),
        (other, FieldKind::Categorical) => Err(path.error(
            FilterErrorKind::TypeMismatch,
            format!("`{field}` is categorical, found {}", json_type(other)),
        )),
    }
}
