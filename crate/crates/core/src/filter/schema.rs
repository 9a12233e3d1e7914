use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Name of the categorical field every record carries.
pub const FOOD_GROUP: &str = "food group";

/// Trim, collapse internal whitespace and lowercase a field name.
///
/// Commas and other punctuation are kept, so `"Protein,  Total "` becomes
/// `"protein, total"`.
pub fn canonical_field_name(raw: &str) -> String {
    raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// Grams or kilocalories per 100 g.
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("field `{field}` is already declared as {existing:?}")]
pub struct SchemaConflict {
    pub field: String,
    pub existing: FieldKind,
}

/// The set of queryable fields, keyed by canonical name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldSchema {
    fields: BTreeMap<String, FieldKind>,
}

impl Default for FieldSchema {
    fn default() -> Self {
        Self::new()
    }
}

impl FieldSchema {
    /// A schema holding only the `food group` field.
    pub fn new() -> Self {
        let mut fields = BTreeMap::new();
        fields.insert(FOOD_GROUP.to_string(), FieldKind::Categorical);
        Self { fields }
    }

    /// Schema with `food group` plus the given numeric component names.
    pub fn with_components<I, S>(components: I) -> Result<Self, SchemaConflict>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut schema = Self::new();
        for name in components {
            schema.insert(name.as_ref(), FieldKind::Numeric)?;
        }
        Ok(schema)
    }

    /// Adds a field. Re-declaring a field with the same kind is a no-op.
    pub fn insert(&mut self, name: &str, kind: FieldKind) -> Result<(), SchemaConflict> {
        let canonical = canonical_field_name(name);
        match self.fields.get(&canonical) {
            Some(existing) if *existing != kind => Err(SchemaConflict {
                field: canonical,
                existing: *existing,
            }),
            Some(_) => Ok(()),
            None => {
                self.fields.insert(canonical, kind);
                Ok(())
            }
        }
    }

    /// Looks a raw (possibly non-canonical) name up, returning its canonical form.
    pub fn resolve(&self, raw: &str) -> Option<(&str, FieldKind)> {
        let canonical = canonical_field_name(raw);
        self.fields
            .get_key_value(&canonical)
            .map(|(name, kind)| (name.as_str(), *kind))
    }

    pub fn kind(&self, canonical: &str) -> Option<FieldKind> {
        self.fields.get(canonical).copied()
    }

    pub fn contains(&self, canonical: &str) -> bool {
        self.fields.contains_key(canonical)
    }

    /// Fields in lexicographic order.
    pub fn fields(&self) -> impl Iterator<Item = (&str, FieldKind)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn numeric_fields(&self) -> impl Iterator<Item = &str> {
        self.fields()
            .filter(|(_, kind)| *kind == FieldKind::Numeric)
            .map(|(name, _)| name)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}
