//! Food-composition records: ingestion from JSON lines, unit standardization
//! and sentence serialization for embedding.
//!
//! One record per line:
//!
//! ```text
//! {"id": "fcdb-0211", "name": "Cheese Provolon", "food_group": "Cheeses", "kind": "branded",
//!  "components": {"energy": {"value": 365.3, "unit": "kcal"}, "salt": {"value": 2.19, "unit": "g"}}}
//! ```
//!
//! Units are `g`, `mg`, `µg` (also `μg`, `ug`, `mcg`) and `kcal`. Mass values
//! are stored in grams and energy in kilocalories, all per 100 g.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::filter::{canonical_field_name, FieldSchema, Metadata, Scalar, SchemaConflict, FOOD_GROUP};

/// Components a branded (label-sourced) item may carry.
pub const LABEL_COMPONENTS: [&str; 9] = [
    "energy",
    "protein, total",
    "carbohydrates, total",
    "sugars, total",
    "fat, total",
    "fatty acids, total saturated",
    "fibre, total dietary",
    "salt",
    "sodium",
];

/// Upper bound on components for a lab-analyzed generic item.
pub const MAX_GENERIC_COMPONENTS: usize = 366;

/// Leading component order in sentences. Anything else follows alphabetically.
const SENTENCE_ORDER: [&str; 9] = LABEL_COMPONENTS;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate item id `{0}`")]
    DuplicateId(String),
    #[error("item `{id}`: unknown unit `{unit}` for component `{component}`")]
    UnknownUnit {
        id: String,
        component: String,
        unit: String,
    },
    #[error("item `{id}`: component `{component}` has negative or non-finite value {value}")]
    NegativeValue { id: String, component: String, value: f64 },
    #[error("item `{id}`: {message}")]
    InvalidRecord { id: String, message: String },
}

impl CorpusError {
    /// The record the error refers to, when it refers to one.
    pub fn item_id(&self) -> Option<&str> {
        match self {
            CorpusError::DuplicateId(id)
            | CorpusError::UnknownUnit { id, .. }
            | CorpusError::NegativeValue { id, .. }
            | CorpusError::InvalidRecord { id, .. } => Some(id),
            CorpusError::Io(_) | CorpusError::Parse { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoodKind {
    Branded,
    Generic,
}

/// Input unit as written in the corpus file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    Gram,
    Milligram,
    Microgram,
    Kilocalorie,
}

impl Unit {
    pub fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_lowercase().as_str() {
            "g" => Some(Unit::Gram),
            "mg" => Some(Unit::Milligram),
            "µg" | "μg" | "ug" | "mcg" => Some(Unit::Microgram),
            "kcal" => Some(Unit::Kilocalorie),
            _ => None,
        }
    }

    /// Converts a value in this unit to its base unit.
    pub fn standardize(self, value: f64) -> (f64, BaseUnit) {
        match self {
            Unit::Gram => (value, BaseUnit::Gram),
            Unit::Milligram => (value / 1e3, BaseUnit::Gram),
            Unit::Microgram => (value / 1e6, BaseUnit::Gram),
            Unit::Kilocalorie => (value, BaseUnit::Kilocalorie),
        }
    }
}

/// The two units values are stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseUnit {
    Gram,
    Kilocalorie,
}

impl BaseUnit {
    pub fn symbol(self) -> &'static str {
        match self {
            BaseUnit::Gram => "g",
            BaseUnit::Kilocalorie => "kcal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measure {
    pub value: f64,
    pub unit: BaseUnit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoodItem {
    pub id: String,
    pub name: String,
    pub food_group: String,
    pub kind: FoodKind,
    /// Canonical component name → standardized measurement.
    pub components: BTreeMap<String, Measure>,
}

impl FoodItem {
    /// Component values plus the `food group` label.
    pub fn metadata(&self) -> Metadata {
        let mut meta: Metadata = self
            .components
            .iter()
            .map(|(name, m)| (name.clone(), Scalar::Number(m.value)))
            .collect();
        meta.insert(FOOD_GROUP.to_string(), Scalar::Text(self.food_group.clone()));
        meta
    }

    /// Components in sentence order.
    pub fn ordered_components(&self) -> Vec<(&str, &Measure)> {
        let mut out: Vec<(&str, &Measure)> = SENTENCE_ORDER
            .iter()
            .filter_map(|name| self.components.get_key_value(*name))
            .map(|(k, v)| (k.as_str(), v))
            .collect();
        out.extend(
            self.components
                .iter()
                .filter(|(k, _)| !SENTENCE_ORDER.contains(&k.as_str()))
                .map(|(k, v)| (k.as_str(), v)),
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SerializedItem {
    pub item_id: String,
    pub sentence: String,
}

/// Renders an item as its embedding sentence, with the food group echoed.
///
/// `Food item '<name>' belongs to the food group '<group>', food group
/// '<group>'. Nutritional values per 100g: <component> is <value> <unit>, ...`
/// Values carry exactly two decimals. An item without components yields the
/// header alone, ending in `per 100g:`.
pub fn serialize(item: &FoodItem) -> SerializedItem {
    let mut sentence = format!(
        "Food item '{name}' belongs to the food group '{group}', food group '{group}'. \
         Nutritional values per 100g:",
        name = item.name,
        group = item.food_group,
    );
    let components = item.ordered_components();
    for (i, (name, measure)) in components.iter().enumerate() {
        let sep = if i == 0 { " " } else { ", " };
        let _ = write!(
            sentence,
            "{sep}{name} is {:.2} {}",
            measure.value,
            measure.unit.symbol()
        );
    }
    if !components.is_empty() {
        sentence.push('.');
    }
    SerializedItem {
        item_id: item.id.clone(),
        sentence,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    name: String,
    food_group: String,
    kind: FoodKind,
    components: BTreeMap<String, RawMeasure>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    value: f64,
    unit: String,
}

/// Reads a JSON-lines corpus. Blank lines are skipped; the first bad
/// record aborts ingestion.
pub fn ingest<R: BufRead>(source: R) -> Result<Vec<FoodItem>, CorpusError> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let item = standardize(raw)?;
        if !seen.insert(item.id.clone()) {
            return Err(CorpusError::DuplicateId(item.id));
        }
        items.push(item);
    }
    Ok(items)
}

pub fn ingest_path(path: &Path) -> Result<Vec<FoodItem>, CorpusError> {
    ingest(BufReader::new(File::open(path)?))
}

fn standardize(raw: RawRecord) -> Result<FoodItem, CorpusError> {
    let invalid = |message: String| CorpusError::InvalidRecord {
        id: raw.id.clone(),
        message,
    };
    if raw.id.trim().is_empty() {
        return Err(invalid("empty id".into()));
    }
    if raw.food_group.trim().is_empty() {
        return Err(invalid("empty food group".into()));
    }

    let mut components = BTreeMap::new();
    for (raw_name, measure) in &raw.components {
        let name = canonical_field_name(raw_name);
        if name.is_empty() || name == FOOD_GROUP {
            return Err(invalid(format!("invalid component name `{raw_name}`")));
        }
        let unit = Unit::parse(&measure.unit).ok_or_else(|| CorpusError::UnknownUnit {
            id: raw.id.clone(),
            component: name.clone(),
            unit: measure.unit.clone(),
        })?;
        if !measure.value.is_finite() || measure.value < 0.0 {
            return Err(CorpusError::NegativeValue {
                id: raw.id.clone(),
                component: name,
                value: measure.value,
            });
        }
        let (value, unit) = unit.standardize(measure.value);
        if components.insert(name.clone(), Measure { value, unit }).is_some() {
            return Err(invalid(format!("component `{name}` given twice")));
        }
    }

    match raw.kind {
        FoodKind::Branded => {
            if let Some(extra) = components.keys().find(|k| !LABEL_COMPONENTS.contains(&k.as_str())) {
                return Err(invalid(format!(
                    "branded items carry label components only, found `{extra}`"
                )));
            }
        }
        FoodKind::Generic => {
            if components.len() > MAX_GENERIC_COMPONENTS {
                return Err(invalid(format!(
                    "{} components exceeds the limit of {MAX_GENERIC_COMPONENTS}",
                    components.len()
                )));
            }
        }
    }

    Ok(FoodItem {
        id: raw.id,
        name: raw.name,
        food_group: raw.food_group,
        kind: raw.kind,
        components,
    })
}

/// Writes items back in the corpus format, in standardized units.
pub fn write_jsonl<W: Write>(items: &[FoodItem], mut out: W) -> Result<(), CorpusError> {
    for item in items {
        let raw = RawRecord {
            id: item.id.clone(),
            name: item.name.clone(),
            food_group: item.food_group.clone(),
            kind: item.kind,
            components: item
                .components
                .iter()
                .map(|(k, m)| {
                    (
                        k.clone(),
                        RawMeasure {
                            value: m.value,
                            unit: m.unit.symbol().to_string(),
                        },
                    )
                })
                .collect(),
        };
        serde_json::to_writer(&mut out, &raw).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Schema covering every component in `items` plus `food group`.
pub fn schema_for(items: &[FoodItem]) -> Result<FieldSchema, SchemaConflict> {
    FieldSchema::with_components(items.iter().flat_map(|i| i.components.keys()))
}

/// Distinct food groups, sorted.
pub fn food_groups(items: &[FoodItem]) -> BTreeSet<String> {
    items.iter().map(|i| i.food_group.clone()).collect()
}
