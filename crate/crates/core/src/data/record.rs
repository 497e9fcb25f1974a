use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::choice::PrivacyChoice;
use super::schema::{FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

/// One feature cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Cat(String),
    Num(f64),
    Missing,
}

impl Value {
    pub fn cat(token: &str) -> Self {
        Value::Cat(token.to_string())
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, Value::Missing)
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Value::Cat(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }

    /// Bitwise equality for numerics so that deduplication keys are exact.
    pub fn same_as(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Num(a), Value::Num(b)) => a.to_bits() == b.to_bits() || a == b,
            _ => self == other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRecord {
    pub record_id: u64,
    pub values: Vec<Value>,
    pub label: Option<PrivacyChoice>,
    /// Generator ground truth; never a model feature.
    pub persona_id: Option<u32>,
}

impl PrivacyRecord {
    pub fn new(record_id: u64, values: Vec<Value>, label: Option<PrivacyChoice>) -> Self {
        PrivacyRecord {
            record_id,
            values,
            label,
            persona_id: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        !self.values.iter().any(Value::is_missing)
    }

    pub fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        let row = self.record_id as usize;
        if self.values.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                row,
                column: "*".into(),
                message: format!("{} values for {} features", self.values.len(), schema.len()),
            });
        }
        for (value, feature) in self.values.iter().zip(&schema.features) {
            let bad = |message: String| Error::SchemaMismatch {
                row,
                column: feature.name.clone(),
                message,
            };
            match (&feature.kind, value) {
                (_, Value::Missing) => {}
                (FeatureKind::Categorical { domain }, Value::Cat(t)) => {
                    if !domain.contains(t) {
                        return Err(bad(format!("token `{t}` not in domain")));
                    }
                }
                (FeatureKind::Numeric { min, max, .. }, Value::Num(x)) => {
                    if !(x.is_finite() && *x >= *min && *x <= *max) {
                        return Err(bad(format!("{x} outside [{min}, {max}]")));
                    }
                }
                (FeatureKind::Categorical { .. }, Value::Num(x)) => {
                    return Err(bad(format!("numeric {x} in categorical feature")));
                }
                (FeatureKind::Numeric { .. }, Value::Cat(t)) => {
                    return Err(bad(format!("token `{t}` in numeric feature")));
                }
            }
        }
        Ok(())
    }
}

/// Ordered records plus their schema. Immutable once built; pipeline stages
/// produce new datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub schema: FeatureSchema,
    pub records: Vec<PrivacyRecord>,
    pub provenance: String,
}

impl LabeledDataset {
    pub fn new(
        schema: FeatureSchema,
        records: Vec<PrivacyRecord>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let ds = LabeledDataset {
            schema,
            records,
            provenance: provenance.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let mut ids = HashSet::with_capacity(self.records.len());
        for r in &self.records {
            r.validate(&self.schema)?;
            if !ids.insert(r.record_id) {
                return Err(Error::SchemaMismatch {
                    row: r.record_id as usize,
                    column: "record_id".into(),
                    message: format!("duplicate record_id {}", r.record_id),
                });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same schema and provenance, different records.
    pub fn with_records(&self, records: Vec<PrivacyRecord>) -> Self {
        LabeledDataset {
            schema: self.schema.clone(),
            records,
            provenance: self.provenance.clone(),
        }
    }

    /// Records at the given indices, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        self.with_records(indices.iter().map(|&i| self.records[i].clone()).collect())
    }

    pub fn prefix(&self, n: usize) -> Self {
        self.with_records(self.records[..n.min(self.len())].to_vec())
    }

    pub fn labels(&self) -> Vec<Option<PrivacyChoice>> {
        self.records.iter().map(|r| r.label).collect()
    }

    /// Per-class counts in class order; unlabeled records are skipped.
    pub fn label_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for r in &self.records {
            if let Some(l) = r.label {
                counts[l.index()] += 1;
            }
        }
        counts
    }

    pub fn max_record_id(&self) -> Option<u64> {
        self.records.iter().map(|r| r.record_id).max()
    }

    pub fn missing_cells(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.values.iter().filter(|v| v.is_missing()).count())
            .sum()
    }
}
