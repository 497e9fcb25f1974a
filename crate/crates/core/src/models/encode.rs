use serde::{Deserialize, Serialize};

use crate::data::{FeatureKind, FeatureSchema, PrivacyRecord, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColumnEncoding {
    OneHot { domain: Vec<String> },
    MinMax { min: f64, max: f64 },
}

/// One-hot categoricals, min-max scaled numerics. Missing one-hot cells encode
/// as all zeros, missing numerics as the range midpoint 0.5.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEncoder {
    pub columns: Vec<ColumnEncoding>,
}

impl InputEncoder {
    pub fn from_schema(schema: &FeatureSchema) -> Self {
        let columns = schema
            .features
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Categorical { domain } => ColumnEncoding::OneHot { domain: domain.clone() },
                FeatureKind::Numeric { min, max, .. } => ColumnEncoding::MinMax { min: *min, max: *max },
            })
            .collect();
        InputEncoder { columns }
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                ColumnEncoding::OneHot { domain } => domain.len(),
                ColumnEncoding::MinMax { .. } => 1,
            })
            .sum()
    }

    pub fn encode_into(&self, record: &PrivacyRecord, out: &mut Vec<f64>) {
        out.clear();
        for (col, v) in self.columns.iter().zip(&record.values) {
            match col {
                ColumnEncoding::OneHot { domain } => {
                    let start = out.len();
                    out.resize(start + domain.len(), 0.0);
                    if let Value::Cat(t) = v {
                        if let Some(p) = domain.iter().position(|d| d == t) {
                            out[start + p] = 1.0;
                        }
                    }
                }
                ColumnEncoding::MinMax { min, max } => {
                    let x = match v {
                        Value::Num(x) => ((x - min) / (max - min)).clamp(0.0, 1.0),
                        _ => 0.5,
                    };
                    out.push(x);
                }
            }
        }
    }

    pub fn encode(&self, record: &PrivacyRecord) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        self.encode_into(record, &mut out);
        out
    }
}
