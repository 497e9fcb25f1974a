use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Column names reserved by the canonical CSV layout.
pub const RESERVED_COLUMNS: [&str; 3] = ["record_id", "persona_id", "label"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical { domain: Vec<String> },
    Numeric { min: f64, max: f64, unit: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
    #[serde(default)]
    pub quasi_identifier: bool,
    #[serde(default)]
    pub sensitive: bool,
}

impl Feature {
    pub fn categorical(name: &str, domain: &[&str]) -> Self {
        Feature {
            name: name.to_string(),
            kind: FeatureKind::Categorical {
                domain: domain.iter().map(|s| s.to_string()).collect(),
            },
            quasi_identifier: false,
            sensitive: false,
        }
    }

    pub fn numeric(name: &str, min: f64, max: f64, unit: &str) -> Self {
        Feature {
            name: name.to_string(),
            kind: FeatureKind::Numeric {
                min,
                max,
                unit: unit.to_string(),
            },
            quasi_identifier: false,
            sensitive: false,
        }
    }

    pub fn quasi_identifier(mut self) -> Self {
        self.quasi_identifier = true;
        self
    }

    pub fn sensitive(mut self) -> Self {
        self.sensitive = true;
        self
    }

    pub fn domain(&self) -> Option<&[String]> {
        match &self.kind {
            FeatureKind::Categorical { domain } => Some(domain),
            FeatureKind::Numeric { .. } => None,
        }
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        match self.kind {
            FeatureKind::Numeric { min, max, .. } => Some((min, max)),
            FeatureKind::Categorical { .. } => None,
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self.kind, FeatureKind::Categorical { .. })
    }

    /// Position of `token` in the categorical domain.
    pub fn domain_index(&self, token: &str) -> Option<usize> {
        self.domain()?.iter().position(|t| t == token)
    }
}

/// Ordered feature list shared by every record of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<Feature>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        let schema = FeatureSchema { features };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.features {
            let valid_ident = !f.name.is_empty()
                && f.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && !f.name.starts_with(|c: char| c.is_ascii_digit());
            if !valid_ident {
                return Err(Error::InvalidSchema(format!("`{}` is not an identifier", f.name)));
            }
            if RESERVED_COLUMNS.contains(&f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("`{}` is a reserved column", f.name)));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature `{}`", f.name)));
            }
            match &f.kind {
                FeatureKind::Categorical { domain } => {
                    if domain.is_empty() {
                        return Err(Error::InvalidSchema(format!("`{}` has an empty domain", f.name)));
                    }
                    let mut tokens = HashSet::new();
                    for t in domain {
                        if t.is_empty() || t.contains([',', '\n', '\r', '"']) {
                            return Err(Error::InvalidSchema(format!(
                                "`{}` has an unrepresentable token {t:?}",
                                f.name
                            )));
                        }
                        if !tokens.insert(t) {
                            return Err(Error::InvalidSchema(format!(
                                "`{}` repeats token `{t}`",
                                f.name
                            )));
                        }
                    }
                }
                FeatureKind::Numeric { min, max, .. } => {
                    if !(min.is_finite() && max.is_finite() && min < max) {
                        return Err(Error::InvalidSchema(format!(
                            "`{}` needs finite min < max, got [{min}, {max}]",
                            f.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn feature(&self, name: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn sensitive_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.features[i].sensitive).collect()
    }

    pub fn quasi_identifier_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.features[i].quasi_identifier).collect()
    }

    /// Canonical CSV header.
    pub fn header(&self) -> Vec<String> {
        let mut h = Vec::with_capacity(self.len() + 3);
        h.push("record_id".to_string());
        h.extend(self.features.iter().map(|f| f.name.clone()));
        h.push("persona_id".to_string());
        h.push("label".to_string());
        h
    }

    /// Hex SHA-256 of the schema's JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Default privacy-decision schema: request context, requested permission,
    /// hour of day and count of prior denials. `hour_of_day` is both the
    /// quasi-identifier and the sensitive attribute.
    pub fn default_privacy() -> Self {
        FeatureSchema {
            features: vec![
                Feature::categorical(
                    "context",
                    &["social", "ecommerce", "assistant", "finance", "health"],
                ),
                Feature::categorical(
                    "permission",
                    &["camera", "microphone", "location", "contacts", "storage"],
                ),
                Feature::numeric("hour_of_day", 0.0, 23.0, "hour")
                    .quasi_identifier()
                    .sensitive(),
                Feature::numeric("prior_denials", 0.0, 20.0, "count"),
            ],
        }
    }
}
