//! Categorical naive Bayes with Laplace smoothing.
//!
//! Numeric features are discretized into at most four bins whose edges are the
//! quartiles of the training values. Scoring happens in log space:
//! `log P(y) + sum_i log P(x_i | y)`, normalized over the three classes.

use serde::{Deserialize, Serialize};

use super::{ClassProbs, Classifier};
use crate::data::{FeatureKind, LabeledDataset, PrivacyRecord, Value, NUM_CLASSES};
use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NbEncoding {
    Categorical { domain: Vec<String> },
    /// `bin = #{edge : x > edge}`
    Binned { edges: Vec<f64> },
}

impl NbEncoding {
    pub fn cardinality(&self) -> usize {
        match self {
            NbEncoding::Categorical { domain } => domain.len(),
            NbEncoding::Binned { edges } => edges.len() + 1,
        }
    }

    /// Bin or domain position; `None` for missing or out-of-domain cells.
    pub fn position(&self, v: &Value) -> Option<usize> {
        match (self, v) {
            (NbEncoding::Categorical { domain }, Value::Cat(t)) => domain.iter().position(|d| d == t),
            (NbEncoding::Binned { edges }, Value::Num(x)) => Some(edges.iter().filter(|e| *x > **e).count()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbFeature {
    pub name: String,
    pub encoding: NbEncoding,
    /// Records of each class that observe this feature.
    pub class_totals: [f64; NUM_CLASSES],
    /// `conditionals[y][v] = P(x = v | Y = y)`
    pub conditionals: [Vec<f64>; NUM_CLASSES],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub smoothing: f64,
    pub class_priors: [f64; NUM_CLASSES],
    pub features: Vec<NbFeature>,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn quartile_edges(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&q| quantile(&sorted, q)).collect();
    edges.dedup();
    edges
}

pub fn nb_fit(train: &LabeledDataset, smoothing: f64) -> Result<NbModel> {
    if smoothing.is_nan() || smoothing < 1.0 {
        return Err(Error::ConfigInvalid(format!("smoothing {smoothing} must be >= 1")));
    }
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut labels = Vec::with_capacity(train.len());
    for r in &train.records {
        labels.push(r.label.ok_or(Error::MissingLabel { record_id: r.record_id })?.index());
    }
    let n = labels.len() as f64;
    let c = NUM_CLASSES as f64;
    let mut class_counts = [0.0; NUM_CLASSES];
    for &y in &labels {
        class_counts[y] += 1.0;
    }
    let class_priors = class_counts.map(|k| (k + smoothing) / (n + smoothing * c));

    let features = train
        .schema
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let encoding = match &f.kind {
                FeatureKind::Categorical { domain } => NbEncoding::Categorical { domain: domain.clone() },
                FeatureKind::Numeric { .. } => {
                    let observed: Vec<f64> = train.records.iter().filter_map(|r| r.values[i].as_num()).collect();
                    NbEncoding::Binned { edges: quartile_edges(&observed) }
                }
            };
            let m = encoding.cardinality();
            let mut counts: [Vec<f64>; NUM_CLASSES] = std::array::from_fn(|_| vec![0.0; m]);
            let mut totals = [0.0; NUM_CLASSES];
            for (r, &y) in train.records.iter().zip(&labels) {
                if let Some(v) = encoding.position(&r.values[i]) {
                    counts[y][v] += 1.0;
                    totals[y] += 1.0;
                }
            }
            let conditionals = std::array::from_fn(|y| {
                counts[y]
                    .iter()
                    .map(|k| (k + smoothing) / (totals[y] + smoothing * m as f64))
                    .collect()
            });
            NbFeature {
                name: f.name.clone(),
                encoding,
                class_totals: totals,
                conditionals,
            }
        })
        .collect();

    Ok(NbModel {
        smoothing,
        class_priors,
        features,
    })
}

/// Normalize log scores into probabilities.
pub fn normalize_log_scores(scores: [f64; NUM_CLASSES]) -> ClassProbs {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = scores.map(|s| (s - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

impl NbModel {
    /// Per-class log score; missing cells are skipped and out-of-domain tokens
    /// get the smoothing floor `a / (n_y + a * m)`.
    pub fn log_scores(&self, record: &PrivacyRecord) -> [f64; NUM_CLASSES] {
        let mut scores = self.class_priors.map(f64::ln);
        for (f, v) in self.features.iter().zip(&record.values) {
            if v.is_missing() {
                continue;
            }
            let m = f.encoding.cardinality() as f64;
            for (y, score) in scores.iter_mut().enumerate() {
                let p = match f.encoding.position(v) {
                    Some(pos) => f.conditionals[y][pos],
                    None => self.smoothing / (f.class_totals[y] + self.smoothing * m),
                };
                *score += p.ln();
            }
        }
        scores
    }
}

pub fn nb_posterior(model: &NbModel, record: &PrivacyRecord) -> ClassProbs {
    normalize_log_scores(model.log_scores(record))
}

impl Classifier for NbModel {
    fn predict_proba(&self, record: &PrivacyRecord) -> ClassProbs {
        nb_posterior(self, record)
    }
}
