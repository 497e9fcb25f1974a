//! Confusion matrices and macro-averaged classification rates.

use serde::{Deserialize, Serialize};

use crate::data::{PrivacyChoice, NUM_CLASSES};
use crate::error::{Error, Result};

/// Rows are the true class, columns the predicted class, both in the order
/// Allow, Deny, Ask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; NUM_CLASSES]; NUM_CLASSES]);

impl ConfusionMatrix {
    pub fn from_labels(truth: &[PrivacyChoice], predicted: &[PrivacyChoice]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::LengthMismatch { truth: truth.len(), predicted: predicted.len() });
        }
        let mut m = ConfusionMatrix::default();
        for (t, p) in truth.iter().zip(predicted) {
            m.0[t.index()][p.index()] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..NUM_CLASSES).map(|i| self.0[i][i]).sum()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for i in 0..NUM_CLASSES {
            for j in 0..NUM_CLASSES {
                self.0[i][j] += other.0[i][j];
            }
        }
    }

    pub fn support(&self, class: usize) -> u64 {
        self.0[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.0.iter().map(|row| row[class]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    pub fn recall(&self, class: usize) -> f64 {
        ratio(self.0[class][class], self.support(class))
    }

    pub fn precision(&self, class: usize) -> f64 {
        ratio(self.0[class][class], self.predicted(class))
    }

    pub fn f1(&self, class: usize) -> f64 {
        let p = self.precision(class);
        let r = self.recall(class);
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }

    pub fn metrics(&self) -> Metrics {
        let mean = |f: &dyn Fn(usize) -> f64| (0..NUM_CLASSES).map(f).sum::<f64>() / NUM_CLASSES as f64;
        Metrics {
            accuracy: self.accuracy(),
            macro_recall: mean(&|c| self.recall(c)),
            macro_precision: mean(&|c| self.precision(c)),
            macro_f1: mean(&|c| self.f1(c)),
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Macro averages run over all three classes, including absent ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_recall: f64,
    pub macro_precision: f64,
    pub macro_f1: f64,
}

impl Metrics {
    pub fn mean(items: &[Metrics]) -> Metrics {
        let n = items.len().max(1) as f64;
        let sum = |f: fn(&Metrics) -> f64| items.iter().map(f).sum::<f64>() / n;
        Metrics {
            accuracy: sum(|m| m.accuracy),
            macro_recall: sum(|m| m.macro_recall),
            macro_precision: sum(|m| m.macro_precision),
            macro_f1: sum(|m| m.macro_f1),
        }
    }

    pub fn all_in_unit_interval(&self) -> bool {
        [self.accuracy, self.macro_recall, self.macro_precision, self.macro_f1]
            .iter()
            .all(|x| (0.0..=1.0).contains(x))
    }
}

pub fn compute_metrics(truth: &[PrivacyChoice], predicted: &[PrivacyChoice]) -> Result<(Metrics, ConfusionMatrix)> {
    let m = ConfusionMatrix::from_labels(truth, predicted)?;
    if m.total() == 0 {
        return Err(Error::TooSmall { actual: 0, required: 1 });
    }
    Ok((m.metrics(), m))
}
