use serde::{Deserialize, Serialize};

use super::qlearn::{QTable, QTableDocument};
use super::space::{Action, FeatureBinding, StateSpace};
use crate::data::{FeatureSchema, PrivacyChoice, PrivacyRecord};
use crate::error::Result;
use crate::models::{ClassProbs, Classifier};

/// Probability mass given to each non-predicted class.
pub const POLICY_SPREAD: f64 = 0.01;

/// Greedy Q-policy read as a classifier: the record becomes a state whose
/// current setting is `Ask`, and the greedy action's resulting setting is the
/// prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct QPolicy {
    pub space: StateSpace,
    pub binding: FeatureBinding,
    pub q: QTable,
}

pub fn policy_as_classifier(q: QTable, schema: &FeatureSchema) -> Result<QPolicy> {
    Ok(QPolicy {
        space: StateSpace::from_schema(schema)?,
        binding: FeatureBinding::from_schema(schema)?,
        q,
    })
}

impl QPolicy {
    pub fn action_for(&self, record: &PrivacyRecord) -> Action {
        let s = self.binding.state_of(&self.space, record, PrivacyChoice::Ask);
        self.q.greedy(self.space.index(&s))
    }

    pub fn to_document(&self) -> QPolicyDocument {
        QPolicyDocument {
            binding: self.binding,
            table: self.q.to_document(&self.space),
        }
    }

    pub fn from_document(doc: &QPolicyDocument) -> Result<Self> {
        let (space, q) = QTable::from_document(&doc.table)?;
        Ok(QPolicy {
            space,
            binding: doc.binding,
            q,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QPolicyDocument {
    pub binding: FeatureBinding,
    pub table: QTableDocument,
}

impl Classifier for QPolicy {
    fn predict_proba(&self, record: &PrivacyRecord) -> ClassProbs {
        let choice = self.action_for(record).apply(PrivacyChoice::Ask);
        let mut p = [POLICY_SPREAD; 3];
        p[choice.index()] = 1.0 - 2.0 * POLICY_SPREAD;
        p
    }
}
