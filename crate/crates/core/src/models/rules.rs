use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ClassProbs, Classifier};
use crate::data::{FeatureSchema, PrivacyChoice, PrivacyRecord};
use crate::datagen::pair_key;
use crate::error::{Error, Result};
use crate::rl::{CONTEXT_FEATURE, PERMISSION_FEATURE};

/// Static (context, permission) policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    /// `"context|permission"` to choice.
    pub rules: BTreeMap<String, PrivacyChoice>,
    pub default_choice: PrivacyChoice,
}

impl RuleTable {
    /// Shipped privacy-protective policy: Deny any camera, microphone or
    /// location request; otherwise Ask in finance and health; otherwise Allow.
    pub fn shipped(schema: &FeatureSchema) -> Result<Self> {
        let domain = |name: &str| {
            schema
                .feature(name)
                .and_then(|f| f.domain())
                .ok_or_else(|| Error::ConfigInvalid(format!("schema needs a categorical `{name}` feature")))
        };
        let mut rules = BTreeMap::new();
        for c in domain(CONTEXT_FEATURE)? {
            for p in domain(PERMISSION_FEATURE)? {
                let choice = if matches!(p.as_str(), "camera" | "microphone" | "location") {
                    PrivacyChoice::Deny
                } else if matches!(c.as_str(), "finance" | "health") {
                    PrivacyChoice::Ask
                } else {
                    PrivacyChoice::Allow
                };
                rules.insert(pair_key(c, p), choice);
            }
        }
        Ok(RuleTable {
            rules,
            default_choice: PrivacyChoice::Allow,
        })
    }

    pub fn lookup(&self, context: &str, permission: &str) -> PrivacyChoice {
        self.rules
            .get(&pair_key(context, permission))
            .copied()
            .unwrap_or(self.default_choice)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleModel {
    pub table: RuleTable,
    pub context_index: usize,
    pub permission_index: usize,
}

impl RuleModel {
    pub fn new(table: RuleTable, schema: &FeatureSchema) -> Result<Self> {
        let idx = |name: &str| {
            schema
                .index_of(name)
                .ok_or_else(|| Error::ConfigInvalid(format!("schema has no `{name}` feature")))
        };
        Ok(RuleModel {
            table,
            context_index: idx(CONTEXT_FEATURE)?,
            permission_index: idx(PERMISSION_FEATURE)?,
        })
    }

    pub fn shipped(schema: &FeatureSchema) -> Result<Self> {
        Self::new(RuleTable::shipped(schema)?, schema)
    }
}

/// Missing context or permission cells fall through to the default choice.
pub fn rule_predict(model: &RuleModel, record: &PrivacyRecord) -> PrivacyChoice {
    match (
        record.values[model.context_index].as_cat(),
        record.values[model.permission_index].as_cat(),
    ) {
        (Some(c), Some(p)) => model.table.lookup(c, p),
        _ => model.table.default_choice,
    }
}

impl Classifier for RuleModel {
    fn predict_proba(&self, record: &PrivacyRecord) -> ClassProbs {
        let mut p = [0.0; 3];
        p[rule_predict(self, record).index()] = 1.0;
        p
    }
}
