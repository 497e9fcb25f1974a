use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, PrivacyChoice, PrivacyRecord, Value};
use crate::error::{Error, Result};

/// Feature names the environment binds to.
pub const CONTEXT_FEATURE: &str = "context";
pub const PERMISSION_FEATURE: &str = "permission";
pub const DENIALS_FEATURE: &str = "prior_denials";

/// `prior_denials` quantized to {0, 1-3, 4+}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DenialBucket {
    Zero,
    Few,
    Many,
}

impl DenialBucket {
    pub const ALL: [DenialBucket; 3] = [DenialBucket::Zero, DenialBucket::Few, DenialBucket::Many];

    /// Rounds to the nearest count first, so imputed means such as 0.4 land in `Zero`.
    pub fn from_count(x: f64) -> Self {
        if x < 0.5 {
            DenialBucket::Zero
        } else if x < 3.5 {
            DenialBucket::Few
        } else {
            DenialBucket::Many
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            DenialBucket::Zero => "0",
            DenialBucket::Few => "1-3",
            DenialBucket::Many => "4+",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Retain,
    SetAllow,
    SetDeny,
    SetAsk,
}

pub const NUM_ACTIONS: usize = 4;

impl Action {
    pub const ALL: [Action; NUM_ACTIONS] =
        [Action::Retain, Action::SetAllow, Action::SetDeny, Action::SetAsk];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i]
    }

    /// Setting in force after taking this action.
    pub fn apply(self, current: PrivacyChoice) -> PrivacyChoice {
        match self {
            Action::Retain => current,
            Action::SetAllow => PrivacyChoice::Allow,
            Action::SetDeny => PrivacyChoice::Deny,
            Action::SetAsk => PrivacyChoice::Ask,
        }
    }
}

/// Privacy context seen by the agent. Categorical parts are domain indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub context: usize,
    pub permission: usize,
    pub setting: PrivacyChoice,
    pub bucket: DenialBucket,
}

/// Binding between a feature schema and the dense state index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSpace {
    pub contexts: Vec<String>,
    pub permissions: Vec<String>,
}

impl StateSpace {
    pub fn from_schema(schema: &FeatureSchema) -> Result<Self> {
        let domain = |name: &str| -> Result<Vec<String>> {
            schema
                .feature(name)
                .and_then(|f| f.domain())
                .map(<[String]>::to_vec)
                .ok_or_else(|| {
                    Error::ConfigInvalid(format!("schema needs a categorical `{name}` feature"))
                })
        };
        Ok(StateSpace {
            contexts: domain(CONTEXT_FEATURE)?,
            permissions: domain(PERMISSION_FEATURE)?,
        })
    }

    pub fn len(&self) -> usize {
        self.contexts.len() * self.permissions.len() * 3 * 3
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, s: &EnvState) -> usize {
        ((s.context * self.permissions.len() + s.permission) * 3 + s.setting.index()) * 3
            + s.bucket.index()
    }

    pub fn state(&self, index: usize) -> EnvState {
        let bucket = DenialBucket::ALL[index % 3];
        let rest = index / 3;
        let setting = PrivacyChoice::from_index(rest % 3);
        let rest = rest / 3;
        EnvState {
            context: rest / self.permissions.len(),
            permission: rest % self.permissions.len(),
            setting,
            bucket,
        }
    }

    /// `context|permission|setting|bucket`
    pub fn key(&self, s: &EnvState) -> String {
        format!(
            "{}|{}|{}|{}",
            self.contexts[s.context],
            self.permissions[s.permission],
            s.setting.token(),
            s.bucket.label()
        )
    }

    pub fn parse_key(&self, key: &str) -> Result<EnvState> {
        let bad = || Error::Model(format!("bad state key `{key}`"));
        let parts: Vec<&str> = key.split('|').collect();
        if parts.len() != 4 {
            return Err(bad());
        }
        Ok(EnvState {
            context: self.contexts.iter().position(|c| c == parts[0]).ok_or_else(bad)?,
            permission: self.permissions.iter().position(|p| p == parts[1]).ok_or_else(bad)?,
            setting: PrivacyChoice::parse_strict(parts[2]).map_err(|_| bad())?,
            bucket: DenialBucket::parse(parts[3]).ok_or_else(bad)?,
        })
    }
}

/// Column positions of the bound features within a schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureBinding {
    pub context: usize,
    pub permission: usize,
    pub denials: Option<usize>,
}

impl FeatureBinding {
    pub fn from_schema(schema: &FeatureSchema) -> Result<Self> {
        let idx = |name: &str| {
            schema
                .index_of(name)
                .ok_or_else(|| Error::ConfigInvalid(format!("schema has no `{name}` feature")))
        };
        Ok(FeatureBinding {
            context: idx(CONTEXT_FEATURE)?,
            permission: idx(PERMISSION_FEATURE)?,
            denials: schema.index_of(DENIALS_FEATURE),
        })
    }

    /// State for a record, with `setting` as the current setting. Missing or
    /// unknown categorical cells fall back to index 0; a missing denial count
    /// maps to the `Zero` bucket.
    pub fn state_of(
        &self,
        space: &StateSpace,
        record: &PrivacyRecord,
        setting: PrivacyChoice,
    ) -> EnvState {
        let pos = |v: &Value, domain: &[String]| {
            v.as_cat()
                .and_then(|t| domain.iter().position(|d| d == t))
                .unwrap_or(0)
        };
        let bucket = self
            .denials
            .and_then(|i| record.values[i].as_num())
            .map(DenialBucket::from_count)
            .unwrap_or(DenialBucket::Zero);
        EnvState {
            context: pos(&record.values[self.context], &space.contexts),
            permission: pos(&record.values[self.permission], &space.permissions),
            setting,
            bucket,
        }
    }
}
