//! Predictors behind one classifier contract: naive Bayes, a two-hidden-layer
//! perceptron, the static rule baseline and the greedy Q-policy.

mod encode;
pub mod mlp;
pub mod nb;
pub mod rules;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{FeatureSchema, LabeledDataset, PrivacyChoice, PrivacyRecord, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::rl::{self, DatasetEnv, EpisodeLog, QPolicy, QPolicyDocument, RlConfig};

pub use encode::{ColumnEncoding, InputEncoder};
pub use mlp::{
    batch_gradient, batch_loss, cross_entropy, mlp_forward, mlp_train, softmax, Forward, MlpConfig,
    MlpModel, MlpParams,
};
pub use nb::{nb_fit, nb_posterior, NbModel};
pub use rules::{rule_predict, RuleModel, RuleTable};

/// Probabilities over (Allow, Deny, Ask).
pub type ClassProbs = [f64; NUM_CLASSES];

/// First index of the maximum; ties resolve Allow < Deny < Ask.
pub fn argmax(p: &ClassProbs) -> PrivacyChoice {
    let mut best = 0;
    for i in 1..NUM_CLASSES {
        if p[i] > p[best] {
            best = i;
        }
    }
    PrivacyChoice::from_index(best)
}

pub trait Classifier {
    fn predict_proba(&self, record: &PrivacyRecord) -> ClassProbs;

    fn predict(&self, record: &PrivacyRecord) -> PrivacyChoice {
        argmax(&self.predict_proba(record))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nb,
    Mlp,
    Rule,
    Q,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Nb, ModelKind::Mlp, ModelKind::Q, ModelKind::Rule];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Mlp => "mlp",
            ModelKind::Rule => "rule",
            ModelKind::Q => "q",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nb" => Ok(ModelKind::Nb),
            "mlp" => Ok(ModelKind::Mlp),
            "rule" => Ok(ModelKind::Rule),
            "q" => Ok(ModelKind::Q),
            other => Err(Error::ConfigInvalid(format!("unknown model `{other}`"))),
        }
    }
}

/// Training-time settings for every model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    pub nb_smoothing: f64,
    pub mlp: MlpConfig,
    /// Q-learning run used to fit the Q-policy classifier on a training set.
    pub q: RlConfig,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            nb_smoothing: nb::DEFAULT_SMOOTHING,
            mlp: MlpConfig::default(),
            q: q_classifier_config(),
        }
    }
}

/// Q-learning settings for fitting the policy classifier on replayed records:
/// default discount and exploration schedule, a smaller step size and longer
/// episodes so every state-action cell is visited many times.
pub fn q_classifier_config() -> RlConfig {
    RlConfig {
        alpha: 0.02,
        episodes: 200,
        steps_per_episode: 2_000,
        ..RlConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Nb(NbModel),
    Mlp(MlpModel),
    Rule(RuleModel),
    Q(QPolicy),
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Nb(_) => ModelKind::Nb,
            TrainedModel::Mlp(_) => ModelKind::Mlp,
            TrainedModel::Rule(_) => ModelKind::Rule,
            TrainedModel::Q(_) => ModelKind::Q,
        }
    }

    pub fn to_document(&self, schema: &FeatureSchema) -> ModelDocument {
        let params = match self {
            TrainedModel::Nb(m) => ModelParams::Nb(m.clone()),
            TrainedModel::Mlp(m) => ModelParams::Mlp(m.clone()),
            TrainedModel::Rule(m) => ModelParams::Rule(m.clone()),
            TrainedModel::Q(m) => ModelParams::Q(m.to_document()),
        };
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            schema_hash: schema.digest(),
            config_digest: None,
            params,
        }
    }

    pub fn from_document(doc: &ModelDocument, schema: &FeatureSchema) -> Result<Self> {
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported format version {}", doc.format_version)));
        }
        if doc.schema_hash != schema.digest() {
            return Err(Error::Model("schema hash does not match the dataset schema".into()));
        }
        Ok(match &doc.params {
            ModelParams::Nb(m) => TrainedModel::Nb(m.clone()),
            ModelParams::Mlp(m) => TrainedModel::Mlp(m.clone()),
            ModelParams::Rule(m) => TrainedModel::Rule(m.clone()),
            ModelParams::Q(d) => TrainedModel::Q(QPolicy::from_document(d)?),
        })
    }
}

impl Classifier for TrainedModel {
    fn predict_proba(&self, record: &PrivacyRecord) -> ClassProbs {
        match self {
            TrainedModel::Nb(m) => m.predict_proba(record),
            TrainedModel::Mlp(m) => m.predict_proba(record),
            TrainedModel::Rule(m) => m.predict_proba(record),
            TrainedModel::Q(m) => m.predict_proba(record),
        }
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum ModelParams {
    Nb(NbModel),
    Mlp(MlpModel),
    Rule(RuleModel),
    Q(QPolicyDocument),
}

/// Versioned JSON form of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub schema_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    #[serde(flatten)]
    pub params: ModelParams,
}

impl ModelDocument {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Fit a model of `kind` on `train`. `seed` replaces the seed in the settings.
pub fn fit_model(
    kind: ModelKind,
    train: &LabeledDataset,
    settings: &ModelSettings,
    seed: u64,
) -> Result<TrainedModel> {
    fit_model_logged(kind, train, settings, seed).map(|(m, _)| m)
}

/// Like [`fit_model`], also returning the episode log of a Q-policy fit.
pub fn fit_model_logged(
    kind: ModelKind,
    train: &LabeledDataset,
    settings: &ModelSettings,
    seed: u64,
) -> Result<(TrainedModel, Option<EpisodeLog>)> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(match kind {
        ModelKind::Nb => (TrainedModel::Nb(nb_fit(train, settings.nb_smoothing)?), None),
        ModelKind::Mlp => {
            let cfg = MlpConfig {
                seed,
                ..settings.mlp.clone()
            };
            (TrainedModel::Mlp(mlp_train(&cfg, train)?), None)
        }
        ModelKind::Rule => (TrainedModel::Rule(RuleModel::shipped(&train.schema)?), None),
        ModelKind::Q => {
            let cfg = RlConfig {
                seed,
                ..settings.q.clone()
            };
            let mut env = DatasetEnv::new(train)?;
            let (q, log) = rl::train_q(&mut env, &cfg)?;
            (TrainedModel::Q(rl::policy_as_classifier(q, &train.schema)?), Some(log))
        }
    })
}
