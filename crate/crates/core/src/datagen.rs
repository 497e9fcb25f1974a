//! Persona-mixture simulator for privacy-decision data.
//!
//! Each record draws a latent persona from the mixture, draws its features from
//! that persona's distributions and its label from the persona's propensity
//! vector for the record's (context, permission) pair. The same personas drive
//! the reinforcement-learning environment through [`sample_transition`].

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{
    Feature, FeatureKind, FeatureSchema, LabeledDataset, PrivacyChoice, PrivacyRecord, Value,
};
use crate::error::{Error, Result};
use crate::rl::{Action, DenialBucket, EnvState, StateSpace, CONTEXT_FEATURE, DENIALS_FEATURE, PERMISSION_FEATURE};
use crate::seed::{self, Rng};

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureDistribution {
    /// Unnormalized weights over the feature's domain, in domain order.
    Categorical { weights: Vec<f64> },
    /// Normal(mean, spread) clamped to the feature range, optionally rounded.
    Numeric {
        mean: f64,
        spread: f64,
        #[serde(default)]
        integer: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub persona_id: u32,
    pub name: String,
    /// `"context|permission"` to probabilities over (Allow, Deny, Ask).
    pub context_propensities: BTreeMap<String, [f64; 3]>,
    pub feature_distributions: BTreeMap<String, FeatureDistribution>,
    #[serde(default)]
    pub drift: f64,
}

pub fn pair_key(context: &str, permission: &str) -> String {
    format!("{context}|{permission}")
}

impl Persona {
    pub fn propensity(&self, context: &str, permission: &str) -> Option<&[f64; 3]> {
        self.context_propensities.get(&pair_key(context, permission))
    }

    /// Preference distribution after drift: with probability `drift` the drawn
    /// preference is replaced by one of the other two choices uniformly.
    pub fn drifted_propensity(&self, context: &str, permission: &str) -> Option<[f64; 3]> {
        let p = self.propensity(context, permission)?;
        let d = self.drift;
        Some([0, 1, 2].map(|i| (1.0 - d) * p[i] + d * (1.0 - p[i]) / 2.0))
    }

    pub fn sample_feature(&self, feature: &Feature, rng: &mut Rng) -> Value {
        match (&feature.kind, self.feature_distributions.get(&feature.name)) {
            (FeatureKind::Categorical { domain }, Some(FeatureDistribution::Categorical { weights })) => {
                Value::Cat(domain[sample_index(weights, rng)].clone())
            }
            (
                FeatureKind::Numeric { min, max, .. },
                Some(FeatureDistribution::Numeric { mean, spread, integer }),
            ) => {
                let mut x = if *spread > 0.0 {
                    Normal::new(*mean, *spread).expect("validated spread").sample(rng)
                } else {
                    *mean
                };
                // continuous values are recorded to hundredths so they survive
                // the six-digit CSV form
                x = if *integer { x.round() } else { (x * 100.0).round() / 100.0 };
                Value::Num(x.clamp(*min, *max))
            }
            // config validation rules this out
            _ => Value::Missing,
        }
    }

    fn validate(&self, schema: &FeatureSchema) -> Result<()> {
        let bad = |m: String| Error::ConfigInvalid(format!("persona {} ({}): {m}", self.persona_id, self.name));
        if !(0.0..=0.5).contains(&self.drift) {
            return Err(bad(format!("drift {} outside [0, 0.5]", self.drift)));
        }
        for (key, p) in &self.context_propensities {
            let sum: f64 = p.iter().sum();
            if p.iter().any(|x| x.is_nan() || *x < 0.0) || (sum - 1.0).abs() > TOLERANCE {
                return Err(bad(format!("propensity for `{key}` is not a probability vector: {p:?}")));
            }
        }
        if let (Some(ctx), Some(perm)) = (
            schema.feature(CONTEXT_FEATURE).and_then(Feature::domain),
            schema.feature(PERMISSION_FEATURE).and_then(Feature::domain),
        ) {
            for c in ctx {
                for q in perm {
                    if self.propensity(c, q).is_none() {
                        return Err(bad(format!("no propensity for `{}`", pair_key(c, q))));
                    }
                }
            }
        } else {
            return Err(Error::ConfigInvalid(
                "schema needs categorical `context` and `permission` features".into(),
            ));
        }
        for f in &schema.features {
            match (&f.kind, self.feature_distributions.get(&f.name)) {
                (FeatureKind::Categorical { domain }, Some(FeatureDistribution::Categorical { weights })) => {
                    if weights.len() != domain.len()
                        || weights.iter().any(|w| w.is_nan() || *w < 0.0)
                        || weights.iter().sum::<f64>() <= 0.0
                    {
                        return Err(bad(format!("bad weights for `{}`", f.name)));
                    }
                }
                (FeatureKind::Numeric { .. }, Some(FeatureDistribution::Numeric { mean, spread, .. })) => {
                    if !mean.is_finite() || *spread < 0.0 || !spread.is_finite() {
                        return Err(bad(format!("bad distribution for `{}`", f.name)));
                    }
                }
                _ => return Err(bad(format!("missing or mismatched distribution for `{}`", f.name))),
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub schema: FeatureSchema,
    pub personas: Vec<Persona>,
    pub mixture_weights: Vec<f64>,
    pub volume: usize,
    pub label_noise: f64,
    pub missing_rate: f64,
    pub duplicate_rate: f64,
    pub master_seed: u64,
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        if self.personas.is_empty() {
            return Err(Error::ConfigInvalid("no personas".into()));
        }
        if self.mixture_weights.len() != self.personas.len() {
            return Err(Error::ConfigInvalid(format!(
                "{} mixture weights for {} personas",
                self.mixture_weights.len(),
                self.personas.len()
            )));
        }
        let sum: f64 = self.mixture_weights.iter().sum();
        if self.mixture_weights.iter().any(|w| w.is_nan() || *w < 0.0) || (sum - 1.0).abs() > TOLERANCE {
            return Err(Error::ConfigInvalid(format!("mixture weights sum to {sum}")));
        }
        for (name, rate) in [
            ("label_noise", self.label_noise),
            ("missing_rate", self.missing_rate),
            ("duplicate_rate", self.duplicate_rate),
        ] {
            if !(0.0..=0.3).contains(&rate) {
                return Err(Error::ConfigInvalid(format!("{name} {rate} outside [0, 0.3]")));
            }
        }
        if self.volume < 1 {
            return Err(Error::ConfigInvalid("volume must be at least 1".into()));
        }
        for p in &self.personas {
            p.validate(&self.schema)?;
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        crate::digest_json(self)
    }
}

pub(crate) fn sample_index(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // rounding at the upper edge: last positive weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Replace `choice` by one of the two other choices, uniformly.
pub(crate) fn flip_choice(choice: PrivacyChoice, rng: &mut Rng) -> PrivacyChoice {
    let step = 1 + rng.random_range(0..2usize);
    PrivacyChoice::from_index((choice.index() + step) % 3)
}

pub fn generate(config: &GeneratorConfig) -> Result<LabeledDataset> {
    config.validate()?;
    let schema = &config.schema;
    let ctx_i = schema.index_of(CONTEXT_FEATURE).expect("validated");
    let perm_i = schema.index_of(PERMISSION_FEATURE).expect("validated");
    let mut records: Vec<PrivacyRecord> = Vec::with_capacity(config.volume);
    for i in 0..config.volume {
        let mut rng = seed::stream(config.master_seed, "generate", &[i as u64]);
        let record_id = i as u64 + 1;
        if i > 0 && rng.random::<f64>() < config.duplicate_rate {
            let j = rng.random_range(0..i);
            let mut copy = records[j].clone();
            copy.record_id = record_id;
            records.push(copy);
            continue;
        }
        let p_idx = sample_index(&config.mixture_weights, &mut rng);
        let persona = &config.personas[p_idx];
        let mut values: Vec<Value> = schema
            .features
            .iter()
            .map(|f| persona.sample_feature(f, &mut rng))
            .collect();
        let ctx = values[ctx_i].as_cat().expect("categorical");
        let perm = values[perm_i].as_cat().expect("categorical");
        let propensity = persona.propensity(ctx, perm).expect("validated");
        let mut label = PrivacyChoice::from_index(sample_index(propensity, &mut rng));
        if rng.random::<f64>() < config.label_noise {
            label = flip_choice(label, &mut rng);
        }
        for v in values.iter_mut() {
            if rng.random::<f64>() < config.missing_rate {
                *v = Value::Missing;
            }
        }
        records.push(PrivacyRecord {
            record_id,
            values,
            label: Some(label),
            persona_id: Some(persona.persona_id),
        });
    }
    LabeledDataset::new(schema.clone(), records, "simulated-privacy")
}

/// One environment step for a fixed persona.
///
/// Reward is +1 when the setting in force after `action` matches the persona's
/// preferred choice for the state's (context, permission), drawn from its
/// drifted propensity vector, and -1 otherwise. The next state is a fresh
/// (context, permission, denial bucket) drawn from the persona, carrying the
/// post-action setting forward.
pub fn sample_transition(
    persona: &Persona,
    schema: &FeatureSchema,
    space: &StateSpace,
    state: &EnvState,
    action: Action,
    rng: &mut Rng,
) -> (EnvState, f64) {
    let setting = action.apply(state.setting);
    let propensity = persona
        .propensity(&space.contexts[state.context], &space.permissions[state.permission])
        .expect("persona covers the state space");
    let mut preferred = PrivacyChoice::from_index(sample_index(propensity, rng));
    if persona.drift > 0.0 && rng.random::<f64>() < persona.drift {
        preferred = flip_choice(preferred, rng);
    }
    let reward = if setting == preferred { 1.0 } else { -1.0 };
    let next = fresh_state(persona, schema, space, setting, rng);
    (next, reward)
}

/// Draw (context, permission, bucket) from the persona's feature distributions.
pub fn fresh_state(
    persona: &Persona,
    schema: &FeatureSchema,
    space: &StateSpace,
    setting: PrivacyChoice,
    rng: &mut Rng,
) -> EnvState {
    let draw_cat = |name: &str, rng: &mut Rng| -> usize {
        match persona.feature_distributions.get(name) {
            Some(FeatureDistribution::Categorical { weights }) => sample_index(weights, rng),
            _ => 0,
        }
    };
    let context = draw_cat(CONTEXT_FEATURE, rng);
    let permission = draw_cat(PERMISSION_FEATURE, rng);
    let bucket = match schema.feature(DENIALS_FEATURE) {
        Some(f) => persona
            .sample_feature(f, rng)
            .as_num()
            .map(DenialBucket::from_count)
            .unwrap_or(DenialBucket::Zero),
        None => DenialBucket::Zero,
    };
    debug_assert!(context < space.contexts.len() && permission < space.permissions.len());
    EnvState {
        context,
        permission,
        setting,
        bucket,
    }
}

// ---------------------------------------------------------------------------
// shipped benchmark configuration

const CONTEXTS: [&str; 5] = ["social", "ecommerce", "assistant", "finance", "health"];
const PERMISSIONS: [&str; 5] = ["camera", "microphone", "location", "contacts", "storage"];

fn table(confidence: f64, rule: impl Fn(&str, &str) -> PrivacyChoice) -> BTreeMap<String, [f64; 3]> {
    let mut out = BTreeMap::new();
    for c in CONTEXTS {
        for p in PERMISSIONS {
            let preferred = rule(c, p);
            let mut v = [(1.0 - confidence) / 2.0; 3];
            v[preferred.index()] = confidence;
            out.insert(pair_key(c, p), v);
        }
    }
    out
}

fn distributions(context_weights: [f64; 5], denials_mean: f64, denials_spread: f64) -> BTreeMap<String, FeatureDistribution> {
    BTreeMap::from([
        (
            CONTEXT_FEATURE.to_string(),
            FeatureDistribution::Categorical { weights: context_weights.to_vec() },
        ),
        (
            PERMISSION_FEATURE.to_string(),
            FeatureDistribution::Categorical { weights: vec![1.0; 5] },
        ),
        (
            "hour_of_day".to_string(),
            FeatureDistribution::Numeric { mean: 13.5, spread: 4.0, integer: false },
        ),
        (
            DENIALS_FEATURE.to_string(),
            FeatureDistribution::Numeric { mean: denials_mean, spread: denials_spread, integer: true },
        ),
    ])
}

fn persona(
    persona_id: u32,
    name: &str,
    confidence: f64,
    drift: f64,
    dists: BTreeMap<String, FeatureDistribution>,
    rule: impl Fn(&str, &str) -> PrivacyChoice,
) -> Persona {
    Persona {
        persona_id,
        name: name.to_string(),
        context_propensities: table(confidence, rule),
        feature_distributions: dists,
        drift,
    }
}

pub fn default_personas() -> Vec<Persona> {
    use PrivacyChoice::{Allow, Ask, Deny};
    vec![
        persona(0, "privacy-maximalist", 0.85, 0.0, distributions([1.0; 5], 8.0, 2.0), |_, p| {
            if p == "storage" { Ask } else { Deny }
        }),
        persona(1, "convenience-first", 0.88, 0.0, distributions([1.5, 1.5, 1.0, 0.5, 0.5], 0.0, 0.3), |_, _| {
            Allow
        }),
        persona(2, "context-sensitive", 0.88, 0.0, distributions([1.0; 5], 2.0, 0.6), |c, p| {
            let fits = matches!(
                (c, p),
                ("social", "camera" | "contacts")
                    | ("ecommerce", "location" | "storage")
                    | ("assistant", "microphone" | "contacts")
                    | ("finance", "camera" | "storage")
                    | ("health", "location" | "microphone")
            );
            if fits { Allow } else { Deny }
        }),
        persona(3, "finance-guarded", 0.85, 0.0, distributions([0.7, 0.7, 0.7, 1.5, 1.5], 2.0, 0.6), |c, _| {
            if c == "finance" || c == "health" { Ask } else { Allow }
        }),
        persona(4, "social-sharer", 0.8, 0.0, distributions([2.0, 1.0, 1.5, 0.5, 0.5], 8.0, 2.0), |c, p| {
            if c == "social" || c == "assistant" {
                Allow
            } else if p == "location" {
                Deny
            } else {
                Ask
            }
        }),
        persona(5, "ambivalent", 0.6, 0.1, distributions([1.0; 5], 8.0, 2.0), |_, p| {
            if p == "camera" { Deny } else { Ask }
        }),
    ]
}

/// Shipped benchmark configuration: six personas over the default schema,
/// 10,000 records, seed 42.
pub fn default_config() -> GeneratorConfig {
    GeneratorConfig {
        schema: FeatureSchema::default_privacy(),
        personas: default_personas(),
        mixture_weights: vec![0.2, 0.2, 0.2, 0.15, 0.15, 0.1],
        volume: 10_000,
        label_noise: 0.05,
        missing_rate: 0.03,
        duplicate_rate: 0.02,
        master_seed: 42,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_allow_config() -> GeneratorConfig {
        let mut p = default_personas().remove(1);
        p.context_propensities = table(1.0, |_, _| PrivacyChoice::Allow);
        GeneratorConfig {
            schema: FeatureSchema::default_privacy(),
            personas: vec![p],
            mixture_weights: vec![1.0],
            volume: 1,
            label_noise: 0.0,
            missing_rate: 0.0,
            duplicate_rate: 0.0,
            master_seed: 3,
        }
    }

    #[test]
    fn default_config_shape() {
        let cfg = default_config();
        cfg.validate().unwrap();
        assert_eq!(cfg.volume, 10_000);
        assert_eq!(cfg.personas.len(), 6);
        assert!((cfg.mixture_weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let ctx = cfg.schema.feature("context").unwrap().domain().unwrap();
        for c in ["social", "ecommerce", "assistant"] {
            assert!(ctx.iter().any(|t| t == c));
        }
        assert_eq!(cfg.master_seed, 42);
        assert_eq!((cfg.label_noise, cfg.missing_rate, cfg.duplicate_rate), (0.05, 0.03, 0.02));
    }

    #[test]
    fn degenerate_mixture_gives_single_allow() {
        let ds = generate(&single_allow_config()).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.records[0].label, Some(PrivacyChoice::Allow));
        assert!(ds.records[0].is_complete());
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = default_config();
        cfg.mixture_weights[0] += 0.1;
        assert!(matches!(generate(&cfg), Err(Error::ConfigInvalid(_))));
        let mut cfg = default_config();
        cfg.missing_rate = 0.5;
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
        let mut cfg = default_config();
        cfg.personas[0].drift = 0.6;
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
        let mut cfg = default_config();
        cfg.personas[2].context_propensities.insert("social|camera".into(), [0.5, 0.5, 0.5]);
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
        let mut cfg = default_config();
        cfg.volume = 0;
        assert!(matches!(cfg.validate(), Err(Error::ConfigInvalid(_))));
    }

    #[test]
    fn exact_volume_with_duplicates() {
        let mut cfg = default_config();
        cfg.volume = 500;
        cfg.duplicate_rate = 0.3;
        let ds = generate(&cfg).unwrap();
        assert_eq!(ds.len(), 500);
        assert_eq!(ds.records.last().unwrap().record_id, 500);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = default_config();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: GeneratorConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn transition_rewards_match_and_mismatch() {
        let schema = FeatureSchema::default_privacy();
        let space = StateSpace::from_schema(&schema).unwrap();
        let mut p = default_personas().remove(0);
        p.context_propensities = table(1.0, |_, _| PrivacyChoice::Deny);
        let state = EnvState {
            context: 0,
            permission: 0,
            setting: PrivacyChoice::Allow,
            bucket: DenialBucket::Zero,
        };
        let mut rng = seed::rng_from(1);
        let (next, r) = sample_transition(&p, &schema, &space, &state, Action::SetDeny, &mut rng);
        assert_eq!(r, 1.0);
        assert_eq!(next.setting, PrivacyChoice::Deny);
        let (next, r) = sample_transition(&p, &schema, &space, &state, Action::Retain, &mut rng);
        assert_eq!(r, -1.0);
        assert_eq!(next.setting, PrivacyChoice::Allow);
    }
}
