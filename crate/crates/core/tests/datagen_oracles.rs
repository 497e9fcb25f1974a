mod common;

use privpref::data::PrivacyChoice;
use privpref::datagen::{default_config, fresh_state, generate, sample_transition, GeneratorConfig, Persona};
use privpref::digest_json;
use privpref::rl::{Action, StateSpace};
use privpref::seed::stream;
use rand::Rng as _;

#[test]
fn degenerate_mixture_gives_one_allow_record() {
    let mut persona: Persona = default_config().personas[1].clone();
    for p in persona.context_propensities.values_mut() {
        *p = [1.0, 0.0, 0.0];
    }
    let cfg = GeneratorConfig {
        personas: vec![persona],
        mixture_weights: vec![1.0],
        volume: 1,
        label_noise: 0.0,
        missing_rate: 0.0,
        duplicate_rate: 0.0,
        ..default_config()
    };
    let ds = generate(&cfg).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds.records[0].label, Some(PrivacyChoice::Allow));
}

#[test]
fn same_seed_same_bytes() {
    let cfg = GeneratorConfig { volume: 2_000, ..default_config() };
    let a = generate(&cfg).unwrap();
    let b = generate(&cfg).unwrap();
    assert_eq!(digest_json(&a), digest_json(&b));
    let c = generate(&GeneratorConfig { master_seed: 43, ..cfg }).unwrap();
    assert_ne!(digest_json(&a), digest_json(&c));
}

#[test]
fn smaller_volume_is_a_prefix() {
    let big = common::generated(3_000, 5);
    let small = common::generated(1_000, 5);
    assert_eq!(small.records[..], big.records[..1_000]);
}

/// Marginal label distribution implied by the configuration: mixture weight
/// times the mean over (context, permission) of the propensity vector under
/// the persona's context and permission weights, then label noise.
fn implied_marginals(cfg: &GeneratorConfig) -> [f64; 3] {
    let mut out = [0.0; 3];
    let ctx = cfg.schema.feature("context").unwrap().domain().unwrap().to_vec();
    let perm = cfg.schema.feature("permission").unwrap().domain().unwrap().to_vec();
    for (persona, w) in cfg.personas.iter().zip(&cfg.mixture_weights) {
        let weights = |name: &str| -> Vec<f64> {
            match &persona.feature_distributions[name] {
                privpref::datagen::FeatureDistribution::Categorical { weights } => {
                    let z: f64 = weights.iter().sum();
                    weights.iter().map(|x| x / z).collect()
                }
                _ => unreachable!(),
            }
        };
        let (wc, wp) = (weights("context"), weights("permission"));
        for (i, c) in ctx.iter().enumerate() {
            for (j, p) in perm.iter().enumerate() {
                let v = persona.drifted_propensity(c, p).unwrap();
                for k in 0..3 {
                    out[k] += w * wc[i] * wp[j] * v[k];
                }
            }
        }
    }
    let e = cfg.label_noise;
    let clean = out;
    for k in 0..3 {
        out[k] = (1.0 - e) * clean[k] + e * (1.0 - clean[k]) / 2.0;
    }
    out
}

#[test]
fn label_marginals_within_three_sigma_at_20k() {
    // duplicates copy earlier records and so follow the same marginals
    let cfg = GeneratorConfig { volume: 20_000, ..default_config() };
    let ds = generate(&cfg).unwrap();
    let p = implied_marginals(&cfg);
    let n = ds.len() as f64;
    let counts = ds.label_counts();
    for k in 0..3 {
        let sigma = (n * p[k] * (1.0 - p[k])).sqrt();
        let diff = (counts[k] as f64 - n * p[k]).abs();
        assert!(diff <= 3.0 * sigma, "class {k}: {} vs {:.1} (3 sigma {:.1})", counts[k], n * p[k], 3.0 * sigma);
    }
}

#[test]
fn missing_rate_and_domain() {
    let ds = common::generated(10_000, 3);
    let cells = (ds.len() * ds.schema.len()) as f64;
    let rate = ds.missing_cells() as f64 / cells;
    assert!((rate - 0.03).abs() < 0.005, "{rate}");
    ds.validate().unwrap();
    assert!(ds.records.iter().all(|r| r.persona_id.is_some()));
    assert!(ds.schema.feature("persona_id").is_none());
    let ctx = ds.schema.feature("context").unwrap().domain().unwrap();
    for c in ["social", "ecommerce", "assistant"] {
        assert!(ctx.iter().any(|t| t == c));
    }
}

#[test]
fn transition_rewards_by_construction() {
    let cfg = default_config();
    let space = StateSpace::from_schema(&cfg.schema).unwrap();
    let mut persona = cfg.personas[0].clone();
    for p in persona.context_propensities.values_mut() {
        *p = [0.0, 1.0, 0.0];
    }
    let mut rng = stream(1, "test", &[]);
    for _ in 0..200 {
        let s = fresh_state(&persona, &cfg.schema, &space, PrivacyChoice::Allow, &mut rng);
        let (_, r) = sample_transition(&persona, &cfg.schema, &space, &s, Action::SetDeny, &mut rng);
        assert_eq!(r, 1.0);
        let (_, r) = sample_transition(&persona, &cfg.schema, &space, &s, Action::Retain, &mut rng);
        assert_eq!(r, -1.0);
    }
}

/// Under a uniform random action from a uniform random setting, the
/// post-action setting is uniform over the three choices, so it matches the
/// drawn preference with probability exactly 1/3 whatever the propensities.
#[test]
fn uniform_policy_mean_reward_matches_closed_form() {
    let cfg = default_config();
    let space = StateSpace::from_schema(&cfg.schema).unwrap();
    let n = 10_000;
    for persona in &cfg.personas {
        let mut rng = stream(9, "uniform-policy", &[persona.persona_id as u64]);
        let mut total = 0.0;
        let mut s = fresh_state(persona, &cfg.schema, &space, PrivacyChoice::from_index(rng.random_range(0..3)), &mut rng);
        for _ in 0..n {
            let a = Action::from_index(rng.random_range(0..4));
            let (next, r) = sample_transition(persona, &cfg.schema, &space, &s, a, &mut rng);
            total += r;
            s = next;
            s.setting = PrivacyChoice::from_index(rng.random_range(0..3));
        }
        let match_p = 1.0 / 3.0;
        let mean = total / n as f64;
        let sigma = 2.0 * (match_p * (1.0 - match_p) / n as f64).sqrt();
        assert!((mean - (2.0 * match_p - 1.0)).abs() <= 3.0 * sigma, "persona {}: {mean}", persona.name);
    }
}

/// With the setting held fixed at Ask and Retain/SetAsk only, the match
/// probability is the persona's mean drifted Ask propensity.
#[test]
fn fixed_action_mean_reward_matches_propensities() {
    let cfg = default_config();
    let space = StateSpace::from_schema(&cfg.schema).unwrap();
    let persona = &cfg.personas[5];
    let perm = cfg.schema.feature("permission").unwrap().domain().unwrap().to_vec();
    let ctx = cfg.schema.feature("context").unwrap().domain().unwrap().to_vec();
    let mut expected = 0.0;
    for c in &ctx {
        for p in &perm {
            expected += persona.drifted_propensity(c, p).unwrap()[2] / 25.0;
        }
    }
    let mut rng = stream(4, "fixed-action", &[]);
    let n = 20_000;
    let mut total = 0.0;
    let mut s = fresh_state(persona, &cfg.schema, &space, PrivacyChoice::Ask, &mut rng);
    for _ in 0..n {
        let (next, r) = sample_transition(persona, &cfg.schema, &space, &s, Action::SetAsk, &mut rng);
        total += r;
        s = next;
    }
    let mean = total / n as f64;
    let sigma = 2.0 * (expected * (1.0 - expected) / n as f64).sqrt();
    assert!((mean - (2.0 * expected - 1.0)).abs() <= 3.0 * sigma, "{mean} vs {}", 2.0 * expected - 1.0);
}
