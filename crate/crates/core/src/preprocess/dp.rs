//! Local differential privacy for sensitive features.
//!
//! Categorical cells go through m-ary randomized response: the true value is
//! kept with probability `e^eps / (e^eps + m - 1)` and otherwise replaced by one
//! of the other `m - 1` domain values uniformly. Numeric cells receive Laplace
//! noise of scale `(max - min) / eps` and are clamped back into range. Each
//! cell draws from its own stream keyed by (seed, record_id, feature index).

use rand::Rng as _;

use super::PreprocessConfig;
use crate::data::{FeatureKind, LabeledDataset, Value};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

/// Keep probability of m-ary randomized response. Saturates to 1 when
/// `e^eps` overflows.
pub fn keep_probability(epsilon: f64, m: usize) -> f64 {
    if m <= 1 {
        return 1.0;
    }
    let e = epsilon.exp();
    if !e.is_finite() {
        return 1.0;
    }
    e / (e + (m - 1) as f64)
}

/// Randomized response on a domain index.
pub fn randomized_response(index: usize, m: usize, keep: f64, rng: &mut Rng) -> usize {
    if m <= 1 || rng.random::<f64>() < keep {
        return index;
    }
    let shift = 1 + rng.random_range(0..m - 1);
    (index + shift) % m
}

/// Laplace(0, scale) by inverse CDF.
pub fn laplace(scale: f64, rng: &mut Rng) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    // u in (-0.5, 0.5]
    let u: f64 = 0.5 - rng.random::<f64>();
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
}

pub fn dp_randomize(ds: &LabeledDataset, cfg: &PreprocessConfig) -> Result<LabeledDataset> {
    if !cfg.dp_enabled {
        return Err(Error::ConfigInvalid("dp_randomize called with dp disabled".into()));
    }
    if cfg.dp_epsilon.is_nan() || cfg.dp_epsilon <= 0.0 {
        return Err(Error::ConfigInvalid(format!("dp_epsilon {} must be positive", cfg.dp_epsilon)));
    }
    let sensitive = ds.schema.sensitive_indices();
    if sensitive.is_empty() {
        return Err(Error::NoSensitiveFeatures);
    }
    let eps = cfg.dp_epsilon;
    let mut records = ds.records.clone();
    for r in &mut records {
        for &j in &sensitive {
            let feature = &ds.schema.features[j];
            let mut rng = seed::stream(cfg.seed, "dp", &[r.record_id, j as u64]);
            match (&feature.kind, &r.values[j]) {
                (FeatureKind::Categorical { domain }, Value::Cat(t)) => {
                    let m = domain.len();
                    let idx = feature.domain_index(t).expect("validated token");
                    let out = randomized_response(idx, m, keep_probability(eps, m), &mut rng);
                    r.values[j] = Value::Cat(domain[out].clone());
                }
                (FeatureKind::Numeric { min, max, .. }, Value::Num(x)) => {
                    let scale = (max - min) / eps;
                    let noisy = x + laplace(scale, &mut rng);
                    r.values[j] = Value::Num(noisy.clamp(*min, *max));
                }
                _ => {}
            }
        }
    }
    Ok(ds.with_records(records))
}
