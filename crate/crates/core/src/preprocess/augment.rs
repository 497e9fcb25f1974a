//! Pseudo-record oversampling for under-represented classes.

use rand::Rng as _;

use super::PreprocessConfig;
use crate::data::{FeatureKind, LabeledDataset, PrivacyChoice, Value};
use crate::error::{Error, Result};
use crate::seed;

/// Chance that a categorical cell is taken from another class member.
pub const RESAMPLE_PROBABILITY: f64 = 0.3;
/// Numeric jitter half-width as a fraction of the feature range.
pub const JITTER_FRACTION: f64 = 0.05;

/// Tops every class up to its target count. Pseudo-record `t` of class `c`
/// draws from the stream `(seed, "augment", [c, t])`.
pub fn augment_oversample(ds: &LabeledDataset, cfg: &PreprocessConfig) -> Result<LabeledDataset> {
    let target = cfg
        .augment_target
        .as_ref()
        .ok_or_else(|| Error::ConfigInvalid("augment_target is not set".into()))?;
    let counts = ds.label_counts();
    let mut records = ds.records.clone();
    let mut next_id = ds.max_record_id().map_or(0, |m| m + 1);
    let first_new = next_id;

    for class in PrivacyChoice::ALL {
        let want = target.get(&class).copied().unwrap_or(0);
        let have = counts[class.index()];
        if have >= want {
            continue;
        }
        let members: Vec<usize> = (0..ds.len())
            .filter(|&i| ds.records[i].label == Some(class))
            .collect();
        if members.is_empty() {
            return Err(Error::EmptyClass(class));
        }
        for t in 0..(want - have) {
            let mut rng = seed::stream(cfg.seed, "augment", &[class.index() as u64, t as u64]);
            let base = &ds.records[members[rng.random_range(0..members.len())]];
            let mut r = base.clone();
            r.record_id = next_id;
            next_id += 1;
            for (j, f) in ds.schema.features.iter().enumerate() {
                match &f.kind {
                    FeatureKind::Categorical { .. } => {
                        if rng.random::<f64>() < RESAMPLE_PROBABILITY {
                            let donor = &ds.records[members[rng.random_range(0..members.len())]];
                            if !donor.values[j].is_missing() {
                                r.values[j] = donor.values[j].clone();
                            }
                        }
                    }
                    FeatureKind::Numeric { min, max, .. } => {
                        let u: f64 = rng.random_range(-1.0..=1.0);
                        if let Value::Num(x) = r.values[j] {
                            let jitter = u * JITTER_FRACTION * (max - min);
                            r.values[j] = Value::Num((x + jitter).clamp(*min, *max));
                        }
                    }
                }
            }
            records.push(r);
        }
    }

    let mut out = ds.with_records(records);
    if next_id > first_new {
        out.provenance = format!("{}+augmented[{}..{}]", ds.provenance, first_new, next_id - 1);
    }
    Ok(out)
}
