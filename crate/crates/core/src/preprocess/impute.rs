//! K-nearest-neighbour imputation over mixed categorical/numeric features.
//!
//! Distance between two records sums, in feature order over the features both
//! observe, 1 for each differing categorical value and `|a - b| / (max - min)`
//! for each numeric one. For a missing cell the donors are the records that
//! observe that feature in the input; the `k` closest (ties to the lower
//! `record_id`) vote by mode (ties to the smallest token) or are averaged.
//! Only input values are read, so freshly imputed cells never feed another.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::PreprocessConfig;
use crate::data::{FeatureKind, LabeledDataset, Value};
use crate::error::{Error, Result};

#[derive(Clone, Copy)]
enum Enc {
    Cat(u32),
    Num(f64),
    Missing,
}

fn encode(ds: &LabeledDataset) -> Vec<Vec<Enc>> {
    ds.records
        .iter()
        .map(|r| {
            r.values
                .iter()
                .zip(&ds.schema.features)
                .map(|(v, f)| match v {
                    Value::Cat(t) => Enc::Cat(f.domain_index(t).expect("validated token") as u32),
                    Value::Num(x) => Enc::Num(*x),
                    Value::Missing => Enc::Missing,
                })
                .collect()
        })
        .collect()
}

fn distance(a: &[Enc], b: &[Enc], ranges: &[f64]) -> f64 {
    let mut d = 0.0;
    for ((x, y), range) in a.iter().zip(b).zip(ranges) {
        match (x, y) {
            (Enc::Cat(p), Enc::Cat(q)) => {
                if p != q {
                    d += 1.0;
                }
            }
            (Enc::Num(p), Enc::Num(q)) => d += (p - q).abs() / range,
            _ => {}
        }
    }
    d
}

pub fn knn_impute(ds: &LabeledDataset, cfg: &PreprocessConfig) -> Result<LabeledDataset> {
    let k = cfg.knn_k;
    if k == 0 {
        return Err(Error::ConfigInvalid("knn_k must be at least 1".into()));
    }
    if ds.missing_cells() == 0 {
        return Ok(ds.clone());
    }
    let schema = &ds.schema;
    let enc = encode(ds);
    let ranges: Vec<f64> = schema
        .features
        .iter()
        .map(|f| f.range().map_or(1.0, |(lo, hi)| hi - lo))
        .collect();

    let donors: Vec<Vec<usize>> = (0..schema.len())
        .map(|j| (0..enc.len()).filter(|&i| !matches!(enc[i][j], Enc::Missing)).collect())
        .collect();
    for (j, d) in donors.iter().enumerate() {
        let needed = enc.iter().any(|row| matches!(row[j], Enc::Missing));
        if needed && d.len() < k {
            return Err(Error::InsufficientDonors {
                feature: schema.features[j].name.clone(),
                available: d.len(),
                required: k,
            });
        }
    }

    let targets: Vec<usize> = (0..enc.len())
        .filter(|&i| enc[i].iter().any(|e| matches!(e, Enc::Missing)))
        .collect();

    let fills: Vec<(usize, Vec<(usize, Value)>)> = targets
        .par_iter()
        .map(|&i| {
            let row = &enc[i];
            let dist: Vec<f64> = enc.iter().map(|other| distance(row, other, &ranges)).collect();
            let mut cells = Vec::new();
            for (j, e) in row.iter().enumerate() {
                if !matches!(e, Enc::Missing) {
                    continue;
                }
                let mut cand: Vec<(f64, u64, usize)> = donors[j]
                    .iter()
                    .map(|&d| (dist[d], ds.records[d].record_id, d))
                    .collect();
                let by_dist_then_id =
                    |a: &(f64, u64, usize), b: &(f64, u64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if cand.len() > k {
                    cand.select_nth_unstable_by(k - 1, by_dist_then_id);
                    cand.truncate(k);
                }
                // fixed summation order for the mean
                cand.sort_unstable_by(by_dist_then_id);
                let neighbours: Vec<usize> = cand.iter().map(|c| c.2).collect();
                let value = match &schema.features[j].kind {
                    FeatureKind::Categorical { .. } => {
                        let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
                        for &d in &neighbours {
                            let t = ds.records[d].values[j].as_cat().expect("donor observes feature");
                            *votes.entry(t).or_default() += 1;
                        }
                        // BTreeMap iterates tokens in ascending order; keep the first maximum
                        let (token, _) = votes
                            .iter()
                            .fold(None, |best: Option<(&str, usize)>, (t, c)| match best {
                                Some((_, bc)) if bc >= *c => best,
                                _ => Some((t, *c)),
                            })
                            .expect("k >= 1");
                        Value::Cat(token.to_string())
                    }
                    FeatureKind::Numeric { .. } => {
                        let sum: f64 = neighbours
                            .iter()
                            .map(|&d| ds.records[d].values[j].as_num().expect("donor observes feature"))
                            .sum();
                        Value::Num(sum / neighbours.len() as f64)
                    }
                };
                cells.push((j, value));
            }
            (i, cells)
        })
        .collect();

    let mut records = ds.records.clone();
    for (i, cells) in fills {
        for (j, v) in cells {
            records[i].values[j] = v;
        }
    }
    Ok(ds.with_records(records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, PrivacyChoice, PrivacyRecord};

    fn row(id: u64, ctx: &str, hour: f64, denials: Option<f64>) -> PrivacyRecord {
        PrivacyRecord::new(
            id,
            vec![
                Value::cat(ctx),
                Value::cat("camera"),
                Value::Num(hour),
                denials.map_or(Value::Missing, Value::Num),
            ],
            Some(PrivacyChoice::Deny),
        )
    }

    #[test]
    fn mean_of_two_nearest() {
        // target: social, hour 10, denials missing
        // distances: #2 = 0, #3 = 1/23, #4 = 1 + 0, #5 = 1 + 10/23
        let mut schema = FeatureSchema::default_privacy();
        schema.features[3].kind = crate::data::FeatureKind::Numeric { min: 0.0, max: 50.0, unit: "count".into() };
        let ds = LabeledDataset::new(
            schema,
            vec![
                row(1, "social", 10.0, None),
                row(2, "social", 10.0, Some(30.0)),
                row(3, "social", 11.0, Some(40.0)),
                row(4, "health", 10.0, Some(2.0)),
                row(5, "finance", 20.0, Some(5.0)),
            ],
            "fixture",
        )
        .unwrap();
        let cfg = PreprocessConfig { knn_k: 2, ..PreprocessConfig::default() };
        let out = knn_impute(&ds, &cfg).unwrap();
        assert_eq!(out.records[0].values[3], Value::Num(35.0));
        for (a, b) in out.records.iter().zip(&ds.records).skip(1) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn complete_dataset_is_unchanged() {
        let ds = LabeledDataset::new(
            FeatureSchema::default_privacy(),
            vec![row(1, "social", 1.0, Some(2.0)), row(2, "health", 5.0, Some(0.0))],
            "x",
        )
        .unwrap();
        assert_eq!(knn_impute(&ds, &PreprocessConfig::default()).unwrap(), ds);
    }

    #[test]
    fn categorical_mode_ties_take_smallest_token() {
        let mut a = row(1, "social", 1.0, Some(1.0));
        a.values[0] = Value::Missing;
        let ds = LabeledDataset::new(
            FeatureSchema::default_privacy(),
            vec![a, row(2, "social", 1.0, Some(1.0)), row(3, "health", 1.0, Some(1.0))],
            "x",
        )
        .unwrap();
        let cfg = PreprocessConfig { knn_k: 2, ..PreprocessConfig::default() };
        let out = knn_impute(&ds, &cfg).unwrap();
        assert_eq!(out.records[0].values[0], Value::cat("health"));
    }

    #[test]
    fn too_few_donors() {
        let ds = LabeledDataset::new(
            FeatureSchema::default_privacy(),
            vec![row(1, "social", 1.0, None), row(2, "health", 5.0, Some(0.0))],
            "x",
        )
        .unwrap();
        let cfg = PreprocessConfig { knn_k: 2, ..PreprocessConfig::default() };
        assert!(matches!(
            knn_impute(&ds, &cfg),
            Err(Error::InsufficientDonors { available: 1, required: 2, .. })
        ));
    }
}
