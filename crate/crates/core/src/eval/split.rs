//! Seeded train/validation/test splits and k-fold assignment.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{LabeledDataset, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::seed;

pub const MIN_SPLIT_SIZE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.8,
            val_frac: 0.1,
            test_frac: 0.1,
            stratified: true,
            seed: 42,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::ConfigInvalid("split fractions must lie in [0, 1]".into()));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigInvalid("split fractions must sum to 1".into()));
        }
        Ok(())
    }
}

/// Record indices grouped by label; unlabeled records form a fourth group.
fn groups(ds: &LabeledDataset) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); NUM_CLASSES + 1];
    for (i, r) in ds.records.iter().enumerate() {
        out[r.label.map_or(NUM_CLASSES, |l| l.index())].push(i);
    }
    out
}

/// Splits `total` across groups in proportion to `quotas`, never giving a
/// group more than its cap. Floors first, then one extra each by largest
/// fractional part (ties to the lower group).
fn allocate(quotas: &[f64], caps: &[usize], total: usize) -> Vec<usize> {
    let mut out: Vec<usize> = quotas
        .iter()
        .zip(caps)
        .map(|(q, &c)| (q.floor() as usize).min(c))
        .collect();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = total.saturating_sub(out.iter().sum());
    while remaining > 0 {
        let before = remaining;
        for &g in &order {
            if remaining > 0 && out[g] < caps[g] {
                out[g] += 1;
                remaining -= 1;
            }
        }
        if remaining == before {
            break;
        }
    }
    out
}

fn round_count(n: usize, frac: f64) -> usize {
    ((n as f64 * frac).round() as usize).min(n)
}

/// Partition into (train, validation, test). Each part keeps the input order.
/// Validation and test sizes are the rounded fractions of `n`; train takes
/// the remainder. With stratification each class contributes in proportion.
pub fn make_split(
    ds: &LabeledDataset,
    spec: &SplitSpec,
) -> Result<(LabeledDataset, LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let n = ds.len();
    if n < MIN_SPLIT_SIZE {
        return Err(Error::TooSmall { actual: n, required: MIN_SPLIT_SIZE });
    }
    let n_test = round_count(n, spec.test_frac);
    let n_val = round_count(n, spec.val_frac).min(n - n_test);

    let mut part = vec![0u8; n];
    let groups = if spec.stratified { groups(ds) } else { vec![(0..n).collect()] };
    let shuffled: Vec<Vec<usize>> = groups
        .into_iter()
        .enumerate()
        .map(|(g, mut idx)| {
            idx.shuffle(&mut seed::stream(spec.seed, "split", &[g as u64]));
            idx
        })
        .collect();
    let sizes: Vec<usize> = shuffled.iter().map(Vec::len).collect();
    let test_quota: Vec<f64> = sizes.iter().map(|&s| s as f64 * spec.test_frac).collect();
    let test = allocate(&test_quota, &sizes, n_test);
    let val_quota: Vec<f64> = sizes.iter().map(|&s| s as f64 * spec.val_frac).collect();
    let val_caps: Vec<usize> = sizes.iter().zip(&test).map(|(s, t)| s - t).collect();
    let val = allocate(&val_quota, &val_caps, n_val);

    for (g, idx) in shuffled.iter().enumerate() {
        for &i in &idx[..test[g]] {
            part[i] = 2;
        }
        for &i in &idx[test[g]..test[g] + val[g]] {
            part[i] = 1;
        }
    }
    let pick = |p: u8| -> Vec<usize> { (0..n).filter(|&i| part[i] == p).collect() };
    Ok((ds.subset(&pick(0)), ds.subset(&pick(1)), ds.subset(&pick(2))))
}

/// Fold number in `0..k` for every record. Each label group is shuffled and
/// dealt round-robin, continuing the deal across groups, so fold sizes and
/// per-class fold sizes both differ by at most one.
pub fn kfold(ds: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::ConfigInvalid(format!("k-fold needs k >= 2, got {k}")));
    }
    if ds.len() < k {
        return Err(Error::TooSmall { actual: ds.len(), required: k });
    }
    let mut assignment = vec![0; ds.len()];
    let mut dealt = 0;
    for (g, mut idx) in groups(ds).into_iter().enumerate() {
        idx.shuffle(&mut seed::stream(seed, "kfold", &[g as u64]));
        for i in idx {
            assignment[i] = dealt % k;
            dealt += 1;
        }
    }
    Ok(assignment)
}

/// Record indices of each fold, ascending.
pub fn fold_members(assignment: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); k];
    for (i, &f) in assignment.iter().enumerate() {
        out[f].push(i);
    }
    out
}
