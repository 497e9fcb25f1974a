//! Cross-validated evaluation of one model on one dataset.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{ConfusionMatrix, Metrics};
use super::split::{fold_members, kfold, make_split, SplitSpec};
use crate::data::{LabeledDataset, PrivacyChoice};
use crate::error::{Error, Result};
use crate::models::{fit_model_logged, Classifier, ModelKind, ModelSettings};
use crate::seed::derive_seed;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub confusion: ConfusionMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelKind,
    /// Nominal size: the sweep cell size, or the record count when
    /// evaluated directly.
    pub dataset_size: usize,
    /// Records actually evaluated, after preprocessing.
    pub evaluated_records: usize,
    pub folds: Vec<FoldResult>,
    /// Mean of the fold metrics.
    pub aggregate: Metrics,
    /// Sum of the fold confusion matrices.
    pub aggregate_confusion: ConfusionMatrix,
    /// Model refit on train+validation, scored on the held-out test part.
    pub test: FoldResult,
    /// Running reward total per training episode of the refit Q-policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulative_reward: Option<Vec<f64>>,
    pub seed: u64,
    pub config_digest: String,
    /// Left out of saved reports unless timing was requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Holds for every well-formed report.
    pub fn check_invariants(&self) -> Result<()> {
        let mut parts: Vec<(&Metrics, &ConfusionMatrix)> =
            self.folds.iter().map(|f| (&f.metrics, &f.confusion)).collect();
        parts.push((&self.test.metrics, &self.test.confusion));
        for (m, c) in parts {
            if !m.all_in_unit_interval() {
                return Err(Error::Invariant(format!("{} report has a rate outside [0, 1]", self.model)));
            }
            if m.accuracy != c.accuracy() {
                return Err(Error::Invariant(format!("{} accuracy disagrees with its confusion matrix", self.model)));
            }
        }
        Ok(())
    }
}

fn labels_of(ds: &LabeledDataset) -> Result<Vec<PrivacyChoice>> {
    ds.records
        .iter()
        .map(|r| r.label.ok_or(Error::MissingLabel { record_id: r.record_id }))
        .collect()
}

fn score(
    kind: ModelKind,
    train: &LabeledDataset,
    test: &LabeledDataset,
    settings: &ModelSettings,
    seed: u64,
    fold: usize,
) -> Result<(FoldResult, Option<Vec<f64>>)> {
    let (model, log) = fit_model_logged(kind, train, settings, seed)?;
    let truth = labels_of(test)?;
    let predicted: Vec<PrivacyChoice> = test.records.iter().map(|r| model.predict(r)).collect();
    let confusion = ConfusionMatrix::from_labels(&truth, &predicted)?;
    let result = FoldResult {
        fold,
        train_size: train.len(),
        test_size: test.len(),
        metrics: confusion.metrics(),
        confusion,
    };
    Ok((result, log.map(|l| l.cumulative_reward)))
}

/// Splits 80/10/10, runs `folds`-fold cross-validation over the train and
/// validation parts together, then refits on them and scores the test part.
/// Folds run in parallel; each fit draws from `(seed, model id, [fold])`.
pub fn evaluate_model(
    kind: ModelKind,
    ds: &LabeledDataset,
    settings: &ModelSettings,
    folds: usize,
    seed: u64,
    config_digest: &str,
) -> Result<MetricsReport> {
    let started = Instant::now();
    labels_of(ds)?;
    let spec = SplitSpec {
        seed: derive_seed(seed, "split", &[]),
        ..SplitSpec::default()
    };
    let (train, val, test) = make_split(ds, &spec)?;
    let mut pool = train.records;
    pool.extend(val.records);
    pool.sort_by_key(|r| r.record_id);
    let pool = ds.with_records(pool);

    let assignment = kfold(&pool, folds, derive_seed(seed, "kfold", &[]))?;
    let members = fold_members(&assignment, folds);
    let fold_results: Vec<FoldResult> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let fit: Vec<usize> = (0..pool.len()).filter(|&i| assignment[i] != f).collect();
            let fit_seed = derive_seed(seed, kind.id(), &[f as u64]);
            score(kind, &pool.subset(&fit), &pool.subset(&members[f]), settings, fit_seed, f).map(|(r, _)| r)
        })
        .collect::<Result<_>>()?;

    let refit_seed = derive_seed(seed, kind.id(), &[folds as u64]);
    let (test_result, cumulative_reward) = score(kind, &pool, &test, settings, refit_seed, folds)?;

    let metrics: Vec<Metrics> = fold_results.iter().map(|f| f.metrics).collect();
    let mut aggregate_confusion = ConfusionMatrix::default();
    for f in &fold_results {
        aggregate_confusion.merge(&f.confusion);
    }
    let report = MetricsReport {
        model: kind,
        dataset_size: ds.len(),
        evaluated_records: ds.len(),
        aggregate: Metrics::mean(&metrics),
        folds: fold_results,
        aggregate_confusion,
        test: test_result,
        cumulative_reward,
        seed,
        config_digest: config_digest.to_string(),
        wall_clock_seconds: Some(started.elapsed().as_secs_f64()),
    };
    report.check_invariants()?;
    Ok(report)
}
