//! Dataset cleaning and privacy transforms. Every stage is a pure
//! dataset-to-dataset function; [`run_pipeline`] chains them in the fixed
//! order dedup, impute, k-anonymize, randomize, augment.

mod anonymize;
mod augment;
mod dedup;
mod dp;
mod impute;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use anonymize::{
    candidate_vectors, generalize_key, k_anonymize, k_anonymize_detailed, suppression_budget, Anonymized,
    ClassKey, GeneralizationHierarchy, HierarchyLevels, SUPPRESSED_TOKEN, SUPPRESSION_FRACTION,
};
pub use augment::{augment_oversample, JITTER_FRACTION, RESAMPLE_PROBABILITY};
pub use dedup::deduplicate;
pub use dp::{dp_randomize, keep_probability, laplace, randomized_response};
pub use impute::knn_impute;

use crate::data::{LabeledDataset, PrivacyChoice};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub knn_k: usize,
    pub dp_epsilon: f64,
    pub dp_enabled: bool,
    pub anonymity_k: usize,
    /// Minimum record count per class after augmentation.
    pub augment_target: Option<BTreeMap<PrivacyChoice, usize>>,
    pub seed: u64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            knn_k: 5,
            dp_epsilon: 1.0,
            dp_enabled: true,
            anonymity_k: 5,
            augment_target: None,
            seed: 42,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.knn_k == 0 {
            return Err(Error::ConfigInvalid("knn_k must be at least 1".into()));
        }
        if self.dp_epsilon.is_nan() || self.dp_epsilon <= 0.0 {
            return Err(Error::ConfigInvalid(format!("dp_epsilon {} must be positive", self.dp_epsilon)));
        }
        if self.anonymity_k == 0 {
            return Err(Error::ConfigInvalid("anonymity_k must be at least 1".into()));
        }
        Ok(())
    }
}

/// What the pipeline did, written next to the processed dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub ops: Vec<String>,
    pub input_records: usize,
    pub output_records: usize,
    pub duplicates_removed: usize,
    pub imputed_cells: usize,
    pub anonymization_levels: Option<Vec<usize>>,
    pub suppressed_count: usize,
    pub dp_epsilon: Option<f64>,
    pub augmented_records: usize,
    pub seed: u64,
    pub config: PreprocessConfig,
}

pub fn run_pipeline(
    ds: &LabeledDataset,
    hierarchy: &GeneralizationHierarchy,
    cfg: &PreprocessConfig,
) -> Result<(LabeledDataset, PipelineReport)> {
    cfg.validate()?;
    let mut ops = vec!["deduplicate".to_string()];
    let deduped = deduplicate(ds);
    let duplicates_removed = ds.len() - deduped.len();

    let imputed_cells = deduped.missing_cells();
    let mut current = if imputed_cells > 0 {
        ops.push("knn_impute".into());
        knn_impute(&deduped, cfg)?
    } else {
        deduped
    };

    let mut anonymization_levels = None;
    let mut suppressed_count = 0;
    if !current.schema.quasi_identifier_indices().is_empty() {
        let a = k_anonymize_detailed(&current, hierarchy, cfg)?;
        ops.push("k_anonymize".into());
        anonymization_levels = Some(a.levels);
        suppressed_count = a.suppressed_count;
        current = a.dataset;
    }

    let mut dp_epsilon = None;
    if cfg.dp_enabled && !current.schema.sensitive_indices().is_empty() {
        current = dp_randomize(&current, cfg)?;
        ops.push("dp_randomize".into());
        dp_epsilon = Some(cfg.dp_epsilon);
    }

    let mut augmented_records = 0;
    if cfg.augment_target.is_some() {
        let before = current.len();
        current = augment_oversample(&current, cfg)?;
        ops.push("augment_oversample".into());
        augmented_records = current.len() - before;
    }

    let report = PipelineReport {
        ops,
        input_records: ds.len(),
        output_records: current.len(),
        duplicates_removed,
        imputed_cells,
        anonymization_levels,
        suppressed_count,
        dp_epsilon,
        augmented_records,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    Ok((current, report))
}
