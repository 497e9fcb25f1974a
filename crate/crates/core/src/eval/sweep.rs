//! Data-scale sweeps, the comparison table and plot-data tables.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_model, MetricsReport, DEFAULT_FOLDS};
use crate::data::{format_number, LabeledDataset};
use crate::datagen::{default_config, generate, GeneratorConfig};
use crate::digest_json;
use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelSettings};
use crate::preprocess::{run_pipeline, GeneralizationHierarchy, PreprocessConfig};
use crate::rl::{train_q, EpisodeLog, PersonaEnv, RlConfig};
use crate::seed::derive_seed;

pub const DEFAULT_SIZES: [usize; 4] = [1_000, 5_000, 10_000, 20_000];
/// Size used for the single-scale model comparison table.
pub const REFERENCE_SIZE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub generator: GeneratorConfig,
    pub preprocess: PreprocessConfig,
    pub hierarchy: GeneralizationHierarchy,
    pub settings: ModelSettings,
    /// Q-learning run against the persona environment.
    pub rl: RlConfig,
    pub models: Vec<ModelKind>,
    pub sizes: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let generator = default_config();
        SweepConfig {
            hierarchy: GeneralizationHierarchy::default_for(&generator.schema),
            generator,
            preprocess: PreprocessConfig::default(),
            settings: ModelSettings::default(),
            rl: RlConfig::default(),
            models: ModelKind::ALL.to_vec(),
            sizes: DEFAULT_SIZES.to_vec(),
            folds: DEFAULT_FOLDS,
            seed: 42,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.models.is_empty() {
            return Err(Error::ConfigInvalid("sweep needs at least one size and one model".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::ConfigInvalid("sweep sizes must be strictly ascending".into()));
        }
        let distinct: BTreeSet<_> = self.models.iter().collect();
        if distinct.len() != self.models.len() {
            return Err(Error::ConfigInvalid("sweep models must be distinct".into()));
        }
        if self.folds < 2 {
            return Err(Error::ConfigInvalid("sweep needs at least 2 folds".into()));
        }
        self.preprocess.validate()?;
        self.rl.validate()
    }

    pub fn digest(&self) -> String {
        digest_json(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by model (config order), then size.
    pub reports: Vec<MetricsReport>,
    pub episode_log: EpisodeLog,
    pub config_digest: String,
}

/// One generation of the largest size; every smaller size is a prefix of it.
/// Each prefix is preprocessed with seed `(seed, "prep", [size])` and scored
/// with evaluation seed `(seed, "eval", [size])`. All (model, size) cells
/// and their folds run on the current rayon pool; results do not depend on
/// the pool size.
pub fn scale_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let digest = cfg.digest();
    let largest = *cfg.sizes.last().expect("validated");
    let generator = GeneratorConfig {
        volume: largest,
        master_seed: cfg.seed,
        ..cfg.generator.clone()
    };

    let (datasets, episode_log) = rayon::join(
        || -> Result<Vec<LabeledDataset>> {
            let full = generate(&generator)?;
            cfg.sizes
                .par_iter()
                .map(|&size| {
                    let prep = PreprocessConfig {
                        seed: derive_seed(cfg.seed, "prep", &[size as u64]),
                        ..cfg.preprocess.clone()
                    };
                    run_pipeline(&full.prefix(size), &cfg.hierarchy, &prep).map(|(ds, _)| ds)
                })
                .collect()
        },
        || -> Result<EpisodeLog> {
            let mut env = PersonaEnv::new(&generator)?;
            let rl = RlConfig {
                seed: derive_seed(cfg.seed, "rl", &[]),
                ..cfg.rl.clone()
            };
            train_q(&mut env, &rl).map(|(_, log)| log)
        },
    );
    let datasets = datasets?;
    let episode_log = episode_log?;

    let cells: Vec<(ModelKind, usize)> = cfg
        .models
        .iter()
        .flat_map(|&m| (0..cfg.sizes.len()).map(move |s| (m, s)))
        .collect();
    let reports = cells
        .par_iter()
        .map(|&(kind, s)| {
            let seed = derive_seed(cfg.seed, "eval", &[cfg.sizes[s] as u64]);
            let mut r = evaluate_model(kind, &datasets[s], &cfg.settings, cfg.folds, seed, &digest)?;
            r.dataset_size = cfg.sizes[s];
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        reports,
        episode_log,
        config_digest: digest,
    })
}

pub const COMPARISON_HEADER: &str = "model,size,fold,accuracy,macro_recall,macro_f1";

/// `model,size,fold,accuracy,macro_recall,macro_f1`; the fold-mean row of
/// each report has fold `mean` and follows its per-fold rows when those are
/// requested.
pub fn comparison_csv(reports: &[MetricsReport], per_fold: bool) -> String {
    let mut out = format!("{COMPARISON_HEADER}\n");
    for r in reports {
        if per_fold {
            for f in &r.folds {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.model,
                    r.dataset_size,
                    f.fold + 1,
                    format_number(f.metrics.accuracy),
                    format_number(f.metrics.macro_recall),
                    format_number(f.metrics.macro_f1)
                ));
            }
        }
        out.push_str(&format!(
            "{},{},mean,{},{},{}\n",
            r.model,
            r.dataset_size,
            format_number(r.aggregate.accuracy),
            format_number(r.aggregate.macro_recall),
            format_number(r.aggregate.macro_f1)
        ));
    }
    out
}

/// Single-scale comparison: every model at `size`.
pub fn model_comparison_csv(reports: &[MetricsReport], size: usize) -> String {
    let mut out = String::from("model,size,accuracy,macro_recall,macro_f1\n");
    for r in reports.iter().filter(|r| r.dataset_size == size) {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.model,
            size,
            format_number(r.aggregate.accuracy),
            format_number(r.aggregate.macro_recall),
            format_number(r.aggregate.macro_f1)
        ));
    }
    out
}

/// Accuracy against dataset size, one row per (model, size).
pub fn scale_curve_csv(reports: &[MetricsReport]) -> String {
    let mut sorted: Vec<&MetricsReport> = reports.iter().collect();
    sorted.sort_by_key(|r| (r.model, r.dataset_size));
    let mut out = String::from("model,size,accuracy,macro_f1\n");
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.model,
            r.dataset_size,
            format_number(r.aggregate.accuracy),
            format_number(r.aggregate.macro_f1)
        ));
    }
    out
}

/// The comparison size: [`REFERENCE_SIZE`] when present, else the largest.
pub fn reference_size(reports: &[MetricsReport]) -> Option<usize> {
    let sizes: BTreeSet<usize> = reports.iter().map(|r| r.dataset_size).collect();
    if sizes.contains(&REFERENCE_SIZE) {
        Some(REFERENCE_SIZE)
    } else {
        sizes.last().copied()
    }
}

pub fn find_report(reports: &[MetricsReport], model: ModelKind, size: usize) -> Option<&MetricsReport> {
    reports.iter().find(|r| r.model == model && r.dataset_size == size)
}

/// Digest and resolved configuration written next to every CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMeta {
    pub config_digest: String,
    pub config: serde_json::Value,
    /// Stage-specific provenance, e.g. the preprocessing report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub details: Option<serde_json::Value>,
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    path.with_file_name(name)
}

pub fn write_with_meta(path: &Path, contents: &str, meta: &OutputMeta) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))?;
    let mp = meta_path(path);
    let mut json = serde_json::to_string_pretty(meta)?;
    json.push('\n');
    fs::write(&mp, json).map_err(|e| Error::io(&mp, e))
}

pub fn read_meta(path: &Path) -> Result<OutputMeta> {
    let mp = meta_path(path);
    let text = fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// The one digest shared by all inputs.
pub fn common_digest<'a>(digests: impl IntoIterator<Item = &'a str>) -> Result<String> {
    let mut first: Option<&str> = None;
    for d in digests {
        match first {
            None => first = Some(d),
            Some(f) if f != d => return Err(Error::DigestMismatch(f.to_string(), d.to_string())),
            _ => {}
        }
    }
    first
        .map(str::to_string)
        .ok_or_else(|| Error::ConfigInvalid("no inputs carry a config digest".into()))
}

/// Report file name inside a sweep directory.
pub fn report_file_name(model: ModelKind, size: usize) -> String {
    format!("{model}_{size}.json")
}

pub fn load_reports(dir: &Path) -> Result<Vec<MetricsReport>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && !p.to_string_lossy().ends_with(".meta.json"))
        .collect();
    paths.sort();
    paths.iter().map(MetricsReport::load).collect()
}
