//! Splits, cross-validation, metrics and the data-scale sweep.

mod evaluate;
mod metrics;
mod split;
mod sweep;

pub use evaluate::{evaluate_model, FoldResult, MetricsReport, DEFAULT_FOLDS};
pub use metrics::{compute_metrics, ConfusionMatrix, Metrics};
pub use split::{fold_members, kfold, make_split, SplitSpec, MIN_SPLIT_SIZE};
pub use sweep::{
    common_digest, comparison_csv, find_report, load_reports, meta_path, model_comparison_csv, read_meta,
    reference_size, report_file_name, scale_curve_csv, scale_sweep, write_with_meta, OutputMeta, SweepConfig,
    SweepResult, COMPARISON_HEADER, DEFAULT_SIZES, REFERENCE_SIZE,
};
