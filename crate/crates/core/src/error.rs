use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown privacy choice token `{0}`")]
    UnknownChoice(String),

    #[error("unknown privacy choice code {0}")]
    UnknownCode(i64),

    #[error("schema mismatch at row {row}, column {column}: {message}")]
    SchemaMismatch {
        row: usize,
        column: String,
        message: String,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("feature `{feature}`: only {available} donor records observe it, need {required}")]
    InsufficientDonors {
        feature: String,
        available: usize,
        required: usize,
    },

    #[error("no feature is marked sensitive")]
    NoSensitiveFeatures,

    #[error("no feature is marked as a quasi-identifier")]
    NoQuasiIdentifiers,

    #[error("k-anonymity with k={k} needs {needed} suppressions at the top level, budget is {budget}")]
    AnonymizationInfeasible {
        k: usize,
        needed: usize,
        budget: usize,
    },

    #[error("class {0} has no members to augment from")]
    EmptyClass(crate::data::PrivacyChoice),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("record {record_id} has no label")]
    MissingLabel { record_id: u64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite loss in epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("dataset too small: {actual} records, need at least {required}")]
    TooSmall { actual: usize, required: usize },

    #[error("length mismatch: {truth} truth labels vs {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },

    #[error("model document: {0}")]
    Model(String),

    #[error("inputs disagree on config digest: {0} vs {1}")]
    DigestMismatch(String, String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownChoice(_) | Error::UnknownCode(_) => "unknown_choice",
            Error::SchemaMismatch { .. } => "schema_mismatch",
            Error::Parse { .. } => "parse_error",
            Error::InvalidSchema(_) => "invalid_schema",
            Error::ConfigInvalid(_) => "config_invalid",
            Error::InsufficientDonors { .. } => "insufficient_donors",
            Error::NoSensitiveFeatures => "no_sensitive_features",
            Error::NoQuasiIdentifiers => "no_quasi_identifiers",
            Error::AnonymizationInfeasible { .. } => "anonymization_infeasible",
            Error::EmptyClass(_) => "empty_class",
            Error::EmptyTrainingSet => "empty_training_set",
            Error::MissingLabel { .. } => "missing_label",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::TooSmall { .. } => "too_small",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::Model(_) => "model",
            Error::DigestMismatch(..) => "digest_mismatch",
            Error::Invariant(_) => "invariant",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// True for failures that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::NonFiniteLoss { .. })
    }
}
