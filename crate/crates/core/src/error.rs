use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
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

    #[error("schema: {0}")]
    Schema(String),

    #[error("row {row}, column `{column}`: `{value}` is not a finite number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column `{column}`: categorical and label columns must be fully observed")]
    MissingCategorical { row: usize, column: String },

    #[error("continuous column `{column}` has no observed entries")]
    EmptyColumn { column: String },

    #[error("dataset has no class label column")]
    NoLabels,

    #[error("dataset has no categorical columns")]
    NoCategorical,

    #[error("columns {first} and {second} share no complete pairs")]
    NoCompletePairs { first: usize, second: usize },

    #[error("sigma12 = {sigma12} lies outside the admissible interval (-{bound}, {bound})")]
    OutsideAdmissible { sigma12: f64, bound: f64 },

    #[error("marginal variances must be positive (got {sigma11}, {sigma22})")]
    NonPositiveVariance { sigma11: f64, sigma22: f64 },

    #[error("no root candidates to select from")]
    EmptyCandidates,

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("diagonal entry {index} is not positive ({value})")]
    NonPositiveDiagonal { index: usize, value: f64 },

    #[error("reference error r is zero; improvement is undefined")]
    ZeroReference,

    #[error("invalid mask plan: {0}")]
    InvalidPlan(String),

    #[error("mask infeasible: {0}")]
    MaskInfeasible(String),

    #[error("matrix is singular and could not be regularized")]
    Singular,

    #[error("parse: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Schema(_) => "schema",
            Error::NonNumeric { .. } => "non_numeric",
            Error::MissingCategorical { .. } => "missing_categorical",
            Error::EmptyColumn { .. } => "empty_column",
            Error::NoLabels => "no_labels",
            Error::NoCategorical => "no_categorical",
            Error::NoCompletePairs { .. } => "no_complete_pairs",
            Error::OutsideAdmissible { .. } => "outside_admissible",
            Error::NonPositiveVariance { .. } => "non_positive_variance",
            Error::EmptyCandidates => "empty_candidates",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NonPositiveDiagonal { .. } => "non_positive_diagonal",
            Error::ZeroReference => "zero_reference",
            Error::InvalidPlan(_) => "invalid_plan",
            Error::MaskInfeasible(_) => "mask_infeasible",
            Error::Singular => "singular",
            Error::Parse(_) => "parse",
            Error::Invalid(_) => "invalid",
        }
    }
}
