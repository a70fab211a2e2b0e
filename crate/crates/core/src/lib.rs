//! Direct estimation of means and covariance matrices from mixed
//! continuous/categorical data with randomly missing continuous entries.
//!
//! The estimators work pair by pair: every off-diagonal entry is the
//! maximum-likelihood solution of a bivariate normal model fitted to the
//! rows where both features are observed, plus the marginal information
//! from rows where only one is.
// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod benchmark;
pub mod cubic;
pub mod data;
pub mod dper;
pub mod dperc;
pub mod error;
pub mod metrics;
pub mod missingness;
pub mod pairwise;
pub mod report;

pub use data::{
    CategoricalColumn, ColumnSpec, CsvOptions, DatasetSchema, FeatureKind, MaskedColumn, MaskedMatrix,
    MixedDataset,
};
pub use dper::{dper_multi, dper_single, ClassMeans, CovarianceEstimate, PairProvenance};
pub use dperc::{dperc_multi, dperc_single};
pub use error::{Error, Result};
pub use missingness::{apply_mcar, MaskPlan};
