//! Aggregate-value regression with hierarchical model clustering.
//!
//! Forecasting a sum of responses across many linear regression models
//! admits a family of estimators between two extremes: fitting every model
//! individually and summing forecasts, or fitting one regression of the
//! summed response on all predictors jointly. This crate implements the whole
//! family: models are grouped by a cluster partition, each cluster is fitted
//! jointly by minimum-norm least squares, and the partition is chosen by
//! hierarchical merging — either greedily minimizing the aggregate training
//! error at every step or by Ward linkage on residual correlations. Closed
//! forms for the expected error changes, seeded synthetic-data generation and
//! demand-forecasting feature builders round out the toolkit.

pub mod clustering;
pub mod curve;
pub mod error;
pub mod features;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::{hat_matrix, pseudo_inverse, ridgeless_fit, LeastSquaresFit};
pub use model::{
    aggregate_design, aggregate_test_error, aggregate_training_error, fit_avrc, predict_aggregate,
    residual_vectors, AvrcFit, ClusterPartition, ModelCollection, RegressionProblem,
};
pub use clustering::{
    rcm_cluster, tem_cluster, ward_linkage, DissimilarityMatrix, MergeStep, MergeTrace, Method,
    WardVariant,
};
pub use synth::{generate, CovarianceKind, CovarianceSpec, SynthConfig, SynthDataset};
