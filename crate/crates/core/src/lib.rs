//! Survey-based diabetes onset classification.
//!
//! The crate covers the whole modelling path for a tabular health survey:
//!
//! - [`data`]: codebook, delimited ingestion, exclusion and labeling rules,
//!   stratified splitting, imputation and design-matrix encoding.
//! - [`models`]: five classifiers (logistic regression, k-nearest neighbours,
//!   random forest, gradient boosting, linear SVM with Platt scaling) behind a
//!   single probability-output contract.
//! - [`tuning`]: stratified k-fold grid search, one model kind at a time.
//! - [`ensemble`]: unweighted probability averaging with a tunable decision
//!   boundary.
//! - [`eval`]: ROC/AUC, per-class metrics, recall-versus-boundary curves,
//!   bootstrap confidence bands, screening arithmetic and SVG plots.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod matrix;
pub mod models;
pub mod seed;
pub mod tuning;

pub use error::{Error, Result};
pub use matrix::Matrix;
