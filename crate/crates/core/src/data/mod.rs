//! Survey ingestion through to a numeric design matrix.

pub mod cohort;
pub mod encode;
pub mod impute;
pub mod ingest;
pub mod preprocess;
pub mod schema;
pub mod synth;

pub use cohort::{
    apply_exclusions, assign_label, build_cohort, split_indices, split_train_test, Cohort,
    ExclusionReason, ExclusionReport, LabelSource, SplitIndices,
};
pub use encode::{encode_features, ColumnCatalog, DesignColumn, Encoder};
pub use impute::{apply_imputer, fit_imputer, ImputationPlan};
pub use ingest::{ingest_delimited, ingest_reader, IngestOptions, RawRecord, SelfReport};
pub use preprocess::Preprocessor;
pub use schema::{FeatureDef, FeatureKind, FeatureSchema};
