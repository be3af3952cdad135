//! Evaluation: ROC/AUC, classification metrics, recall-vs-boundary curves,
//! bootstrap bands, screening arithmetic and plots.

pub mod bootstrap;
pub mod metrics;
pub mod plot;
pub mod report;
pub mod roc;
pub mod screening;
pub mod threshold;

pub use bootstrap::{bootstrap_roc, bootstrap_roc_with_seeds, order_statistic_indices, BootstrapBand, FPR_GRID_POINTS};
pub use metrics::{classification_metrics, ClassMetrics, ClassificationMetrics, Confusion};
pub use report::{MetricsReport, ModelReport, OperatingPoint};
pub use roc::{auc, roc_curve, RocCurve};
pub use screening::{screening_summary, ScreeningSummary};
pub use threshold::{choose_threshold, recall_at, recall_vs_threshold, threshold_grid, RecallCurves, ThresholdChoice, T_GRID_STEPS};
