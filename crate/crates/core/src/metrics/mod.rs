//! AUROC, average precision, accuracy and macro-F1, seed aggregation and
//! learning curves.

mod classification;
mod curve;
mod report;

pub use classification::{accuracy, aupr, aupr_binary, auroc, auroc_binary, macro_f1, ScoredPredictions};
pub use curve::{learning_curve, stratified_subset, CurveRow, CurveSpec, LearningCurve, CURVE_HEADER};
pub use report::{aggregate_seeds, reports_to_csv, MetricMap, MetricSummary, MetricsReport, TABLE_HEADER};
