//! Discrimination and calibration metrics, bootstrap intervals and paired
//! model comparison, repeated cross-validation and events-per-variable.

mod auc;
mod bootstrap;
mod calibration;
mod cv;
mod metrics;

pub use auc::{auc, roc_curve};
pub use bootstrap::{auc_ci, bootstrap_compare, ComparisonResult};
pub use calibration::{calibration_curve, CalibrationBin, CalibrationCurve};
pub use cv::{repeated_stratified_cv, CvFold, CvReport, FitPredict};
pub use metrics::{confusion_metrics, epv, metrics_report, ConfusionMetrics, Epv, MetricsReport};
