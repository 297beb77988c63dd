use serde::{Deserialize, Serialize};

use super::auc::auc;
use super::bootstrap::auc_ci;
use crate::data::require_both_classes;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub weighted_f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn f1(tp: f64, fp: f64, fn_: f64) -> f64 {
    let d = 2.0 * tp + fp + fn_;
    if d == 0.0 {
        0.0
    } else {
        2.0 * tp / d
    }
}

/// Threshold metrics with the positive class predicted iff `score >= threshold`.
pub fn confusion_metrics(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
) -> Result<ConfusionMetrics> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    require_both_classes(labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let n = scores.len() as f64;
    let (tpf, fpf, tnf, fnf) = (tp as f64, fp as f64, tn as f64, fn_ as f64);
    let pos = tpf + fnf;
    let neg = tnf + fpf;
    let weighted_f1 = (pos * f1(tpf, fpf, fnf) + neg * f1(tnf, fnf, fpf)) / n;
    Ok(ConfusionMetrics {
        accuracy: (tpf + tnf) / n,
        sensitivity: tpf / pos,
        specificity: tnf / neg,
        weighted_f1,
        tp,
        fp,
        tn,
        fn_,
    })
}

/// Test-set summary of a scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub auc_ci_low: f64,
    pub auc_ci_high: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub weighted_f1: f64,
    pub n: usize,
    pub n_events: usize,
    pub threshold: f64,
}

pub fn metrics_report(
    scores: &[f64],
    labels: &[u8],
    threshold: f64,
    n_boot: usize,
    seed: u64,
) -> Result<MetricsReport> {
    let a = auc(scores, labels)?;
    let (low, high) = auc_ci(scores, labels, n_boot, 0.95, seed)?;
    let c = confusion_metrics(scores, labels, threshold)?;
    Ok(MetricsReport {
        auc: a,
        auc_ci_low: low,
        auc_ci_high: high,
        accuracy: c.accuracy,
        sensitivity: c.sensitivity,
        specificity: c.specificity,
        weighted_f1: c.weighted_f1,
        n: labels.len(),
        n_events: labels.iter().filter(|&&l| l == 1).count(),
        threshold,
    })
}

/// Rows-per-predictor and events-per-predictor ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Epv {
    /// Training rows per predictor.
    pub rows_ratio: f64,
    /// Training events per predictor.
    pub events_ratio: f64,
    /// At least ten events per predictor.
    pub adequate: bool,
}

pub fn epv(n_train_rows: usize, n_events_train: usize, n_predictors: usize) -> Result<Epv> {
    if n_predictors == 0 {
        return Err(Error::ZeroPredictors);
    }
    let p = n_predictors as f64;
    let events_ratio = n_events_train as f64 / p;
    Ok(Epv {
        rows_ratio: n_train_rows as f64 / p,
        events_ratio,
        adequate: events_ratio >= 10.0,
    })
}
