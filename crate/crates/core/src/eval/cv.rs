use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::auc::auc;
use super::metrics::confusion_metrics;
use crate::data::{complement, stratified_kfold};
use crate::learners::{LearnerParams, DEFAULT_THRESHOLD};
use crate::rng::derive_seed;
use crate::stats::{mean, sample_sd};
use crate::{Error, Result};

/// Anything that can be trained on one set of rows and score another.
pub trait FitPredict: Sync {
    fn fit_predict(
        &self,
        x_train: ArrayView2<f64>,
        y_train: &[u8],
        x_test: ArrayView2<f64>,
        seed: u64,
    ) -> Result<Vec<f64>>;
}

impl FitPredict for LearnerParams {
    fn fit_predict(
        &self,
        x_train: ArrayView2<f64>,
        y_train: &[u8],
        x_test: ArrayView2<f64>,
        seed: u64,
    ) -> Result<Vec<f64>> {
        self.with_seed(seed)
            .fit(x_train, y_train)?
            .predict_proba(x_test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvFold {
    pub repeat: usize,
    pub fold: usize,
    pub n_test: usize,
    pub n_events: usize,
    pub auc: f64,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub weighted_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub repeats: usize,
    pub seed: u64,
    pub folds: Vec<CvFold>,
    pub mean_auc: f64,
    pub sd_auc: f64,
}

/// `repeats` independent stratified k-fold partitions; every fold is scored
/// by a model fit on the remaining folds.
pub fn repeated_stratified_cv<M: FitPredict + ?Sized>(
    model: &M,
    x: ArrayView2<f64>,
    y: &[u8],
    k: usize,
    repeats: usize,
    seed: u64,
) -> Result<CvReport> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if y.len() < 10 * k {
        return Err(Error::TooFewRows {
            rows: y.len(),
            needed: 10 * k,
        });
    }
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let mut folds = Vec::with_capacity(k * repeats);
    for r in 0..repeats {
        let parts = stratified_kfold(y, k, derive_seed(seed, "repeated_cv", r as u64))?;
        for (f, test) in parts.iter().enumerate() {
            let train = complement(y.len(), test);
            let xtr = x.select(Axis(0), &train);
            let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let xte = x.select(Axis(0), test);
            let yte: Vec<u8> = test.iter().map(|&i| y[i]).collect();
            let fit_seed = derive_seed(seed, "repeated_cv_fit", (r * k + f) as u64);
            let scores = model.fit_predict(xtr.view(), &ytr, xte.view(), fit_seed)?;
            let c = confusion_metrics(&scores, &yte, DEFAULT_THRESHOLD)?;
            folds.push(CvFold {
                repeat: r,
                fold: f,
                n_test: test.len(),
                n_events: yte.iter().filter(|&&v| v == 1).count(),
                auc: auc(&scores, &yte)?,
                accuracy: c.accuracy,
                sensitivity: c.sensitivity,
                specificity: c.specificity,
                weighted_f1: c.weighted_f1,
            });
        }
    }
    let aucs: Vec<f64> = folds.iter().map(|f| f.auc).collect();
    Ok(CvReport {
        k,
        repeats,
        seed,
        mean_auc: mean(&aucs),
        sd_auc: sample_sd(&aucs),
        folds,
    })
}
