use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_prediction_input, check_training_data};
use crate::serde_util::{decimal, decimal_vec, decimal_vec2};
use crate::{Error, Result};

/// Gaussian Naive Bayes over two classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    #[serde(with = "decimal_vec")]
    pub class_priors: Vec<f64>,
    /// `means[class][feature]`
    #[serde(with = "decimal_vec2")]
    pub means: Vec<Vec<f64>>,
    #[serde(with = "decimal_vec2")]
    pub variances: Vec<Vec<f64>>,
    /// Absolute amount added to every variance.
    #[serde(with = "decimal")]
    pub var_smoothing: f64,
}

pub const DEFAULT_VAR_SMOOTHING: f64 = 1e-9;

/// Population per-class means and variances; `var_smoothing` is a multiple
/// of the largest feature variance over all rows.
pub fn fit_gnb(x: ArrayView2<f64>, y: &[u8], var_smoothing: f64) -> Result<GnbModel> {
    check_training_data(x, y)?;
    let (n, p) = x.dim();
    let mut max_var = 0.0f64;
    for col in x.columns() {
        let m = col.sum() / n as f64;
        let v = col.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n as f64;
        max_var = max_var.max(v);
    }
    let mut eps = var_smoothing * max_var;
    if eps <= 0.0 {
        eps = var_smoothing.max(f64::MIN_POSITIVE);
    }
    let mut priors = Vec::with_capacity(2);
    let mut means = Vec::with_capacity(2);
    let mut variances = Vec::with_capacity(2);
    for class in 0..2u8 {
        let rows: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
        let k = rows.len() as f64;
        priors.push(k / n as f64);
        let mu: Vec<f64> = (0..p)
            .map(|j| rows.iter().map(|&i| x[[i, j]]).sum::<f64>() / k)
            .collect();
        let var: Vec<f64> = (0..p)
            .map(|j| {
                rows.iter()
                    .map(|&i| (x[[i, j]] - mu[j]).powi(2))
                    .sum::<f64>()
                    / k
                    + eps
            })
            .collect();
        means.push(mu);
        variances.push(var);
    }
    Ok(GnbModel {
        class_priors: priors,
        means,
        variances,
        var_smoothing: eps,
    })
}

impl GnbModel {
    pub fn from_parts(
        class_priors: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let p = means.first().map_or(0, Vec::len);
        if class_priors.len() != 2 || means.len() != 2 || variances.len() != 2 {
            return Err(Error::InvalidArgument(
                "GNB needs exactly two classes".into(),
            ));
        }
        if means.iter().chain(&variances).any(|v| v.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: 0,
            });
        }
        if variances.iter().flatten().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidArgument("variances must be positive".into()));
        }
        Ok(GnbModel {
            class_priors,
            means,
            variances,
            var_smoothing: 0.0,
        })
    }

    pub fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn log_joint(&self, class: usize, row: impl Iterator<Item = f64>) -> f64 {
        let mut s = self.class_priors[class].ln();
        for (j, v) in row.enumerate() {
            let var = self.variances[class][j];
            let d = v - self.means[class][j];
            s -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var);
        }
        s
    }

    /// Posterior probability of class 1.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_prediction_input(x, self.n_features())?;
        Ok(x.rows()
            .into_iter()
            .map(|r| {
                let l0 = self.log_joint(0, r.iter().copied());
                let l1 = self.log_joint(1, r.iter().copied());
                posterior(l0, l1)
            })
            .collect())
    }
}

fn posterior(l0: f64, l1: f64) -> f64 {
    if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
        return 0.5;
    }
    let m = l0.max(l1);
    let e0 = (l0 - m).exp();
    let e1 = (l1 - m).exp();
    e1 / (e0 + e1)
}
