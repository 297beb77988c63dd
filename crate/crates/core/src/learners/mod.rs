//! Supervised learners written from scratch: CART trees, random forests,
//! histogram gradient boosting in three growth variants, L2 logistic
//! regression and Gaussian Naive Bayes.

mod binning;
mod forest;
mod gbt;
mod gnb;
mod logistic;
mod tree;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use binning::{BinMapper, BinnedMatrix, MAX_BINS};
pub use forest::{
    fit_forest_classes, fit_forest_regression, fit_random_forest, ForestModel, ForestParams,
    ForestTask,
};
pub use gbt::{fit_gbt, GbtModel, GbtParams, GbtVariant};
pub use gnb::{fit_gnb, GnbModel, DEFAULT_VAR_SMOOTHING};
pub use logistic::{
    fit_logistic, fit_logistic_trace, logistic_loss_grad, LogisticModel, LogisticParams,
};
pub use tree::{fit_tree, Tree, TreeNode, TreeParams};

use crate::{Error, Result};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_training_data(x: ArrayView2<f64>, y: &[u8]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "design matrix contains non-finite values".into(),
        ));
    }
    crate::data::require_both_classes(y)
}

pub(crate) fn check_prediction_input(x: ArrayView2<f64>, n_features: usize) -> Result<()> {
    if x.ncols() != n_features {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            found: x.ncols(),
        });
    }
    Ok(())
}

/// Learner families available to search and stacking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    Logistic,
    RandomForest,
    GbtLevelwise,
    GbtLeafwise,
    GbtOblivious,
}

impl LearnerKind {
    /// The four base learners of the stacked ensemble, in layer order.
    pub const BASE: [LearnerKind; 4] = [
        LearnerKind::RandomForest,
        LearnerKind::GbtLevelwise,
        LearnerKind::GbtLeafwise,
        LearnerKind::GbtOblivious,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::Logistic => "logistic",
            LearnerKind::RandomForest => "random_forest",
            LearnerKind::GbtLevelwise => "gbt_levelwise",
            LearnerKind::GbtLeafwise => "gbt_leafwise",
            LearnerKind::GbtOblivious => "gbt_oblivious",
        }
    }

    pub fn default_params(self) -> LearnerParams {
        match self {
            LearnerKind::Logistic => LearnerParams::Logistic(LogisticParams::default()),
            LearnerKind::RandomForest => LearnerParams::Forest(ForestParams::default()),
            LearnerKind::GbtLevelwise => LearnerParams::Gbt(GbtParams::new(GbtVariant::Levelwise)),
            LearnerKind::GbtLeafwise => LearnerParams::Gbt(GbtParams::new(GbtVariant::Leafwise)),
            LearnerKind::GbtOblivious => LearnerParams::Gbt(GbtParams::new(GbtVariant::Oblivious)),
        }
    }
}

impl std::fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            LearnerKind::Logistic,
            LearnerKind::RandomForest,
            LearnerKind::GbtLevelwise,
            LearnerKind::GbtLeafwise,
            LearnerKind::GbtOblivious,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown learner '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", content = "params", rename_all = "snake_case")]
pub enum LearnerParams {
    Logistic(LogisticParams),
    Forest(ForestParams),
    Gbt(GbtParams),
}

impl LearnerParams {
    pub fn kind(&self) -> LearnerKind {
        match self {
            LearnerParams::Logistic(_) => LearnerKind::Logistic,
            LearnerParams::Forest(_) => LearnerKind::RandomForest,
            LearnerParams::Gbt(p) => match p.variant {
                GbtVariant::Levelwise => LearnerKind::GbtLevelwise,
                GbtVariant::Leafwise => LearnerKind::GbtLeafwise,
                GbtVariant::Oblivious => LearnerKind::GbtOblivious,
            },
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            LearnerParams::Logistic(_) => {}
            LearnerParams::Forest(p) => p.seed = seed,
            LearnerParams::Gbt(p) => p.seed = seed,
        }
        self
    }

    pub fn fit(&self, x: ArrayView2<f64>, y: &[u8]) -> Result<Model> {
        Ok(match self {
            LearnerParams::Logistic(p) => Model::Logistic(fit_logistic(x, y, p)?),
            LearnerParams::Forest(p) => Model::Forest(fit_random_forest(x, y, p)?),
            LearnerParams::Gbt(p) => Model::Gbt(fit_gbt(x, y, p)?),
        })
    }
}

/// A fitted binary classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum Model {
    Logistic(LogisticModel),
    Forest(ForestModel),
    Gbt(GbtModel),
    Gnb(GnbModel),
}

impl Model {
    /// Positive-class probability per row.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        match self {
            Model::Logistic(m) => m.predict_proba(x),
            Model::Forest(m) => m.predict_proba(x),
            Model::Gbt(m) => m.predict_proba(x),
            Model::Gnb(m) => m.predict_proba(x),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Logistic(m) => m.weights.len(),
            Model::Forest(m) => m.n_features,
            Model::Gbt(m) => m.n_features,
            Model::Gnb(m) => m.n_features(),
        }
    }
}

/// Labels from probabilities: positive iff `p >= threshold`.
pub fn classify(probabilities: &[f64], threshold: f64) -> Vec<u8> {
    probabilities
        .iter()
        .map(|&p| u8::from(p >= threshold))
        .collect()
}

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(
            classify(&[0.5, 0.4999999, 0.9], DEFAULT_THRESHOLD),
            vec![1, 0, 1]
        );
    }

    #[test]
    fn sigmoid_tails() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kind_round_trip() {
        for k in LearnerKind::BASE {
            assert_eq!(k.as_str().parse::<LearnerKind>().unwrap(), k);
            assert_eq!(k.default_params().kind(), k);
        }
    }
}
