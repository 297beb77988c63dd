//! Shapley-value attributions with an interventional value function.
//!
//! `v(S)` is the mean model output over a background sample with the
//! features in `S` fixed to the explained row. [`shap_exact`] enumerates all
//! coalitions (up to 15 features); [`shap_permutation`] averages marginal
//! contributions over random feature orders.

mod shapley;
mod summary;

use ndarray::ArrayView2;

use crate::ensemble::StackedModel;
use crate::learners::Model;
use crate::Result;

pub use shapley::{
    explain_rows, select_background, shap_exact, shap_permutation, ExplainConfig, ShapMatrix,
    ShapMethod, ShapRow, DEFAULT_BACKGROUND_SIZE, MAX_EXACT_FEATURES, MIN_PERMUTATIONS,
};
pub use summary::{
    shap_summarize, write_beeswarm_csv, BeeswarmPoint, Direction, FeatureSummary, ShapSummary,
    SHAP_UNITS_NOTE,
};

/// Anything that maps a batch of rows to one output per row.
pub trait Explainable: Sync {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>>;
}

impl<F> Explainable for F
where
    F: Fn(ArrayView2<f64>) -> Result<Vec<f64>> + Sync,
{
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        self(x)
    }
}

impl Explainable for Model {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.predict_proba(x)
    }
}

impl Explainable for StackedModel {
    fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.predict_proba(x)
    }
}
