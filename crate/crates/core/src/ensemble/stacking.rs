use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{complement, require_both_classes, stratified_kfold};
use crate::learners::{
    fit_gnb, GnbModel, LearnerKind, LearnerParams, Model, DEFAULT_VAR_SMOOTHING,
};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// What the meta-learner sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaInput {
    /// The soft-vote: mean of the base positive-class probabilities.
    #[default]
    Average,
    /// Every base probability as its own feature.
    AllBase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingConfig {
    /// Forest, levelwise, leafwise and oblivious boosting, in that order.
    pub base_params: Vec<LearnerParams>,
    pub k_oof: usize,
    pub seed: u64,
    pub meta_input: MetaInput,
    pub var_smoothing: f64,
}

impl StackingConfig {
    pub fn new(base_params: Vec<LearnerParams>, seed: u64) -> Self {
        StackingConfig {
            base_params,
            k_oof: 5,
            seed,
            meta_input: MetaInput::Average,
            var_smoothing: DEFAULT_VAR_SMOOTHING,
        }
    }

    pub fn with_defaults(seed: u64) -> Self {
        Self::new(
            LearnerKind::BASE
                .iter()
                .map(|k| k.default_params())
                .collect(),
            seed,
        )
    }

    fn validate(&self) -> Result<()> {
        let kinds: Vec<LearnerKind> = self.base_params.iter().map(|p| p.kind()).collect();
        if kinds != LearnerKind::BASE {
            return Err(Error::InvalidArgument(format!(
                "stacking needs base learners {:?} in order, got {kinds:?}",
                LearnerKind::BASE
            )));
        }
        if self.k_oof < 2 {
            return Err(Error::InvalidArgument("k_oof must be at least 2".into()));
        }
        Ok(())
    }
}

/// Four base learners, a soft-vote and a Gaussian Naive Bayes meta-learner
/// trained on out-of-fold base outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackedModel {
    pub base_models: Vec<Model>,
    pub base_params: Vec<LearnerParams>,
    pub meta: GnbModel,
    pub meta_input: MetaInput,
    pub meta_input_arity: usize,
    pub oof_seed: u64,
    pub k_oof: usize,
    pub n_features: usize,
}

fn fit_seed(seed: u64, kind: LearnerKind, fold: usize) -> u64 {
    derive_seed(seed, kind.as_str(), fold as u64)
}

/// Per base learner, a full-length vector whose entry for each row comes from
/// the model fit without that row's fold.
pub fn oof_predictions(
    x: ArrayView2<f64>,
    y: &[u8],
    base_params: &[LearnerParams],
    folds: &[Vec<usize>],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    let n = y.len();
    let jobs: Vec<(usize, usize)> = (0..base_params.len())
        .flat_map(|m| (0..folds.len()).map(move |f| (m, f)))
        .collect();
    let preds: Vec<Result<Vec<f64>>> = jobs
        .par_iter()
        .map(|&(m, f)| {
            let train = complement(n, &folds[f]);
            let xtr = x.select(Axis(0), &train);
            let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let xte = x.select(Axis(0), &folds[f]);
            let p = &base_params[m];
            p.with_seed(fit_seed(seed, p.kind(), f))
                .fit(xtr.view(), &ytr)?
                .predict_proba(xte.view())
        })
        .collect();
    let mut out = vec![vec![f64::NAN; n]; base_params.len()];
    for (&(m, f), p) in jobs.iter().zip(preds) {
        for (&row, v) in folds[f].iter().zip(p?) {
            out[m][row] = v;
        }
    }
    if out.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(
            "folds do not cover every row".into(),
        ));
    }
    Ok(out)
}

/// Meta-learner design from per-model probability vectors.
pub fn meta_features(base_probs: &[Vec<f64>], meta_input: MetaInput) -> Array2<f64> {
    let n = base_probs.first().map_or(0, Vec::len);
    match meta_input {
        MetaInput::Average => {
            let k = base_probs.len() as f64;
            Array2::from_shape_fn((n, 1), |(i, _)| {
                base_probs.iter().map(|p| p[i]).sum::<f64>() / k
            })
        }
        MetaInput::AllBase => {
            Array2::from_shape_fn((n, base_probs.len()), |(i, m)| base_probs[m][i])
        }
    }
}

pub fn fit_stacking(x: ArrayView2<f64>, y: &[u8], config: &StackingConfig) -> Result<StackedModel> {
    config.validate()?;
    require_both_classes(y)?;
    if y.len() < 10 * config.k_oof {
        return Err(Error::TooFewRows {
            rows: y.len(),
            needed: 10 * config.k_oof,
        });
    }
    let folds = stratified_kfold(y, config.k_oof, derive_seed(config.seed, "oof_folds", 0))?;
    fit_stacking_with_folds(x, y, config, &folds)
}

/// As [`fit_stacking`] with explicit out-of-fold partitions.
pub fn fit_stacking_with_folds(
    x: ArrayView2<f64>,
    y: &[u8],
    config: &StackingConfig,
    folds: &[Vec<usize>],
) -> Result<StackedModel> {
    config.validate()?;
    let oof = oof_predictions(x, y, &config.base_params, folds, config.seed)?;
    let z = meta_features(&oof, config.meta_input);
    let meta = fit_gnb(z.view(), y, config.var_smoothing)?;
    let refit = folds.len();
    let base_models: Vec<Model> = config
        .base_params
        .par_iter()
        .map(|p| {
            p.with_seed(fit_seed(config.seed, p.kind(), refit))
                .fit(x, y)
        })
        .collect::<Result<_>>()?;
    Ok(StackedModel {
        base_models,
        base_params: config.base_params.clone(),
        meta,
        meta_input: config.meta_input,
        meta_input_arity: z.ncols(),
        oof_seed: config.seed,
        k_oof: folds.len(),
        n_features: x.ncols(),
    })
}

impl StackedModel {
    pub fn base_probabilities(&self, x: ArrayView2<f64>) -> Result<Vec<Vec<f64>>> {
        self.base_models
            .iter()
            .map(|m| m.predict_proba(x))
            .collect()
    }

    /// Mean base probability per row.
    pub fn soft_vote(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let b = self.base_probabilities(x)?;
        Ok(meta_features(&b, MetaInput::Average).column(0).to_vec())
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        let b = self.base_probabilities(x)?;
        self.meta
            .predict_proba(meta_features(&b, self.meta_input).view())
    }
}
