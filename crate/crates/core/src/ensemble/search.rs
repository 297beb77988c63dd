use std::collections::BTreeMap;

use ndarray::{ArrayView2, Axis};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{complement, stratified_kfold};
use crate::eval::auc;
use crate::learners::{LearnerKind, LearnerParams};
use crate::rng::{derive_seed, stream, Rng};
use crate::{Error, Result};

/// Distribution of one hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ParamDist {
    /// Integers in `[low, high]`.
    IntRange {
        low: i64,
        high: i64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// `exp(U(ln low, ln high))`.
    LogUniform {
        low: f64,
        high: f64,
    },
    Choice {
        values: Vec<f64>,
    },
}

impl ParamDist {
    fn validate(&self, name: &str) -> Result<()> {
        let ok = match self {
            ParamDist::IntRange { low, high } => low <= high,
            ParamDist::Uniform { low, high } => low <= high && low.is_finite() && high.is_finite(),
            ParamDist::LogUniform { low, high } => *low > 0.0 && low <= high && high.is_finite(),
            ParamDist::Choice { values } => !values.is_empty(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "invalid distribution for '{name}': {self:?}"
            )))
        }
    }

    fn sample(&self, rng: &mut Rng) -> f64 {
        match self {
            ParamDist::IntRange { low, high } => rng.random_range(*low..=*high) as f64,
            ParamDist::Uniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.random_range(*low..*high)
                }
            }
            ParamDist::LogUniform { low, high } => {
                if low == high {
                    *low
                } else {
                    rng.random_range(low.ln()..high.ln()).exp()
                }
            }
            ParamDist::Choice { values } => values[rng.random_range(0..values.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: BTreeMap<String, ParamDist>,
    pub n_iter: usize,
    pub k_folds: usize,
    pub seed: u64,
}

pub const DEFAULT_N_ITER: usize = 30;

fn int(low: i64, high: i64) -> ParamDist {
    ParamDist::IntRange { low, high }
}

fn log(low: f64, high: f64) -> ParamDist {
    ParamDist::LogUniform { low, high }
}

fn uniform(low: f64, high: f64) -> ParamDist {
    ParamDist::Uniform { low, high }
}

impl SearchSpace {
    /// Default ranges for a learner family.
    pub fn default_for(kind: LearnerKind, seed: u64) -> Self {
        let mut p = BTreeMap::new();
        match kind {
            LearnerKind::Logistic => {
                p.insert("l2_lambda".into(), log(1e-6, 1.0));
            }
            LearnerKind::RandomForest => {
                p.insert("n_trees".into(), int(50, 150));
                p.insert("max_depth".into(), int(4, 12));
                p.insert("min_samples_leaf".into(), int(1, 30));
                p.insert("feature_fraction".into(), uniform(0.15, 0.6));
            }
            LearnerKind::GbtLevelwise | LearnerKind::GbtLeafwise | LearnerKind::GbtOblivious => {
                p.insert("n_rounds".into(), int(40, 200));
                p.insert("learning_rate".into(), log(0.02, 0.3));
                p.insert("l2_lambda".into(), log(0.1, 10.0));
                p.insert("min_child_weight".into(), log(0.5, 20.0));
                p.insert("feature_fraction".into(), uniform(0.5, 1.0));
                match kind {
                    LearnerKind::GbtLeafwise => {
                        p.insert("max_leaves".into(), int(4, 32));
                    }
                    _ => {
                        p.insert("max_depth".into(), int(2, 6));
                    }
                }
            }
        }
        SearchSpace {
            params: p,
            n_iter: DEFAULT_N_ITER,
            k_folds: 5,
            seed,
        }
    }

    /// Draws `n_iter` configurations in order; parameters are sampled in
    /// name order within each configuration.
    pub fn sample(&self) -> Result<Vec<BTreeMap<String, f64>>> {
        for (name, d) in &self.params {
            d.validate(name)?;
        }
        let mut rng = stream(self.seed, "random_search", 0);
        Ok((0..self.n_iter)
            .map(|_| {
                self.params
                    .iter()
                    .map(|(k, d)| (k.clone(), d.sample(&mut rng)))
                    .collect()
            })
            .collect())
    }
}

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!(
            "'{name}' needs a non-negative integer, got {v}"
        )))
    }
}

/// Overrides named fields of `base` with sampled values.
pub fn apply_params(base: LearnerParams, values: &BTreeMap<String, f64>) -> Result<LearnerParams> {
    let mut out = base;
    for (name, &v) in values {
        let unknown = || {
            Error::InvalidArgument(format!(
                "unknown hyperparameter '{name}' for {}",
                base.kind()
            ))
        };
        match &mut out {
            LearnerParams::Logistic(p) => match name.as_str() {
                "l2_lambda" => p.l2_lambda = v,
                "max_iter" => p.max_iter = as_count(name, v)?,
                _ => return Err(unknown()),
            },
            LearnerParams::Forest(p) => match name.as_str() {
                "n_trees" => p.n_trees = as_count(name, v)?,
                "max_depth" => p.max_depth = as_count(name, v)?,
                "min_samples_leaf" => p.min_samples_leaf = as_count(name, v)?,
                "feature_fraction" => p.feature_fraction = v,
                "n_bins" => p.n_bins = as_count(name, v)?,
                _ => return Err(unknown()),
            },
            LearnerParams::Gbt(p) => match name.as_str() {
                "n_rounds" => p.n_rounds = as_count(name, v)?,
                "learning_rate" => p.learning_rate = v,
                "max_depth" => p.max_depth = as_count(name, v)?,
                "max_leaves" => p.max_leaves = as_count(name, v)?,
                "l2_lambda" => p.l2_lambda = v,
                "gamma" => p.gamma = v,
                "min_child_weight" => p.min_child_weight = v,
                "feature_fraction" => p.feature_fraction = v,
                "n_bins" => p.n_bins = as_count(name, v)?,
                _ => return Err(unknown()),
            },
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub values: BTreeMap<String, f64>,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub kind: LearnerKind,
    pub best_index: usize,
    pub best_params: LearnerParams,
    pub best_auc: f64,
    pub trials: Vec<Trial>,
}

/// Random search maximizing mean validation AUC over stratified folds that
/// are shared by every configuration. Ties go to the earliest configuration.
pub fn random_search(
    kind: LearnerKind,
    space: &SearchSpace,
    x: ArrayView2<f64>,
    y: &[u8],
) -> Result<SearchResult> {
    random_search_from(kind.default_params(), space, x, y)
}

/// As [`random_search`], overriding fields of the given base parameters.
pub fn random_search_from(
    base: LearnerParams,
    space: &SearchSpace,
    x: ArrayView2<f64>,
    y: &[u8],
) -> Result<SearchResult> {
    if space.n_iter == 0 {
        return Err(Error::InvalidArgument("n_iter must be at least 1".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    let kind = base.kind();
    let configs = space.sample()?;
    let candidates: Vec<LearnerParams> = configs
        .iter()
        .map(|v| apply_params(base, v))
        .collect::<Result<_>>()?;
    let folds = stratified_kfold(y, space.k_folds, derive_seed(space.seed, "search_folds", 0))?;
    let splits: Vec<(Vec<usize>, &Vec<usize>)> =
        folds.iter().map(|t| (complement(y.len(), t), t)).collect();

    let jobs: Vec<(usize, usize)> = (0..candidates.len())
        .flat_map(|c| (0..splits.len()).map(move |f| (c, f)))
        .collect();
    let scores: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (train, test) = &splits[f];
            let xtr = x.select(Axis(0), train);
            let ytr: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let xte = x.select(Axis(0), test);
            let yte: Vec<u8> = test.iter().map(|&i| y[i]).collect();
            let seed = derive_seed(space.seed, kind.as_str(), (c * splits.len() + f) as u64);
            let p = candidates[c]
                .with_seed(seed)
                .fit(xtr.view(), &ytr)?
                .predict_proba(xte.view())?;
            auc(&p, &yte)
        })
        .collect();
    let mut trials = Vec::with_capacity(candidates.len());
    let mut it = scores.into_iter();
    for (c, values) in configs.into_iter().enumerate() {
        let fold_aucs: Vec<f64> = (0..splits.len())
            .map(|_| it.next().expect("one score per job"))
            .collect::<Result<_>>()?;
        let mean_auc = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
        trials.push(Trial {
            index: c,
            values,
            fold_aucs,
            mean_auc,
        });
    }
    let mut best = 0;
    for t in &trials {
        if t.mean_auc > trials[best].mean_auc {
            best = t.index;
        }
    }
    Ok(SearchResult {
        kind,
        best_index: best,
        best_params: candidates[best].with_seed(derive_seed(space.seed, kind.as_str(), u64::MAX)),
        best_auc: trials[best].mean_auc,
        trials,
    })
}
