use ndarray::ArrayView2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{BinMapper, MAX_BINS};
use super::tree::{Grower, Target, Tree, TreeParams};
use super::{check_prediction_input, check_training_data};
use crate::rng::stream;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub feature_fraction: f64,
    pub bootstrap: bool,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: 10,
            min_samples_leaf: 1,
            feature_fraction: 0.33,
            bootstrap: true,
            n_bins: MAX_BINS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "classes")]
pub enum ForestTask {
    Binary,
    Multiclass(usize),
    Regression,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_features: usize,
    pub task: ForestTask,
    /// Trees were grown on bootstrap resamples, so out-of-bag rows exist.
    pub oob_enabled: bool,
    pub seed: u64,
}

fn tree_params(p: &ForestParams, t: usize) -> TreeParams {
    TreeParams {
        max_depth: p.max_depth,
        min_samples_leaf: p.min_samples_leaf,
        feature_fraction: p.feature_fraction,
        n_bins: p.n_bins,
        seed: crate::rng::derive_seed(p.seed, "forest_tree", t as u64),
    }
}

fn grow_forest(
    x: ArrayView2<f64>,
    target: Target,
    task: ForestTask,
    params: &ForestParams,
) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
    }
    tree_params(params, 0).validate()?;
    let n = x.nrows();
    if n < 2 * params.min_samples_leaf {
        return Err(Error::TooFewRows {
            rows: n,
            needed: 2 * params.min_samples_leaf,
        });
    }
    let mapper = BinMapper::fit(x, params.n_bins)?;
    let binned = mapper.transform(x);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let tp = tree_params(params, t);
            let weights = if params.bootstrap {
                let mut rng = stream(params.seed, "forest_bootstrap", t as u64);
                let mut w = vec![0u32; n];
                for _ in 0..n {
                    w[rng.random_range(0..n)] += 1;
                }
                w
            } else {
                vec![1u32; n]
            };
            let grower = Grower {
                binned: &binned,
                mapper: &mapper,
                target,
                weights: &weights,
                params: tp,
            };
            grower.grow(&mut stream(tp.seed, "tree", 0))
        })
        .collect();
    Ok(ForestModel {
        trees,
        n_features: x.ncols(),
        task,
        oob_enabled: params.bootstrap,
        seed: params.seed,
    })
}

/// Random forest on 0/1 labels; probability is the mean leaf positive fraction.
pub fn fit_random_forest(
    x: ArrayView2<f64>,
    y: &[u8],
    params: &ForestParams,
) -> Result<ForestModel> {
    check_training_data(x, y)?;
    let codes: Vec<u32> = y.iter().map(|&v| u32::from(v)).collect();
    grow_forest(
        x,
        Target::Classes { y: &codes, k: 2 },
        ForestTask::Binary,
        params,
    )
}

/// Forest over class codes `0..k` (k ≥ 2).
pub fn fit_forest_classes(
    x: ArrayView2<f64>,
    y: &[u32],
    k: usize,
    params: &ForestParams,
) -> Result<ForestModel> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if k < 2 || y.iter().any(|&c| c as usize >= k) {
        return Err(Error::InvalidArgument(format!(
            "class codes must lie in 0..{k} with k >= 2"
        )));
    }
    grow_forest(
        x,
        Target::Classes { y, k },
        ForestTask::Multiclass(k),
        params,
    )
}

pub fn fit_forest_regression(
    x: ArrayView2<f64>,
    y: &[f64],
    params: &ForestParams,
) -> Result<ForestModel> {
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    if x.nrows() == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    grow_forest(x, Target::Values(y), ForestTask::Regression, params)
}

impl ForestModel {
    fn mean_leaf_values(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_prediction_input(x, self.n_features)?;
        let k = self.trees.len() as f64;
        Ok(x.rows()
            .into_iter()
            .map(|r| self.trees.iter().map(|t| t.predict_row(r)).sum::<f64>() / k)
            .collect())
    }

    /// Positive-class probabilities of a binary forest.
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if self.task != ForestTask::Binary {
            return Err(Error::InvalidArgument(
                "predict_proba needs a binary forest".into(),
            ));
        }
        Ok(self
            .mean_leaf_values(x)?
            .into_iter()
            .map(|p| p.clamp(0.0, 1.0))
            .collect())
    }

    pub fn predict_values(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if self.task != ForestTask::Regression {
            return Err(Error::InvalidArgument(
                "predict_values needs a regression forest".into(),
            ));
        }
        self.mean_leaf_values(x)
    }

    /// Mean class distribution over trees; rows sum to 1.
    pub fn predict_distribution(&self, x: ArrayView2<f64>) -> Result<Vec<Vec<f64>>> {
        let k = match self.task {
            ForestTask::Multiclass(k) => k,
            ForestTask::Binary => 2,
            ForestTask::Regression => {
                return Err(Error::InvalidArgument(
                    "class distribution of a regression forest".into(),
                ))
            }
        };
        check_prediction_input(x, self.n_features)?;
        let nt = self.trees.len() as f64;
        Ok(x.rows()
            .into_iter()
            .map(|r| {
                let mut acc = vec![0.0; k];
                for t in &self.trees {
                    let leaf = &t.nodes[t.leaf_index(r)];
                    if leaf.class_distribution.is_empty() {
                        acc[0] += 1.0 - leaf.leaf_value;
                        acc[1] += leaf.leaf_value;
                    } else {
                        acc.iter_mut()
                            .zip(&leaf.class_distribution)
                            .for_each(|(a, p)| *a += p);
                    }
                }
                acc.iter_mut().for_each(|a| *a /= nt);
                acc
            })
            .collect())
    }

    /// Class with the highest mean probability; ties go to the lower code.
    pub fn predict_classes(&self, x: ArrayView2<f64>) -> Result<Vec<u32>> {
        Ok(self
            .predict_distribution(x)?
            .into_iter()
            .map(|d| {
                let mut best = 0;
                for c in 1..d.len() {
                    if d[c] > d[best] {
                        best = c;
                    }
                }
                best as u32
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::tree::fit_tree;
    use ndarray::Array2;

    fn separable(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = stream(seed, "test", 0);
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-1.0..1.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| u8::from(r[0] + 0.5 * r[1] > 0.0))
            .collect();
        (x, y)
    }

    #[test]
    fn single_tree_without_bootstrap_equals_fit_tree() {
        let (x, y) = separable(200, 1);
        let fp = ForestParams {
            n_trees: 1,
            bootstrap: false,
            feature_fraction: 1.0,
            max_depth: 4,
            ..ForestParams::default()
        };
        let forest = fit_random_forest(x.view(), &y, &fp).unwrap();
        let tp = TreeParams {
            max_depth: 4,
            ..TreeParams::default()
        };
        let tree = fit_tree(x.view(), &y, &tp).unwrap();
        assert_eq!(forest.trees[0], tree);
        assert_eq!(
            forest.predict_proba(x.view()).unwrap(),
            tree.predict(x.view())
        );
    }

    #[test]
    fn separable_holdout_accuracy() {
        let (x, y) = separable(600, 2);
        let (xt, yt) = separable(400, 3);
        let fp = ForestParams {
            n_trees: 50,
            seed: 5,
            ..ForestParams::default()
        };
        let forest = fit_random_forest(x.view(), &y, &fp).unwrap();
        let p = forest.predict_proba(xt.view()).unwrap();
        let acc = p
            .iter()
            .zip(&yt)
            .filter(|(p, &y)| (**p >= 0.5) == (y == 1))
            .count() as f64
            / yt.len() as f64;
        assert!(acc >= 0.95, "{acc}");
    }

    #[test]
    fn deterministic_for_seed() {
        let (x, y) = separable(150, 4);
        let fp = ForestParams {
            n_trees: 10,
            seed: 9,
            ..ForestParams::default()
        };
        let a = fit_random_forest(x.view(), &y, &fp)
            .unwrap()
            .predict_proba(x.view())
            .unwrap();
        let b = fit_random_forest(x.view(), &y, &fp)
            .unwrap()
            .predict_proba(x.view())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn regression_and_multiclass() {
        let x = Array2::from_shape_fn((90, 1), |(i, _)| i as f64);
        let v: Vec<f64> = (0..90).map(|i| if i < 45 { 1.0 } else { 3.0 }).collect();
        let fp = ForestParams {
            n_trees: 5,
            bootstrap: false,
            feature_fraction: 1.0,
            ..ForestParams::default()
        };
        let f = fit_forest_regression(x.view(), &v, &fp).unwrap();
        assert_eq!(f.predict_values(x.view()).unwrap(), v);
        let c: Vec<u32> = (0..90).map(|i| (i / 30) as u32).collect();
        let f = fit_forest_classes(x.view(), &c, 3, &fp).unwrap();
        assert_eq!(f.predict_classes(x.view()).unwrap(), c);
        for d in f.predict_distribution(x.view()).unwrap() {
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
