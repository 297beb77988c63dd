use ndarray::{ArrayView1, ArrayView2};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::binning::{BinMapper, BinnedMatrix, MAX_BINS};
use super::check_training_data;
use crate::rng::{stream, Rng};
use crate::serde_util::{decimal, decimal_vec};
use crate::{Error, Result};

/// Node of a binary tree stored in a flat array; the root is node 0.
/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature: Option<usize>,
    #[serde(with = "decimal")]
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    #[serde(with = "decimal")]
    pub leaf_value: f64,
    pub n_samples: usize,
    /// Class fractions at a leaf of a multiclass tree; empty otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty", with = "decimal_vec")]
    pub class_distribution: Vec<f64>,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.feature.is_none()
    }

    pub(crate) fn leaf(value: f64, n_samples: usize) -> Self {
        TreeNode {
            feature: None,
            threshold: 0.0,
            left: 0,
            right: 0,
            leaf_value: value,
            n_samples,
            class_distribution: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    pub fn leaf_index(&self, row: ArrayView1<f64>) -> usize {
        let mut i = 0;
        while let Some(f) = self.nodes[i].feature {
            let node = &self.nodes[i];
            i = if row[f] <= node.threshold {
                node.left
            } else {
                node.right
            };
        }
        i
    }

    pub fn predict_row(&self, row: ArrayView1<f64>) -> f64 {
        self.nodes[self.leaf_index(row)].leaf_value
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            let n = &t.nodes[i];
            if n.is_leaf() {
                0
            } else {
                1 + walk(t, n.left).max(walk(t, n.right))
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features considered at each node.
    pub feature_fraction: f64,
    pub n_bins: usize,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 8,
            min_samples_leaf: 1,
            feature_fraction: 1.0,
            n_bins: MAX_BINS,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "feature_fraction must lie in (0, 1], got {}",
                self.feature_fraction
            )));
        }
        Ok(())
    }
}

/// What a tree is grown to predict.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Target<'a> {
    /// Class codes in `0..k`; Gini impurity.
    Classes { y: &'a [u32], k: usize },
    /// Real values; squared error.
    Values(&'a [f64]),
}

impl Target<'_> {
    /// Stats layout per row: `[weight, score terms.., extra..]`.
    fn width(&self) -> usize {
        match self {
            Target::Classes { k, .. } => 1 + k,
            Target::Values(_) => 3,
        }
    }

    fn score_terms(&self) -> usize {
        match self {
            Target::Classes { k, .. } => *k,
            Target::Values(_) => 1,
        }
    }

    fn add(&self, row: usize, w: f64, out: &mut [f64]) {
        out[0] += w;
        match self {
            Target::Classes { y, .. } => out[1 + y[row] as usize] += w,
            Target::Values(v) => {
                out[1] += w * v[row];
                out[2] += w * v[row] * v[row];
            }
        }
    }
}

/// Impurity proxy: larger is purer. Gini and variance reduction both reduce
/// to sums of squared totals over the node weight.
fn score(stats: &[f64], terms: usize) -> f64 {
    if stats[0] <= 0.0 {
        return 0.0;
    }
    stats[1..=terms].iter().map(|c| c * c).sum::<f64>() / stats[0]
}

fn is_pure(target: &Target, stats: &[f64]) -> bool {
    match target {
        Target::Classes { .. } => stats[1..].iter().any(|&c| c == stats[0]),
        Target::Values(_) => {
            let var = stats[2] - stats[1] * stats[1] / stats[0];
            var <= 1e-12 * (stats[2].abs() + 1.0)
        }
    }
}

pub(crate) struct Grower<'a> {
    pub binned: &'a BinnedMatrix,
    pub mapper: &'a BinMapper,
    pub target: Target<'a>,
    pub weights: &'a [u32],
    pub params: TreeParams,
}

impl Grower<'_> {
    pub fn grow(&self, rng: &mut Rng) -> Tree {
        let rows: Vec<usize> = (0..self.binned.n_rows)
            .filter(|&i| self.weights[i] > 0)
            .collect();
        let mut nodes = Vec::new();
        self.build(rows, 0, &mut nodes, rng);
        Tree { nodes }
    }

    fn node_stats(&self, rows: &[usize]) -> Vec<f64> {
        let mut s = vec![0.0; self.target.width()];
        for &r in rows {
            self.target.add(r, f64::from(self.weights[r]), &mut s);
        }
        s
    }

    fn make_leaf(&self, stats: &[f64]) -> TreeNode {
        let w = stats[0];
        let mut node = TreeNode::leaf(0.0, w as usize);
        match self.target {
            Target::Classes { k, .. } => {
                if k == 2 {
                    node.leaf_value = stats[2] / w;
                } else {
                    node.class_distribution = stats[1..].iter().map(|c| c / w).collect();
                    let mut best = 0;
                    for c in 1..k {
                        if stats[1 + c] > stats[1 + best] {
                            best = c;
                        }
                    }
                    node.leaf_value = best as f64;
                }
            }
            Target::Values(_) => node.leaf_value = stats[1] / w,
        }
        node
    }

    fn build(
        &self,
        rows: Vec<usize>,
        depth: usize,
        nodes: &mut Vec<TreeNode>,
        rng: &mut Rng,
    ) -> usize {
        let stats = self.node_stats(&rows);
        let id = nodes.len();
        nodes.push(self.make_leaf(&stats));
        let msl = self.params.min_samples_leaf as f64;
        if depth >= self.params.max_depth || stats[0] < 2.0 * msl || is_pure(&self.target, &stats) {
            return id;
        }
        let Some((feature, bin)) = self.best_split(&rows, &stats, rng) else {
            return id;
        };
        let codes = &self.binned.codes[feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| codes[r] <= bin);
        let l = self.build(left, depth + 1, nodes, rng);
        let r = self.build(right, depth + 1, nodes, rng);
        let node = &mut nodes[id];
        node.feature = Some(feature);
        node.threshold = self.mapper.thresholds[feature][bin as usize];
        node.left = l;
        node.right = r;
        node.class_distribution.clear();
        id
    }

    fn candidate_features(&self, rng: &mut Rng) -> Vec<usize> {
        let p = self.mapper.n_features();
        let k = ((self.params.feature_fraction * p as f64).round() as usize).clamp(1, p);
        if k == p {
            return (0..p).collect();
        }
        let mut f = index::sample(rng, p, k).into_vec();
        f.sort_unstable();
        f
    }

    fn best_split(&self, rows: &[usize], parent: &[f64], rng: &mut Rng) -> Option<(usize, u8)> {
        let width = self.target.width();
        let terms = self.target.score_terms();
        let msl = self.params.min_samples_leaf as f64;
        let parent_score = score(parent, terms);
        let tol = 1e-12 * parent_score.abs().max(1.0);
        let mut best: Option<(f64, usize, u8)> = None;
        let mut hist = Vec::new();
        let mut left = vec![0.0; width];
        let mut right = vec![0.0; width];
        for f in self.candidate_features(rng) {
            let nb = self.mapper.n_bins(f);
            if nb < 2 {
                continue;
            }
            hist.clear();
            hist.resize(nb * width, 0.0);
            let codes = &self.binned.codes[f];
            for &r in rows {
                let b = codes[r] as usize;
                self.target.add(
                    r,
                    f64::from(self.weights[r]),
                    &mut hist[b * width..(b + 1) * width],
                );
            }
            left.iter_mut().for_each(|v| *v = 0.0);
            for b in 0..nb - 1 {
                for c in 0..width {
                    left[c] += hist[b * width + c];
                    right[c] = parent[c] - left[c];
                }
                if left[0] < msl || right[0] < msl {
                    continue;
                }
                let gain = score(&left, terms) + score(&right, terms) - parent_score;
                if gain < -tol {
                    continue;
                }
                if best.is_none_or(|(g, _, _)| gain > g + tol) {
                    best = Some((gain, f, b as u8));
                }
            }
        }
        best.map(|(_, f, b)| (f, b))
    }
}

/// CART classification tree on 0/1 labels; leaves hold the positive fraction.
pub fn fit_tree(x: ArrayView2<f64>, y: &[u8], params: &TreeParams) -> Result<Tree> {
    check_training_data(x, y)?;
    params.validate()?;
    if x.nrows() < 2 * params.min_samples_leaf {
        return Err(Error::TooFewRows {
            rows: x.nrows(),
            needed: 2 * params.min_samples_leaf,
        });
    }
    let mapper = BinMapper::fit(x, params.n_bins)?;
    let binned = mapper.transform(x);
    let codes: Vec<u32> = y.iter().map(|&v| u32::from(v)).collect();
    let weights = vec![1u32; x.nrows()];
    let grower = Grower {
        binned: &binned,
        mapper: &mapper,
        target: Target::Classes { y: &codes, k: 2 },
        weights: &weights,
        params: *params,
    };
    Ok(grower.grow(&mut stream(params.seed, "tree", 0)))
}
