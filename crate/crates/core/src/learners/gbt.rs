use ndarray::ArrayView2;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{BinMapper, BinnedMatrix, MAX_BINS};
use super::tree::{Tree, TreeNode};
use super::{check_prediction_input, check_training_data, sigmoid};
use crate::rng::stream;
use crate::serde_util::decimal;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GbtVariant {
    /// Every node of a level is split, up to `max_depth`.
    Levelwise,
    /// The leaf with the largest gain is split next, up to `max_leaves`.
    Leafwise,
    /// One `(feature, threshold)` shared by all nodes of a level.
    Oblivious,
}

impl GbtVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            GbtVariant::Levelwise => "levelwise",
            GbtVariant::Leafwise => "leafwise",
            GbtVariant::Oblivious => "oblivious",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub variant: GbtVariant,
    pub n_rounds: usize,
    pub learning_rate: f64,
    /// Depth limit; for the leafwise variant 0 means unlimited.
    pub max_depth: usize,
    /// Leaf limit of the leafwise variant.
    pub max_leaves: usize,
    pub l2_lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
    /// Fraction of features available to each tree.
    pub feature_fraction: f64,
    pub n_bins: usize,
    pub seed: u64,
}

impl GbtParams {
    pub fn new(variant: GbtVariant) -> Self {
        GbtParams {
            variant,
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 4,
            max_leaves: 15,
            l2_lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
            feature_fraction: 1.0,
            n_bins: MAX_BINS,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.l2_lambda >= 0.0) || !(self.gamma >= 0.0) || !(self.min_child_weight >= 0.0) {
            return bad("l2_lambda, gamma and min_child_weight must be >= 0".into());
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return bad(format!(
                "feature_fraction must lie in (0, 1], got {}",
                self.feature_fraction
            ));
        }
        if self.variant == GbtVariant::Leafwise && self.max_leaves < 2 {
            return bad("max_leaves must be at least 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub variant: GbtVariant,
    pub trees: Vec<Tree>,
    #[serde(with = "decimal")]
    pub learning_rate: f64,
    #[serde(with = "decimal")]
    pub base_score: f64,
    pub bin_edges: BinMapper,
    pub n_features: usize,
}

impl GbtModel {
    pub fn predict_raw(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_prediction_input(x, self.n_features)?;
        Ok(x.rows()
            .into_iter()
            .map(|r| {
                self.base_score
                    + self.learning_rate * self.trees.iter().map(|t| t.predict_row(r)).sum::<f64>()
            })
            .collect())
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        Ok(self.predict_raw(x)?.into_iter().map(sigmoid).collect())
    }
}

// gradient statistics are summed in fixed point so that totals do not
// depend on row order or on how the work is split
const SCALE: f64 = (1u64 << 40) as f64;

fn to_fixed(v: f64) -> i64 {
    (v * SCALE).round() as i64
}

fn from_fixed(v: i64) -> f64 {
    v as f64 / SCALE
}

#[derive(Clone)]
struct Hist {
    g: Vec<i64>,
    h: Vec<i64>,
}

impl Hist {
    fn minus(&self, other: &Hist) -> Hist {
        Hist {
            g: self.g.iter().zip(&other.g).map(|(a, b)| a - b).collect(),
            h: self.h.iter().zip(&other.h).map(|(a, b)| a - b).collect(),
        }
    }
}

#[derive(Clone, Copy)]
struct Split {
    gain: f64,
    feature: usize,
    bin: u8,
}

struct Node {
    id: usize,
    depth: usize,
    rows: Vec<usize>,
    hist: Hist,
    g: i64,
    h: i64,
}

struct Builder<'a> {
    binned: &'a BinnedMatrix,
    mapper: &'a BinMapper,
    offsets: Vec<usize>,
    total_bins: usize,
    features: Vec<usize>,
    gq: &'a [i64],
    hq: &'a [i64],
    params: &'a GbtParams,
}

impl Builder<'_> {
    fn hist(&self, rows: &[usize]) -> Hist {
        let mut g = vec![0i64; self.total_bins];
        let mut h = vec![0i64; self.total_bins];
        let fill = |f: usize, gs: &mut [i64], hs: &mut [i64]| {
            let codes = &self.binned.codes[f];
            for &r in rows {
                let b = codes[r] as usize;
                gs[b] += self.gq[r];
                hs[b] += self.hq[r];
            }
        };
        // features occupy disjoint slices
        let mut gslices: Vec<&mut [i64]> = Vec::with_capacity(self.offsets.len());
        let mut hslices: Vec<&mut [i64]> = Vec::with_capacity(self.offsets.len());
        let (mut gr, mut hr) = (&mut g[..], &mut h[..]);
        for f in 0..self.mapper.n_features() {
            let (a, b) = gr.split_at_mut(self.mapper.n_bins(f));
            let (c, d) = hr.split_at_mut(self.mapper.n_bins(f));
            gslices.push(a);
            hslices.push(c);
            gr = b;
            hr = d;
        }
        let mut jobs: Vec<(usize, &mut [i64], &mut [i64])> = gslices
            .into_iter()
            .zip(hslices)
            .enumerate()
            .filter(|(f, _)| self.features.binary_search(f).is_ok())
            .map(|(f, (a, b))| (f, a, b))
            .collect();
        if rows.len() * jobs.len() > 1 << 16 {
            jobs.par_iter_mut().for_each(|(f, a, b)| fill(*f, a, b));
        } else {
            jobs.iter_mut().for_each(|(f, a, b)| fill(*f, a, b));
        }
        Hist { g, h }
    }

    fn leaf_weight(&self, g: i64, h: i64) -> f64 {
        let hv = from_fixed(h) + self.params.l2_lambda;
        if hv <= 0.0 {
            0.0
        } else {
            -from_fixed(g) / hv
        }
    }

    fn score(&self, g: i64, h: i64) -> f64 {
        let hv = from_fixed(h) + self.params.l2_lambda;
        if hv <= 0.0 {
            0.0
        } else {
            let gv = from_fixed(g);
            gv * gv / hv
        }
    }

    /// Calls `visit(feature, bin, gain)` for every admissible split of a node;
    /// gains exclude `gamma`.
    fn for_each_split(
        &self,
        hist: &Hist,
        g: i64,
        h: i64,
        mut visit: impl FnMut(usize, usize, f64),
    ) {
        let parent = self.score(g, h);
        let mcw = self.params.min_child_weight;
        for &f in &self.features {
            let nb = self.mapper.n_bins(f);
            let off = self.offsets[f];
            let (mut gl, mut hl) = (0i64, 0i64);
            for b in 0..nb.saturating_sub(1) {
                gl += hist.g[off + b];
                hl += hist.h[off + b];
                let (gr, hr) = (g - gl, h - hl);
                if from_fixed(hl) < mcw || from_fixed(hr) < mcw {
                    continue;
                }
                let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - parent);
                visit(f, b, gain);
            }
        }
    }

    fn best_split(&self, node: &Node) -> Option<Split> {
        let mut best: Option<Split> = None;
        self.for_each_split(&node.hist, node.g, node.h, |f, b, gain| {
            let gain = gain - self.params.gamma;
            if gain > 0.0 && best.is_none_or(|s| gain > s.gain) {
                best = Some(Split {
                    gain,
                    feature: f,
                    bin: b as u8,
                });
            }
        });
        best
    }

    fn leaf_node(&self, rows: usize, g: i64, h: i64) -> TreeNode {
        TreeNode::leaf(self.leaf_weight(g, h), rows)
    }

    fn root(&self, n: usize) -> Node {
        let rows: Vec<usize> = (0..n).collect();
        let g = self.gq.iter().sum();
        let h = self.hq.iter().sum();
        let hist = self.hist(&rows);
        Node {
            id: 0,
            depth: 0,
            rows,
            hist,
            g,
            h,
        }
    }

    /// Applies a split to `node`, appending two leaves to `nodes`.
    fn split(
        &self,
        node: Node,
        feature: usize,
        bin: u8,
        nodes: &mut Vec<TreeNode>,
    ) -> (Node, Node) {
        let codes = &self.binned.codes[feature];
        let (lrows, rrows): (Vec<usize>, Vec<usize>) =
            node.rows.iter().partition(|&&r| codes[r] <= bin);
        let (small_is_left, small) = if lrows.len() <= rrows.len() {
            (true, &lrows)
        } else {
            (false, &rrows)
        };
        let small_hist = self.hist(small);
        let big_hist = node.hist.minus(&small_hist);
        let (lh, rh) = if small_is_left {
            (small_hist, big_hist)
        } else {
            (big_hist, small_hist)
        };
        let lg: i64 = lrows.iter().map(|&r| self.gq[r]).sum();
        let lhs: i64 = lrows.iter().map(|&r| self.hq[r]).sum();
        let (rg, rhs) = (node.g - lg, node.h - lhs);
        let lid = nodes.len();
        nodes.push(self.leaf_node(lrows.len(), lg, lhs));
        nodes.push(self.leaf_node(rrows.len(), rg, rhs));
        let parent = &mut nodes[node.id];
        parent.feature = Some(feature);
        parent.threshold = self.mapper.thresholds[feature][bin as usize];
        parent.left = lid;
        parent.right = lid + 1;
        let d = node.depth + 1;
        (
            Node {
                id: lid,
                depth: d,
                rows: lrows,
                hist: lh,
                g: lg,
                h: lhs,
            },
            Node {
                id: lid + 1,
                depth: d,
                rows: rrows,
                hist: rh,
                g: rg,
                h: rhs,
            },
        )
    }

    /// Grows one tree and returns it with the final leaves' rows.
    fn grow(&self, n: usize) -> (Tree, Vec<Node>) {
        let root = self.root(n);
        let mut nodes = vec![self.leaf_node(n, root.g, root.h)];
        let leaves = match self.params.variant {
            GbtVariant::Levelwise => self.grow_levelwise(root, &mut nodes),
            GbtVariant::Leafwise => self.grow_leafwise(root, &mut nodes),
            GbtVariant::Oblivious => self.grow_oblivious(root, &mut nodes),
        };
        (Tree { nodes }, leaves)
    }

    fn grow_levelwise(&self, root: Node, nodes: &mut Vec<TreeNode>) -> Vec<Node> {
        let mut level = vec![root];
        let mut done = Vec::new();
        while !level.is_empty() {
            let mut next = Vec::new();
            for node in level {
                let split = if node.depth < self.params.max_depth {
                    self.best_split(&node)
                } else {
                    None
                };
                match split {
                    Some(s) => {
                        let (l, r) = self.split(node, s.feature, s.bin, nodes);
                        next.push(l);
                        next.push(r);
                    }
                    None => done.push(node),
                }
            }
            level = next;
        }
        done
    }

    fn grow_leafwise(&self, root: Node, nodes: &mut Vec<TreeNode>) -> Vec<Node> {
        let depth_ok = |d: usize| self.params.max_depth == 0 || d < self.params.max_depth;
        let mut leaves: Vec<(Node, Option<Split>)> = Vec::new();
        let s = if depth_ok(0) {
            self.best_split(&root)
        } else {
            None
        };
        leaves.push((root, s));
        while leaves.len() < self.params.max_leaves {
            let mut pick: Option<usize> = None;
            for (i, (node, s)) in leaves.iter().enumerate() {
                if let Some(s) = s {
                    let better = match pick {
                        None => true,
                        Some(j) => {
                            let (bn, bs) = (&leaves[j].0, leaves[j].1.expect("candidate"));
                            s.gain > bs.gain || (s.gain == bs.gain && node.id < bn.id)
                        }
                    };
                    if better {
                        pick = Some(i);
                    }
                }
            }
            let Some(i) = pick else { break };
            let (node, s) = leaves.swap_remove(i);
            let s = s.expect("candidate");
            let (l, r) = self.split(node, s.feature, s.bin, nodes);
            for child in [l, r] {
                let cs = if depth_ok(child.depth) {
                    self.best_split(&child)
                } else {
                    None
                };
                leaves.push((child, cs));
            }
        }
        leaves.into_iter().map(|(n, _)| n).collect()
    }

    fn grow_oblivious(&self, root: Node, nodes: &mut Vec<TreeNode>) -> Vec<Node> {
        let mut level = vec![root];
        for _ in 0..self.params.max_depth {
            let mut total = vec![0.0f64; self.total_bins];
            let mut admissible = vec![false; self.total_bins];
            for node in &level {
                self.for_each_split(&node.hist, node.g, node.h, |f, b, gain| {
                    total[self.offsets[f] + b] += gain;
                    admissible[self.offsets[f] + b] = true;
                });
            }
            let mut best: Option<Split> = None;
            for &f in &self.features {
                for b in 0..self.mapper.n_bins(f).saturating_sub(1) {
                    let k = self.offsets[f] + b;
                    if !admissible[k] {
                        continue;
                    }
                    let gain = total[k] - self.params.gamma;
                    if gain > 0.0 && best.is_none_or(|s| gain > s.gain) {
                        best = Some(Split {
                            gain,
                            feature: f,
                            bin: b as u8,
                        });
                    }
                }
            }
            let Some(s) = best else { break };
            let mut next = Vec::with_capacity(level.len() * 2);
            for node in level {
                let (l, r) = self.split(node, s.feature, s.bin, nodes);
                next.push(l);
                next.push(r);
            }
            level = next;
        }
        level
    }
}

/// Gradient-boosted trees on logistic loss with second-order histogram splits.
pub fn fit_gbt(x: ArrayView2<f64>, y: &[u8], params: &GbtParams) -> Result<GbtModel> {
    check_training_data(x, y)?;
    params.validate()?;
    let n = x.nrows();
    let p = x.ncols();
    let mapper = BinMapper::fit(x, params.n_bins)?;
    let binned = mapper.transform(x);
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let rate = pos / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let mut model = GbtModel {
        variant: params.variant,
        trees: Vec::new(),
        learning_rate: params.learning_rate,
        base_score,
        bin_edges: mapper.clone(),
        n_features: p,
    };
    if params.learning_rate == 0.0 {
        return Ok(model);
    }
    let mut offsets = Vec::with_capacity(p);
    let mut total_bins = 0;
    for f in 0..p {
        offsets.push(total_bins);
        total_bins += mapper.n_bins(f);
    }
    let n_feat = ((params.feature_fraction * p as f64).round() as usize).clamp(1, p);
    let mut raw = vec![base_score; n];
    let mut gq = vec![0i64; n];
    let mut hq = vec![0i64; n];
    for round in 0..params.n_rounds {
        for i in 0..n {
            let pr = sigmoid(raw[i]);
            let g = pr - f64::from(y[i]);
            let h = pr * (1.0 - pr);
            if !(raw[i].is_finite() && g.is_finite() && h.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    round,
                    details: format!("row {i}: raw score {}, gradient {g}, hessian {h}", raw[i]),
                });
            }
            gq[i] = to_fixed(g);
            hq[i] = to_fixed(h);
        }
        let features: Vec<usize> = if n_feat == p {
            (0..p).collect()
        } else {
            let mut f = index::sample(
                &mut stream(params.seed, "gbt_features", round as u64),
                p,
                n_feat,
            )
            .into_vec();
            f.sort_unstable();
            f
        };
        let builder = Builder {
            binned: &binned,
            mapper: &mapper,
            offsets: offsets.clone(),
            total_bins,
            features,
            gq: &gq,
            hq: &hq,
            params,
        };
        let (tree, leaves) = builder.grow(n);
        for leaf in &leaves {
            let step = params.learning_rate * tree.nodes[leaf.id].leaf_value;
            for &r in &leaf.rows {
                raw[r] += step;
            }
        }
        model.trees.push(tree);
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use ndarray::Array2;
    use rand::Rng as _;

    fn data(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = stream(seed, "gbt_test", 0);
        let x = Array2::from_shape_fn((n, 2), |_| rng.random_range(-1.0..1.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| u8::from(r[0] - r[1] > 0.0))
            .collect();
        (x, y)
    }

    fn log_loss(p: &[f64], y: &[u8]) -> f64 {
        p.iter()
            .zip(y)
            .map(|(&p, &y)| {
                if y == 1 {
                    -p.max(1e-15).ln()
                } else {
                    -(1.0 - p).max(1e-15).ln()
                }
            })
            .sum::<f64>()
            / y.len() as f64
    }

    #[test]
    fn zero_rounds_predicts_base_rate() {
        let (x, y) = data(100, 1);
        let rate = y.iter().filter(|&&v| v == 1).count() as f64 / 100.0;
        let mut p = GbtParams::new(GbtVariant::Levelwise);
        p.n_rounds = 0;
        let a = fit_gbt(x.view(), &y, &p)
            .unwrap()
            .predict_proba(x.view())
            .unwrap();
        for v in &a {
            assert!((v - rate).abs() < 1e-12);
        }
        p.n_rounds = 20;
        p.learning_rate = 0.0;
        let b = fit_gbt(x.view(), &y, &p)
            .unwrap()
            .predict_proba(x.view())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_variants_fit_separable_data() {
        let (x, y) = data(300, 2);
        for v in [
            GbtVariant::Levelwise,
            GbtVariant::Leafwise,
            GbtVariant::Oblivious,
        ] {
            let mut p = GbtParams::new(v);
            p.n_rounds = 50;
            p.learning_rate = 0.3;
            p.max_depth = 4;
            p.min_child_weight = 0.0;
            let m = fit_gbt(x.view(), &y, &p).unwrap();
            let prob = m.predict_proba(x.view()).unwrap();
            assert!(log_loss(&prob, &y) < 0.1, "{v:?}: {}", log_loss(&prob, &y));
        }
    }

    #[test]
    fn oblivious_levels_share_one_split() {
        let (x, y) = data(200, 3);
        let mut p = GbtParams::new(GbtVariant::Oblivious);
        p.n_rounds = 5;
        let m = fit_gbt(x.view(), &y, &p).unwrap();
        for t in &m.trees {
            let mut level = vec![0usize];
            while !level.is_empty() {
                let splits: std::collections::BTreeSet<(usize, u64)> = level
                    .iter()
                    .filter_map(|&i| {
                        t.nodes[i]
                            .feature
                            .map(|f| (f, t.nodes[i].threshold.to_bits()))
                    })
                    .collect();
                assert!(splits.len() <= 1);
                if !splits.is_empty() {
                    assert!(level.iter().all(|&i| !t.nodes[i].is_leaf()));
                }
                level = level
                    .iter()
                    .filter(|&&i| !t.nodes[i].is_leaf())
                    .flat_map(|&i| [t.nodes[i].left, t.nodes[i].right])
                    .collect();
            }
        }
    }

    #[test]
    fn leafwise_respects_leaf_limit() {
        let (x, y) = data(300, 4);
        let mut p = GbtParams::new(GbtVariant::Leafwise);
        p.max_leaves = 5;
        p.max_depth = 0;
        p.n_rounds = 5;
        for t in fit_gbt(x.view(), &y, &p).unwrap().trees {
            assert!(t.n_leaves() <= 5);
        }
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = data(10, 5);
        let p = GbtParams::new(GbtVariant::Levelwise);
        assert!(matches!(
            fit_gbt(x.view(), &[0; 10], &p),
            Err(Error::SingleClass)
        ));
    }
}
