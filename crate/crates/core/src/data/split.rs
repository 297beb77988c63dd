use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{class_counts, Labels};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

fn shuffled_classes(labels: &Labels, rng: &mut rng::Rng) -> (Vec<usize>, Vec<usize>) {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
    pos.shuffle(rng);
    neg.shuffle(rng);
    (pos, neg)
}

/// Choose `size` rows so that the positive count is the closest integer to
/// `size * prevalence`. Returns (chosen, rest), both sorted.
fn stratified_take(labels: &Labels, size: usize, rng: &mut rng::Rng) -> (Vec<usize>, Vec<usize>) {
    let n = labels.len();
    let (n_neg, n_pos) = class_counts(labels);
    let mut k_pos = ((size as f64) * (n_pos as f64) / (n as f64)).round() as usize;
    k_pos = k_pos.min(n_pos).max(size.saturating_sub(n_neg));
    let k_neg = size - k_pos;

    let (pos, neg) = shuffled_classes(labels, rng);
    let mut chosen: Vec<usize> = pos[..k_pos].iter().chain(&neg[..k_neg]).copied().collect();
    let mut rest: Vec<usize> = pos[k_pos..].iter().chain(&neg[k_neg..]).copied().collect();
    chosen.sort_unstable();
    rest.sort_unstable();
    (chosen, rest)
}

/// Stratified train/test split with `round(n * train_fraction)` training rows.
pub fn stratified_split(labels: &Labels, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train_fraction {train_fraction} outside (0, 1)"
        )));
    }
    super::require_both_classes(labels)?;
    let n = labels.len();
    let size = ((n as f64) * train_fraction).round() as usize;
    if size == 0 || size == n {
        return Err(Error::TooFewRows { rows: n, needed: 1 });
    }
    let mut rng = rng::stream(seed, "stratified_split", 0);
    let (train, test) = stratified_take(labels, size, &mut rng);
    Ok(SplitIndices {
        train,
        test,
        seed,
        train_fraction,
    })
}

/// Stratified sample of `size` row indices (sorted), e.g. a SHAP background set.
pub fn stratified_sample(labels: &Labels, size: usize, seed: u64) -> Result<Vec<usize>> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("no rows to sample".into()));
    }
    let size = size.min(labels.len());
    let mut rng = rng::stream(seed, "stratified_sample", 0);
    Ok(stratified_take(labels, size, &mut rng).0)
}

/// Stratified k-fold partition. Returns the held-out (test) rows of each fold,
/// sorted. Class members are dealt round-robin so every fold holds
/// `floor` or `ceil` of each class's share.
pub fn stratified_kfold(labels: &Labels, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "k-fold needs k >= 2, got {k}"
        )));
    }
    let (n_neg, n_pos) = class_counts(labels);
    if n_neg == 0 || n_pos == 0 {
        return Err(Error::SingleClass);
    }
    if n_pos < k || n_neg < k {
        return Err(Error::TooFewRows {
            rows: n_pos.min(n_neg),
            needed: k,
        });
    }
    let mut rng = rng::stream(seed, "stratified_kfold", 0);
    let (pos, neg) = shuffled_classes(labels, &mut rng);
    let mut folds = vec![Vec::new(); k];
    for (i, &row) in pos.iter().chain(&neg).enumerate() {
        folds[i % k].push(row);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Complement of a fold's held-out rows.
pub(crate) fn complement(n: usize, held_out: &[usize]) -> Vec<usize> {
    let mut mask = vec![false; n];
    for &r in held_out {
        mask[r] = true;
    }
    (0..n).filter(|&r| !mask[r]).collect()
}
