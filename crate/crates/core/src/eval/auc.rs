use crate::data::require_both_classes;
use crate::{Error, Result};

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    require_both_classes(labels)?;
    let order = sort_order(scores);
    Ok(weighted_auc_sorted(&order, scores, labels, None))
}

pub(crate) fn sort_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    order
}

/// AUC over rows visited in ascending score order, each row counted
/// `weights[row]` times. Returns NaN when a class has zero total weight.
pub(crate) fn weighted_auc_sorted(
    order: &[usize],
    scores: &[f64],
    labels: &[u8],
    weights: Option<&[u32]>,
) -> f64 {
    let w = |r: usize| weights.map_or(1.0, |w| f64::from(w[r]));
    // twice the number of correctly ordered pairs, kept integral
    let mut twice_correct = 0.0;
    let mut neg_below = 0.0;
    let mut total_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut pos_t, mut neg_t) = (0.0, 0.0);
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            let r = order[j];
            if labels[r] == 1 {
                pos_t += w(r);
            } else {
                neg_t += w(r);
            }
            j += 1;
        }
        twice_correct += pos_t * (2.0 * neg_below + neg_t);
        neg_below += neg_t;
        total_pos += pos_t;
        i = j;
    }
    if total_pos == 0.0 || neg_below == 0.0 {
        return f64::NAN;
    }
    twice_correct / (2.0 * total_pos * neg_below)
}

/// ROC operating points `(fpr, tpr, threshold)` from the strictest threshold
/// down; the first point is `(0, 0, +inf)`.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<(f64, f64, f64)>> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    require_both_classes(labels)?;
    let mut order = sort_order(scores);
    order.reverse();
    let p = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n = labels.len() as f64 - p;
    let mut pts = vec![(0.0, 0.0, f64::INFINITY)];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            i += 1;
        }
        pts.push((fp / n, tp / p, s));
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap(), 0.75);
        assert_eq!(auc(&[0.5; 4], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert!(matches!(auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn weights_equal_duplicated_rows() {
        let s = [0.3, 0.1, 0.3, 0.9, 0.5];
        let y = [1, 0, 0, 1, 0];
        let w = [2, 1, 3, 1, 2];
        let order = sort_order(&s);
        let weighted = weighted_auc_sorted(&order, &s, &y, Some(&w));
        let (mut ds, mut dy) = (Vec::new(), Vec::new());
        for i in 0..5 {
            for _ in 0..w[i] {
                ds.push(s[i]);
                dy.push(y[i]);
            }
        }
        assert_eq!(weighted, auc(&ds, &dy).unwrap());
    }

    #[test]
    fn roc_endpoints() {
        let pts = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!(pts.first().map(|p| (p.0, p.1)), Some((0.0, 0.0)));
        assert_eq!(pts.last().map(|p| (p.0, p.1)), Some((1.0, 1.0)));
        assert_eq!(pts.len(), 5);
    }
}
