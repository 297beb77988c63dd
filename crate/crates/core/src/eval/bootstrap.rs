use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::auc::{auc, sort_order, weighted_auc_sorted};
use crate::data::percentile_sorted;
use crate::data::require_both_classes;
use crate::rng::stream;
use crate::serde_util::lenient_f64;
use crate::stats::sample_sd;
use crate::stats::special::normal_sf;
use crate::{Error, Result};

const MAX_REDRAWS: usize = 1000;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Stratified bootstrap percentile interval for the AUC. Positives and
/// negatives are resampled separately, so every replicate has both classes.
/// The interval is widened if needed to contain the point estimate.
pub fn auc_ci(
    scores: &[f64],
    labels: &[u8],
    n_boot: usize,
    level: f64,
    seed: u64,
) -> Result<(f64, f64)> {
    check_lengths(scores.len(), labels.len())?;
    require_both_classes(labels)?;
    if n_boot < 100 {
        return Err(Error::InvalidArgument(format!(
            "n_boot must be at least 100, got {n_boot}"
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "level must lie in (0, 1), got {level}"
        )));
    }
    let point = auc(scores, labels)?;
    let order = sort_order(scores);
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    let mut reps: Vec<f64> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, "auc_ci", b as u64);
            let mut w = vec![0u32; labels.len()];
            for class in [&pos, &neg] {
                for _ in 0..class.len() {
                    w[class[rng.random_range(0..class.len())]] += 1;
                }
            }
            weighted_auc_sorted(&order, scores, labels, Some(&w))
        })
        .collect();
    reps.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    let low = percentile_sorted(&reps, alpha).min(point);
    let high = percentile_sorted(&reps, 1.0 - alpha).max(point);
    Ok((low, high))
}

/// Paired bootstrap test of `AUC_a > AUC_b` on the same rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub auc_a: f64,
    pub auc_b: f64,
    pub difference: f64,
    pub sd: f64,
    #[serde(with = "lenient_f64")]
    pub z: f64,
    pub p_one_sided: f64,
    pub n_boot: usize,
    /// Single-class replicates that were drawn again.
    pub n_redrawn: usize,
    pub seed: u64,
}

/// `Z = (AUC_a − AUC_b) / sd(bootstrap differences)`, `p = 1 − Φ(Z)`.
///
/// Replicates resample all rows with replacement at the original size; a
/// replicate holding one class only is drawn again. When the differences
/// have zero spread, p is 0.5 for a zero observed difference and 0 or 1 by
/// its sign otherwise.
pub fn bootstrap_compare(
    scores_a: &[f64],
    scores_b: &[f64],
    labels: &[u8],
    n_boot: usize,
    seed: u64,
) -> Result<ComparisonResult> {
    check_lengths(scores_a.len(), labels.len())?;
    check_lengths(scores_b.len(), labels.len())?;
    require_both_classes(labels)?;
    if n_boot < 2 {
        return Err(Error::InvalidArgument(format!(
            "n_boot must be at least 2, got {n_boot}"
        )));
    }
    let auc_a = auc(scores_a, labels)?;
    let auc_b = auc(scores_b, labels)?;
    let order_a = sort_order(scores_a);
    let order_b = sort_order(scores_b);
    let n = labels.len();
    let reps: Vec<Result<(f64, usize)>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream(seed, "bootstrap_compare", b as u64);
            let mut w = vec![0u32; n];
            for redraws in 0..MAX_REDRAWS {
                w.iter_mut().for_each(|v| *v = 0);
                let mut pos = 0usize;
                for _ in 0..n {
                    let r = rng.random_range(0..n);
                    w[r] += 1;
                    pos += usize::from(labels[r]);
                }
                if pos > 0 && pos < n {
                    let da = weighted_auc_sorted(&order_a, scores_a, labels, Some(&w));
                    let db = weighted_auc_sorted(&order_b, scores_b, labels, Some(&w));
                    return Ok((da - db, redraws));
                }
            }
            Err(Error::DegenerateResample {
                attempts: MAX_REDRAWS,
            })
        })
        .collect();
    let mut diffs = Vec::with_capacity(n_boot);
    let mut n_redrawn = 0;
    for r in reps {
        let (d, k) = r?;
        diffs.push(d);
        n_redrawn += k;
    }
    let difference = auc_a - auc_b;
    let sd = sample_sd(&diffs);
    let (z, p) = if sd > 0.0 {
        let z = difference / sd;
        (z, normal_sf(z))
    } else if difference == 0.0 {
        (0.0, 0.5)
    } else if difference > 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        (f64::NEG_INFINITY, 1.0)
    };
    Ok(ComparisonResult {
        auc_a,
        auc_b,
        difference,
        sd,
        z,
        p_one_sided: p.clamp(0.0, 1.0),
        n_boot,
        n_redrawn,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation_interval() {
        let s: Vec<f64> = (0..40).map(f64::from).collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from(i >= 20)).collect();
        assert_eq!(auc_ci(&s, &y, 200, 0.95, 1).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn identical_scores_degenerate_rule() {
        let s: Vec<f64> = (0..30).map(|i| f64::from(i % 7)).collect();
        let y: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let r = bootstrap_compare(&s, &s, &y, 500, 3).unwrap();
        assert_eq!(r.p_one_sided, 0.5);
        assert_eq!(r.sd, 0.0);
    }

    #[test]
    fn deterministic() {
        let s: Vec<f64> = (0..50).map(|i| f64::from((i * 17) % 23)).collect();
        let t: Vec<f64> = (0..50).map(|i| f64::from((i * 11) % 19)).collect();
        let y: Vec<u8> = (0..50).map(|i| u8::from(i % 4 == 0)).collect();
        assert_eq!(
            auc_ci(&s, &y, 300, 0.95, 5).unwrap(),
            auc_ci(&s, &y, 300, 0.95, 5).unwrap()
        );
        assert_eq!(
            bootstrap_compare(&s, &t, &y, 300, 5).unwrap(),
            bootstrap_compare(&s, &t, &y, 300, 5).unwrap()
        );
    }
}
