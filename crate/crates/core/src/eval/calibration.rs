use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBin {
    pub index: usize,
    pub lower: f64,
    pub upper: f64,
    pub mean_predicted: f64,
    pub observed_fraction: f64,
    pub count: usize,
}

/// Reliability curve over equal-width bins on `[0, 1]`; only non-empty bins
/// are listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub bin_edges: Vec<f64>,
    pub bins: Vec<CalibrationBin>,
}

impl CalibrationCurve {
    pub fn total_count(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn max_abs_gap(&self) -> f64 {
        self.bins
            .iter()
            .map(|b| (b.observed_fraction - b.mean_predicted).abs())
            .fold(0.0, f64::max)
    }
}

/// Bins are `[k/n, (k+1)/n)` except the last, which is closed. Scores
/// outside `[0, 1]` are clamped into it.
pub fn calibration_curve(scores: &[f64], labels: &[u8], n_bins: usize) -> CalibrationCurve {
    let n_bins = n_bins.max(1);
    let edges: Vec<f64> = (0..=n_bins).map(|k| k as f64 / n_bins as f64).collect();
    let mut sum = vec![0.0; n_bins];
    let mut events = vec![0usize; n_bins];
    let mut count = vec![0usize; n_bins];
    for (&s, &y) in scores.iter().zip(labels) {
        let s = if s.is_nan() { 0.0 } else { s.clamp(0.0, 1.0) };
        let mut k = ((s * n_bins as f64).floor() as usize).min(n_bins - 1);
        // guard against rounding across an edge
        if s < edges[k] {
            k -= 1;
        } else if k + 1 < n_bins && s >= edges[k + 1] {
            k += 1;
        }
        sum[k] += s;
        events[k] += usize::from(y == 1);
        count[k] += 1;
    }
    let bins = (0..n_bins)
        .filter(|&k| count[k] > 0)
        .map(|k| CalibrationBin {
            index: k,
            lower: edges[k],
            upper: edges[k + 1],
            mean_predicted: sum[k] / count[k] as f64,
            observed_fraction: events[k] as f64 / count[k] as f64,
            count: count[k],
        })
        .collect();
    CalibrationCurve {
        bin_edges: edges,
        bins,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_on_diagonal() {
        let c = calibration_curve(&[0.5; 10], &[0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 10);
        assert_eq!(c.bins.len(), 1);
        assert_eq!(
            (c.bins[0].mean_predicted, c.bins[0].observed_fraction),
            (0.5, 0.5)
        );
        assert_eq!(c.bin_edges.len(), 11);
    }

    #[test]
    fn two_extreme_bins() {
        let c = calibration_curve(&[0.05, 0.95, 0.05, 0.95, 1.0], &[0, 1, 0, 1, 1], 10);
        assert_eq!(c.bins.len(), 2);
        assert_eq!(c.bins[1].index, 9);
        assert_eq!(c.total_count(), 5);
    }
}
