use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::serde_util::decimal_vec2;
use crate::{Error, Result};

pub const MAX_BINS: usize = 256;

/// Per-feature split candidates. A value `x` falls in bin
/// `#{t in thresholds : t < x}`, so `bin(x) <= b` exactly when
/// `x <= thresholds[b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    #[serde(with = "decimal_vec2")]
    pub thresholds: Vec<Vec<f64>>,
}

impl BinMapper {
    /// Midpoints between consecutive distinct values; equal-frequency cut
    /// points when a feature has more than `max_bins` distinct values.
    pub fn fit(x: ArrayView2<f64>, max_bins: usize) -> Result<Self> {
        Self::fit_rows(x, None, max_bins)
    }

    pub fn fit_rows(x: ArrayView2<f64>, rows: Option<&[usize]>, max_bins: usize) -> Result<Self> {
        if !(2..=MAX_BINS).contains(&max_bins) {
            return Err(Error::InvalidArgument(format!(
                "n_bins must lie in 2..={MAX_BINS}, got {max_bins}"
            )));
        }
        let thresholds = (0..x.ncols())
            .map(|j| {
                let col = x.column(j);
                let mut v: Vec<f64> = match rows {
                    Some(r) => r.iter().map(|&i| col[i]).collect(),
                    None => col.to_vec(),
                };
                v.sort_by(f64::total_cmp);
                feature_thresholds(&v, max_bins)
            })
            .collect();
        Ok(BinMapper { thresholds })
    }

    pub fn n_features(&self) -> usize {
        self.thresholds.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }

    pub fn bin(&self, feature: usize, value: f64) -> u8 {
        self.thresholds[feature].partition_point(|&t| t < value) as u8
    }

    /// Column-major bin codes for all rows of `x`.
    pub fn transform(&self, x: ArrayView2<f64>) -> BinnedMatrix {
        let n = x.nrows();
        let codes = (0..self.n_features())
            .map(|j| x.column(j).iter().map(|&v| self.bin(j, v)).collect())
            .collect();
        BinnedMatrix { n_rows: n, codes }
    }
}

fn feature_thresholds(sorted: &[f64], max_bins: usize) -> Vec<f64> {
    let mut distinct: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for &v in sorted {
        if distinct.last() == Some(&v) {
            *counts.last_mut().expect("non-empty") += 1;
        } else {
            distinct.push(v);
            counts.push(1);
        }
    }
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    // equal-frequency: cut after the distinct value where the cumulative
    // count first reaches each multiple of n / max_bins
    let n = sorted.len() as f64;
    let mut out = Vec::with_capacity(max_bins - 1);
    let mut cum = 0usize;
    let mut next = 1usize;
    for i in 0..distinct.len() - 1 {
        cum += counts[i];
        if next < max_bins && cum as f64 >= n * next as f64 / max_bins as f64 {
            out.push(midpoint(distinct[i], distinct[i + 1]));
            while next < max_bins && cum as f64 >= n * next as f64 / max_bins as f64 {
                next += 1;
            }
        }
    }
    out
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    /// `codes[feature][row]`
    pub codes: Vec<Vec<u8>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn midpoints_for_few_values() {
        let x = Array2::from_shape_vec((5, 1), vec![3.0, 1.0, 2.0, 2.0, 1.0]).unwrap();
        let m = BinMapper::fit(x.view(), 256).unwrap();
        assert_eq!(m.thresholds[0], vec![1.5, 2.5]);
        assert_eq!(m.bin(0, 1.0), 0);
        assert_eq!(m.bin(0, 1.5), 0);
        assert_eq!(m.bin(0, 2.0), 1);
        assert_eq!(m.bin(0, 9.0), 2);
    }

    #[test]
    fn equal_frequency_caps_bins() {
        let x = Array2::from_shape_fn((1000, 1), |(i, _)| i as f64);
        let m = BinMapper::fit(x.view(), 16).unwrap();
        assert!(m.n_bins(0) <= 16);
        let b = m.transform(x.view());
        let mut counts = vec![0; m.n_bins(0)];
        for &c in &b.codes[0] {
            counts[c as usize] += 1;
        }
        for c in counts {
            assert!((60..=65).contains(&c), "{c}");
        }
    }

    #[test]
    fn constant_feature_has_one_bin() {
        let x = Array2::from_elem((4, 1), 7.0);
        let m = BinMapper::fit(x.view(), 256).unwrap();
        assert_eq!(m.n_bins(0), 1);
    }

    #[test]
    fn bin_order_matches_threshold_rule() {
        let x = Array2::from_shape_fn((300, 1), |(i, _)| ((i * 37) % 101) as f64 * 0.5);
        let m = BinMapper::fit(x.view(), 32).unwrap();
        for &v in x.column(0) {
            let b = m.bin(0, v) as usize;
            for (k, &t) in m.thresholds[0].iter().enumerate() {
                assert_eq!(b <= k, v <= t);
            }
        }
    }
}
