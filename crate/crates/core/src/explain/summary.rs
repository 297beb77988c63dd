use serde::{Deserialize, Serialize};

use super::ShapMatrix;
use crate::data::{percentile_sorted, EncodedMatrix};
use crate::rng::stream;
use crate::serde_util::format_f64;
use crate::{Error, Result};
use rand::Rng as _;

/// Reading note attached to every summary: mean |SHAP| is in probability
/// units, not a share of the prediction.
pub const SHAP_UNITS_NOTE: &str =
    "mean |SHAP| is reported in probability units of the positive-class output; \
multiply by 100 for percentage points of predicted probability";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Prolonged,
    Short,
    Either,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Prolonged => "prolonged",
            Direction::Short => "short",
            Direction::Either => "either",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub feature: String,
    pub mean_abs: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub rank: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeeswarmPoint {
    pub rank: usize,
    pub feature: String,
    pub shap: f64,
    /// Feature value min-max scaled over the explained rows (0.5 if constant).
    pub normalized_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    /// Sorted by rank.
    pub features: Vec<FeatureSummary>,
    pub n_rows: usize,
    pub n_boot: usize,
    pub note: String,
}

impl ShapSummary {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "rank",
            "feature",
            "mean_abs_shap",
            "ci_low",
            "ci_high",
            "direction",
        ])?;
        for f in &self.features {
            w.write_record([
                f.rank.to_string(),
                f.feature.clone(),
                format_f64(f.mean_abs),
                format_f64(f.ci_low),
                format_f64(f.ci_high),
                f.direction.as_str().to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("shap summary", e))?;
        Ok(())
    }
}

pub fn write_beeswarm_csv<W: std::io::Write>(points: &[BeeswarmPoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["rank", "feature", "shap", "normalized_value"])?;
    for p in points {
        w.write_record([
            p.rank.to_string(),
            p.feature.clone(),
            format_f64(p.shap),
            format_f64(p.normalized_value),
        ])?;
    }
    w.flush().map_err(|e| Error::io("beeswarm points", e))?;
    Ok(())
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

fn direction(shap: &[f64], values: &[f64]) -> Direction {
    let binary = values.iter().all(|&v| v == 0.0 || v == 1.0);
    if !binary {
        return Direction::Either;
    }
    let m1 = mean(
        shap.iter()
            .zip(values)
            .filter(|(_, &v)| v == 1.0)
            .map(|(s, _)| *s),
    );
    let m0 = mean(
        shap.iter()
            .zip(values)
            .filter(|(_, &v)| v == 0.0)
            .map(|(s, _)| *s),
    );
    match (m1, m0) {
        (Some(a), Some(b)) if a > b && a > 0.0 => Direction::Prolonged,
        (Some(a), Some(b)) if a < b && a < 0.0 => Direction::Short,
        _ => Direction::Either,
    }
}

/// Mean |SHAP| per feature with a row-bootstrap percentile CI, a rank, a
/// direction label for binary features and beeswarm-ready points.
///
/// `features` holds the feature values of the explained rows, in the same
/// row and column order as `matrix`.
pub fn shap_summarize(
    matrix: &ShapMatrix,
    features: &EncodedMatrix,
    n_boot: usize,
    seed: u64,
) -> Result<(ShapSummary, Vec<BeeswarmPoint>)> {
    let (n, p) = (matrix.n_rows(), matrix.n_features());
    if n < 2 || p == 0 {
        return Err(Error::EmptyMatrix);
    }
    if features.n_rows() != n || features.n_features() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: features.n_features(),
        });
    }
    if n_boot == 0 {
        return Err(Error::InvalidArgument("n_boot must be positive".into()));
    }
    let abs: Vec<Vec<f64>> = (0..p)
        .map(|j| matrix.column(j).iter().map(|v| v.abs()).collect())
        .collect();
    let mean_abs: Vec<f64> = abs
        .iter()
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();

    let mut boot: Vec<Vec<f64>> = vec![Vec::with_capacity(n_boot); p];
    let mut rng = stream(seed, "shap_summary", 0);
    let mut sums = vec![0.0; p];
    for _ in 0..n_boot {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for _ in 0..n {
            let r = rng.random_range(0..n);
            for (s, col) in sums.iter_mut().zip(&abs) {
                *s += col[r];
            }
        }
        for (b, s) in boot.iter_mut().zip(&sums) {
            b.push(s / n as f64);
        }
    }

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| mean_abs[b].total_cmp(&mean_abs[a]).then(a.cmp(&b)));
    let mut rank = vec![0; p];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r + 1;
    }

    let mut summaries = Vec::with_capacity(p);
    let mut points = Vec::with_capacity(n * p);
    for &j in &order {
        let mut b = std::mem::take(&mut boot[j]);
        b.sort_by(f64::total_cmp);
        let values = features.x.column(j).to_vec();
        let shap = matrix.column(j);
        summaries.push(FeatureSummary {
            feature: matrix.feature_names[j].clone(),
            mean_abs: mean_abs[j],
            ci_low: percentile_sorted(&b, 0.025),
            ci_high: percentile_sorted(&b, 0.975),
            rank: rank[j],
            direction: direction(&shap, &values),
        });
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        for (s, v) in shap.iter().zip(&values) {
            points.push(BeeswarmPoint {
                rank: rank[j],
                feature: matrix.feature_names[j].clone(),
                shap: *s,
                normalized_value: if hi > lo { (v - lo) / (hi - lo) } else { 0.5 },
            });
        }
    }
    Ok((
        ShapSummary {
            features: summaries,
            n_rows: n,
            n_boot,
            note: SHAP_UNITS_NOTE.into(),
        },
        points,
    ))
}
