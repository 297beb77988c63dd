use serde::{Deserialize, Serialize};

use super::table::Table;
use crate::{Error, Result};

/// Linear-interpolation percentile between order statistics.
pub fn percentile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput("percentile of an empty array".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "percentile q={q} outside (0, 1)"
        )));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(percentile_sorted(&v, q))
}

pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= sorted.len() {
        return sorted[lo];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub los_column: String,
    pub percentile: f64,
    pub label_name: String,
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        OutcomeSpec {
            los_column: "los_days".into(),
            percentile: 0.75,
            label_name: "prolonged_los".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub labels: Vec<u8>,
    /// Interpolated percentile of length of stay.
    pub threshold: f64,
    /// Smallest stay labelled prolonged: `floor(threshold) + 1` for integer
    /// stays, otherwise the raw threshold.
    pub threshold_days: f64,
    pub n_positive: usize,
}

/// Label a stay prolonged iff it exceeds the `spec.percentile` quantile.
///
/// `reference_rows` restricts the rows the quantile is computed on (e.g. the
/// training split); `None` uses the whole cohort. Labels are produced for
/// every row either way.
pub fn dichotomize_outcome(
    table: &Table,
    spec: &OutcomeSpec,
    reference_rows: Option<&[usize]>,
) -> Result<Outcome> {
    let col = table.require_column(&spec.los_column)?;
    let los = table.continuous(col)?;
    if table.missing_count(col) > 0 {
        return Err(Error::MissingCellsPresent(spec.los_column.clone()));
    }
    if los.is_empty() {
        return Err(Error::EmptyInput("length-of-stay column is empty".into()));
    }
    let reference: Vec<f64> = match reference_rows {
        Some(rows) => rows.iter().map(|&r| los[r]).collect(),
        None => los.to_vec(),
    };
    let threshold = percentile(&reference, spec.percentile)?;
    let labels: Vec<u8> = los.iter().map(|&d| u8::from(d > threshold)).collect();
    let n_positive = labels.iter().filter(|&&l| l == 1).count();
    if n_positive == 0 || n_positive == labels.len() {
        return Err(Error::DegenerateOutcome(labels[0]));
    }
    let integral = los.iter().all(|d| d.fract() == 0.0);
    let threshold_days = if integral {
        threshold.floor() + 1.0
    } else {
        threshold
    };
    Ok(Outcome {
        labels,
        threshold,
        threshold_days,
        n_positive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnSpec, ColumnValues, Domain};

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 0.75).unwrap(), 3.25);
        assert_eq!(percentile(&[5.0; 4], 0.75).unwrap(), 5.0);
        assert_eq!(percentile(&[0.0, 10.0], 0.5).unwrap(), 5.0);
        assert!(matches!(percentile(&[], 0.5), Err(Error::EmptyInput(_))));
        assert!(percentile(&[1.0], 1.0).is_err());
    }

    fn los_table(los: Vec<f64>) -> Table {
        Table::new(
            vec![ColumnSpec::continuous("los_days", Domain::Outcome)],
            vec![ColumnValues::Continuous(los)],
        )
        .unwrap()
    }

    #[test]
    fn repeated_one_to_twelve() {
        let los: Vec<f64> = (0..100).flat_map(|_| (1..=12).map(f64::from)).collect();
        let out =
            dichotomize_outcome(&los_table(los.clone()), &OutcomeSpec::default(), None).unwrap();
        assert_eq!(out.threshold, 9.25);
        assert_eq!(out.threshold_days, 10.0);
        for (d, l) in los.iter().zip(&out.labels) {
            assert_eq!(*l == 1, *d >= 10.0);
        }
        assert_eq!(out.n_positive, 300);
    }

    #[test]
    fn constant_stay_is_degenerate() {
        let r = dichotomize_outcome(&los_table(vec![4.0; 50]), &OutcomeSpec::default(), None);
        assert!(matches!(r, Err(Error::DegenerateOutcome(0))));
    }

    #[test]
    fn reference_rows_drive_threshold() {
        let t = los_table(vec![1.0, 2.0, 3.0, 4.0, 100.0, 200.0]);
        let out = dichotomize_outcome(&t, &OutcomeSpec::default(), Some(&[0, 1, 2, 3])).unwrap();
        assert_eq!(out.threshold, 3.25);
        assert_eq!(out.labels, vec![0, 0, 0, 1, 1, 1]);
    }
}
