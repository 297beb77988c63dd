use std::collections::BTreeMap;

use crate::{Error, Result};

/// Ranks 1..n; tied values share the mean of the ranks they cover.
pub fn average_ranks(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput("ranks of an empty array".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let r = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    Ok(ranks)
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::EmptyInput(format!(
            "correlation needs at least 3 pairs, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    pearson(&average_ranks(x)?, &average_ranks(y)?)
}

/// Pearson correlation between a 0/1 variable and a continuous one.
pub fn point_biserial(binary: &[u8], cont: &[f64]) -> Result<f64> {
    if binary.iter().any(|&b| b > 1) {
        return Err(Error::InvalidArgument(
            "point-biserial expects 0/1 codes".into(),
        ));
    }
    let ones = binary.iter().filter(|&&b| b == 1).count();
    if ones == 0 || ones == binary.len() {
        return Err(Error::SingleClass);
    }
    let coded: Vec<f64> = binary.iter().map(|&b| f64::from(b)).collect();
    pearson(&coded, cont)
}

/// Cross-tabulate two code arrays over their observed levels (sorted).
pub(crate) fn crosstab(a: &[u32], b: &[u32]) -> Result<Vec<Vec<f64>>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut la: BTreeMap<u32, usize> = BTreeMap::new();
    let mut lb: BTreeMap<u32, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        la.insert(x, 0);
        lb.insert(y, 0);
    }
    for (i, v) in la.values_mut().enumerate() {
        *v = i;
    }
    for (i, v) in lb.values_mut().enumerate() {
        *v = i;
    }
    let mut t = vec![vec![0.0; lb.len()]; la.len()];
    for (x, y) in a.iter().zip(b) {
        t[la[x]][lb[y]] += 1.0;
    }
    Ok(t)
}

pub(crate) fn chi_square_statistic(table: &[Vec<f64>]) -> Result<(f64, f64)> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    let row_sums: Vec<f64> = table.iter().map(|row| row.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..c)
        .map(|j| table.iter().map(|row| row[j]).sum())
        .collect();
    let n: f64 = row_sums.iter().sum();
    let mut stat = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = row_sums[i] * col_sums[j] / n;
            if e <= 0.0 {
                return Err(Error::ZeroExpectedCount);
            }
            let d = table[i][j] - e;
            stat += d * d / e;
        }
    }
    Ok((stat, n))
}

/// Cramér's V from a contingency table of counts (no continuity correction).
pub fn cramers_v_table(table: &[Vec<f64>]) -> Result<f64> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 || table.iter().any(|row| row.len() != c) {
        return Err(Error::DegenerateTable(format!("{r}x{c} table")));
    }
    let (chi2, n) = chi_square_statistic(table)
        .map_err(|_| Error::DegenerateTable("a row or column of the table is empty".into()))?;
    let k = (r.min(c) - 1) as f64;
    Ok((chi2 / (n * k)).sqrt().min(1.0))
}

/// Cramér's V between two categorical code arrays.
pub fn cramers_v(a: &[u32], b: &[u32]) -> Result<f64> {
    cramers_v_table(&crosstab(a, b)?)
}

/// Correlation ratio η = sqrt(SS_between / SS_total).
pub fn correlation_ratio(groups: &[u32], values: &[f64]) -> Result<f64> {
    if groups.len() != values.len() {
        return Err(Error::LengthMismatch {
            left: groups.len(),
            right: values.len(),
        });
    }
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for (&g, &v) in groups.iter().zip(values) {
        let e = acc.entry(g).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    if acc.len() < 2 {
        return Err(Error::DegenerateGroups(format!(
            "{} observed group(s)",
            acc.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss_total: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_total == 0.0 {
        return Err(Error::ConstantInput);
    }
    let ss_between: f64 = acc
        .values()
        .map(|&(s, k)| {
            let m = s / k as f64;
            k as f64 * (m - mean) * (m - mean)
        })
        .sum();
    Ok((ss_between / ss_total).sqrt().clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn rank_examples() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 30.0]).unwrap(),
            vec![1.0, 2.0, 3.0]
        );
        assert_eq!(
            average_ranks(&[5.0, 5.0, 7.0]).unwrap(),
            vec![1.5, 1.5, 3.0]
        );
        assert_eq!(average_ranks(&[4.0; 4]).unwrap(), vec![2.5; 4]);
        assert!(average_ranks(&[]).is_err());
    }

    #[test]
    fn spearman_examples() {
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[2.0, 4.0, 9.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0], &[9.0, 4.0, 2.0]).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        assert!(matches!(
            spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ConstantInput)
        ));
        assert!(matches!(
            spearman(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn point_biserial_examples() {
        assert_abs_diff_eq!(
            point_biserial(&[0, 0, 1, 1], &[1.0, 1.0, 2.0, 2.0]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert!(matches!(
            point_biserial(&[0, 1, 0, 1], &[3.0; 4]),
            Err(Error::ConstantInput)
        ));
        // hand computation: cov sum 1, SS_b 1, SS_c 2 -> 1/sqrt(2)
        assert_abs_diff_eq!(
            point_biserial(&[0, 0, 1, 1], &[1.0, 2.0, 2.0, 3.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert!(matches!(
            point_biserial(&[1, 1, 1], &[1.0, 2.0, 3.0]),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn point_biserial_is_pearson_bitwise() {
        let b = [0u8, 1, 1, 0, 1, 0, 0, 1];
        let c = [0.3, 1.7, 2.2, -0.4, 0.9, 0.1, 1.1, 3.0];
        let coded: Vec<f64> = b.iter().map(|&x| f64::from(x)).collect();
        assert_eq!(
            point_biserial(&b, &c).unwrap().to_bits(),
            pearson(&coded, &c).unwrap().to_bits()
        );
    }

    #[test]
    fn cramers_v_examples() {
        assert_abs_diff_eq!(
            cramers_v_table(&[vec![10.0, 10.0], vec![10.0, 10.0]]).unwrap(),
            0.0
        );
        assert_abs_diff_eq!(
            cramers_v_table(&[vec![20.0, 0.0], vec![0.0, 20.0]]).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            cramers_v_table(&[vec![30.0, 10.0], vec![10.0, 30.0]]).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        assert!(matches!(
            cramers_v(&[0, 0, 0], &[0, 1, 0]),
            Err(Error::DegenerateTable(_))
        ));
        // codes route equals the table route
        let a = [0, 0, 1, 1, 2, 2, 2];
        let b = [1, 1, 0, 1, 0, 0, 1];
        let t = crosstab(&a, &b).unwrap();
        assert_eq!(cramers_v(&a, &b).unwrap(), cramers_v_table(&t).unwrap());
    }

    #[test]
    fn correlation_ratio_examples() {
        assert_abs_diff_eq!(
            correlation_ratio(&[0, 0, 1, 1], &[1.0, 1.0, 5.0, 5.0]).unwrap(),
            1.0
        );
        assert_abs_diff_eq!(
            correlation_ratio(&[0, 0, 1, 1], &[1.0, 5.0, 1.0, 5.0]).unwrap(),
            0.0
        );
        // SS_between = 13.5, SS_total = 17.5
        assert_abs_diff_eq!(
            correlation_ratio(&[0, 0, 0, 1, 1, 1], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap(),
            (13.5f64 / 17.5).sqrt(),
            epsilon = 1e-15
        );
        assert!(matches!(
            correlation_ratio(&[0, 0, 0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateGroups(_))
        ));
        assert!(matches!(
            correlation_ratio(&[0, 1, 0], &[2.0; 3]),
            Err(Error::ConstantInput)
        ));
    }

    proptest! {
        #[test]
        fn spearman_invariant_under_monotone_maps(
            x in prop::collection::vec(-100.0f64..100.0, 5..40),
            y in prop::collection::vec(-100.0f64..100.0, 5..40),
        ) {
            let n = x.len().min(y.len());
            let (x, y) = (&x[..n], &y[..n]);
            if let Ok(r) = spearman(x, y) {
                let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
                let fy: Vec<f64> = y.iter().map(|v| (v / 50.0).exp()).collect();
                let r2 = spearman(&fx, &fy).unwrap();
                prop_assert!((r - r2).abs() < 1e-12);
            }
        }

        #[test]
        fn association_measures_in_unit_interval(
            a in prop::collection::vec(0u32..4, 10..60),
            b in prop::collection::vec(0u32..3, 10..60),
            v in prop::collection::vec(-5.0f64..5.0, 10..60),
        ) {
            let n = a.len().min(b.len()).min(v.len());
            if let Ok(cv) = cramers_v(&a[..n], &b[..n]) {
                prop_assert!((0.0..=1.0).contains(&cv));
            }
            if let Ok(eta) = correlation_ratio(&a[..n], &v[..n]) {
                prop_assert!((0.0..=1.0).contains(&eta));
            }
        }
    }
}
