use serde::{Deserialize, Serialize};

use super::average_ranks;
use super::correlation::{chi_square_statistic, crosstab};
use super::special::{chi2_sf, normal_sf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
    pub n: usize,
}

/// Contingency table of two categorical code arrays over their observed levels.
pub fn contingency(a: &[u32], b: &[u32]) -> Result<Vec<Vec<f64>>> {
    crosstab(a, b)
}

/// Pearson chi-square test of independence, no continuity correction.
pub fn chi_square_test(table: &[Vec<f64>]) -> Result<TestResult> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || table.iter().any(|row| row.len() != c) {
        return Err(Error::DegenerateTable(format!("{r}x{c} table")));
    }
    let (stat, n) = chi_square_statistic(table)?;
    let df = ((r - 1) * (c - 1)) as f64;
    let p = if df == 0.0 { 1.0 } else { chi2_sf(stat, df) };
    Ok(TestResult {
        statistic: stat,
        p_value: p.clamp(0.0, 1.0),
        df: Some(df),
        n: n.round() as usize,
    })
}

pub fn chi_square_categories(a: &[u32], b: &[u32]) -> Result<TestResult> {
    chi_square_test(&contingency(a, b)?)
}

/// `(U_a, U_b)` from pooled average ranks; `U_a` counts pairs with `a > b`
/// plus half of the ties.
pub fn mann_whitney_u_pair(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput(
            "Mann-Whitney needs two non-empty samples".into(),
        ));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = average_ranks(&pooled)?;
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let ra: f64 = ranks[..a.len()].iter().sum();
    let ua = ra - na * (na + 1.0) / 2.0;
    Ok((ua, na * nb - ua))
}

/// Two-sided Mann–Whitney U test by normal approximation with tie and
/// continuity corrections. Approximate for very small samples.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let (ua, ub) = mann_whitney_u_pair(a, b)?;
    let na = a.len() as f64;
    let nb = b.len() as f64;
    let n = na + nb;
    let mu = na * nb / 2.0;

    let mut pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j] == pooled[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)).max(1.0));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((ua - mu).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic: ua.min(ub),
        p_value: p.clamp(0.0, 1.0),
        df: None,
        n: a.len() + b.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn brute_u(a: &[f64], b: &[f64]) -> f64 {
        let mut u = 0.0;
        for x in a {
            for y in b {
                if x > y {
                    u += 1.0;
                } else if x == y {
                    u += 0.5;
                }
            }
        }
        u
    }

    #[test]
    fn chi_square_examples() {
        let r = chi_square_test(&[vec![25.0, 25.0], vec![25.0, 25.0]]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let r = chi_square_test(&[vec![30.0, 10.0], vec![10.0, 30.0]]).unwrap();
        assert_abs_diff_eq!(r.statistic, 20.0, epsilon = 1e-12);
        assert_eq!(r.df, Some(1.0));
        assert_eq!(r.n, 80);
        // survival function of chi2(1) at 20
        assert_relative_eq!(r.p_value, 7.744_216_431_044_088e-6, max_relative = 1e-9);

        assert!(matches!(
            chi_square_test(&[vec![0.0, 0.0], vec![1.0, 1.0]]),
            Err(Error::ZeroExpectedCount)
        ));
    }

    #[test]
    fn chi_square_from_codes() {
        let a = [0, 0, 0, 1, 1, 1, 2, 2];
        let b = [0, 1, 0, 1, 1, 0, 0, 1];
        let t = contingency(&a, &b).unwrap();
        assert_eq!(t, vec![vec![2.0, 1.0], vec![1.0, 2.0], vec![1.0, 1.0]]);
        let r = chi_square_categories(&a, &b).unwrap();
        assert_eq!(r.df, Some(2.0));
        assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn mann_whitney_examples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 4.5);
        assert_eq!(r.p_value, 1.0);

        let r =
            mann_whitney_u(&[1.0, 2.0, 3.0, 4.0, 5.0], &[10.0, 11.0, 12.0, 13.0, 14.0]).unwrap();
        assert_eq!(r.statistic, 0.0);

        let (ua, ub) = mann_whitney_u_pair(&[1.0, 4.0, 5.0], &[2.0, 3.0, 6.0]).unwrap();
        assert_eq!(ua, brute_u(&[1.0, 4.0, 5.0], &[2.0, 3.0, 6.0]));
        assert_eq!(ua, 4.0);
        assert_eq!(ub, 5.0);

        assert!(matches!(
            mann_whitney_u(&[], &[1.0]),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn mann_whitney_matches_reference_with_ties() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 3.5];
        let b = [2.0, 2.0, 5.0, 11.0, 12.0, 13.0, 14.0, 8.0, 9.0, 1.0, 20.0];
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.statistic, 33.0);
        // scipy.stats.mannwhitneyu(a, b, method="asymptotic")
        assert_relative_eq!(r.p_value, 0.129_031_488_048_069_05, max_relative = 1e-9);
    }

    proptest! {
        #[test]
        fn u_values_sum_to_pair_count(
            a in prop::collection::vec(0i32..20, 1..30),
            b in prop::collection::vec(0i32..20, 1..30),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let (ua, ub) = mann_whitney_u_pair(&a, &b).unwrap();
            prop_assert_eq!(ua + ub, (a.len() * b.len()) as f64);
            prop_assert_eq!(ua, brute_u(&a, &b));
            let r = mann_whitney_u(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }

        #[test]
        fn chi_square_p_in_unit_interval(cells in prop::collection::vec(1u32..50, 6)) {
            let t: Vec<Vec<f64>> = cells.chunks(3).map(|c| c.iter().map(|&v| f64::from(v)).collect()).collect();
            let r = chi_square_test(&t).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.p_value));
            prop_assert!(r.statistic >= 0.0);
        }
    }
}
