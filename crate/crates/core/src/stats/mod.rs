//! Statistical kernel: ranks, correlation and association measures,
//! chi-square and Mann–Whitney tests, variance inflation factors.
//!
//! p-values come from a native regularized incomplete gamma function; the
//! normal tail is expressed through it as well (`erfc(x) = Q(1/2, x²)`).

mod correlation;
mod hypothesis;
pub mod special;
mod vif;

pub use correlation::{
    average_ranks, correlation_ratio, cramers_v, cramers_v_table, pearson, point_biserial, spearman,
};
pub use hypothesis::{
    chi_square_categories, chi_square_test, contingency, mann_whitney_u, mann_whitney_u_pair,
    TestResult,
};
pub use vif::{
    correlation_matrix, vif_all, vif_from_correlation, CorrelationMatrix, VIF_INFINITE_R2,
};

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let ss: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (v.len() - 1) as f64).sqrt()
}
