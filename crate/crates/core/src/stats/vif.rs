use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2, Axis};

use crate::data::EncodedMatrix;
use crate::{Error, Result};

/// Coefficients of determination at or above this report an infinite VIF.
pub const VIF_INFINITE_R2: f64 = 1.0 - 1e-12;

const NULL_EIGEN_TOL: f64 = 1e-11;
const NULL_COMPONENT_TOL: f64 = 1e-6;
const PIVOT_TOL: f64 = 1e-10;

/// Pearson correlation matrix of the columns of a design, computed once and
/// reused for VIF on any subset of columns.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub r: DMatrix<f64>,
    /// Columns with zero variance; their rows and columns in `r` are zero.
    pub constant: Vec<bool>,
    pub n_rows: usize,
}

impl CorrelationMatrix {
    pub fn n_features(&self) -> usize {
        self.constant.len()
    }
}

pub fn correlation_matrix(x: ArrayView2<f64>) -> Result<CorrelationMatrix> {
    let (n, p) = x.dim();
    if n == 0 || p == 0 {
        return Err(Error::EmptyMatrix);
    }
    let means = x.mean_axis(Axis(0)).expect("non-empty");
    let mut z: Array2<f64> = &x - &means.insert_axis(Axis(0));
    let mut constant = vec![false; p];
    for (j, mut col) in z.axis_iter_mut(Axis(1)).enumerate() {
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = x.column(j).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm <= 1e-12 * scale.max(1e-300) * (n as f64).sqrt() || norm == 0.0 {
            constant[j] = true;
            col.fill(0.0);
        } else {
            col.mapv_inplace(|v| v / norm);
        }
    }
    let g = z.t().dot(&z);
    let mut r = DMatrix::from_fn(p, p, |i, j| g[[i, j]].clamp(-1.0, 1.0));
    for j in 0..p {
        if !constant[j] {
            r[(j, j)] = 1.0;
        }
    }
    Ok(CorrelationMatrix {
        r,
        constant,
        n_rows: n,
    })
}

/// VIF of each column in `subset`, regressing it on the other subset columns
/// plus an intercept. Perfectly collinear or constant columns get `+inf`.
pub fn vif_from_correlation(corr: &CorrelationMatrix, subset: &[usize]) -> Result<Vec<f64>> {
    if corr.n_rows <= subset.len() {
        return Err(Error::TooFewRows {
            rows: corr.n_rows,
            needed: subset.len() + 1,
        });
    }
    let mut out = vec![f64::INFINITY; subset.len()];
    let live: Vec<usize> = (0..subset.len())
        .filter(|&i| !corr.constant[subset[i]])
        .collect();
    let m = live.len();
    if m == 0 {
        return Ok(out);
    }
    let rs = DMatrix::from_fn(m, m, |a, b| corr.r[(subset[live[a]], subset[live[b]])]);

    // columns taking part in an exact linear dependency
    let eig = SymmetricEigen::new(rs.clone());
    let mut participant = vec![false; m];
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= NULL_EIGEN_TOL * m as f64 {
            for a in 0..m {
                if eig.eigenvectors[(a, k)].abs() > NULL_COMPONENT_TOL {
                    participant[a] = true;
                }
            }
        }
    }

    // spanning set: every non-participant, then independent participants
    let order: Vec<usize> = (0..m)
        .filter(|&a| !participant[a])
        .chain((0..m).filter(|&a| participant[a]))
        .collect();
    let mut basis: Vec<usize> = Vec::new();
    let mut l: Vec<Vec<f64>> = Vec::new();
    for &a in &order {
        let mut row = Vec::with_capacity(basis.len() + 1);
        for (i, &b) in basis.iter().enumerate() {
            let mut s = rs[(a, b)];
            for k in 0..i {
                s -= row[k] * l[i][k];
            }
            row.push(s / l[i][i]);
        }
        let resid = rs[(a, a)] - row.iter().map(|v| v * v).sum::<f64>();
        if resid > PIVOT_TOL {
            row.push(resid.sqrt());
            basis.push(a);
            l.push(row);
        }
    }

    let k = basis.len();
    let lk = DMatrix::from_fn(k, k, |i, j| if j <= i { l[i][j] } else { 0.0 });
    let Some(linv) = lk.try_inverse() else {
        return Ok(out);
    };
    for (i, &a) in basis.iter().enumerate() {
        if participant[a] {
            continue;
        }
        // diag of (L Lᵀ)⁻¹ = column norms of L⁻¹
        let d: f64 = (0..k).map(|r| linv[(r, i)] * linv[(r, i)]).sum();
        if d.is_finite() && d < 1.0 / (1.0 - VIF_INFINITE_R2) {
            out[live[a]] = d.max(1.0);
        }
    }
    Ok(out)
}

/// VIF for every column of an encoded design.
pub fn vif_all(x: &EncodedMatrix) -> Result<Vec<f64>> {
    if x.n_rows() <= x.n_features() {
        return Err(Error::TooFewRows {
            rows: x.n_rows(),
            needed: x.n_features() + 1,
        });
    }
    let corr = correlation_matrix(x.x.view())?;
    let all: Vec<usize> = (0..x.n_features()).collect();
    vif_from_correlation(&corr, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    // independent route: project each raw column onto the span of an
    // intercept and the other columns with twice-applied Gram-Schmidt
    fn vif_oracle(x: &Array2<f64>) -> Vec<f64> {
        let (n, p) = x.dim();
        (0..p)
            .map(|j| {
                let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / (n as f64).sqrt(); n]];
                for k in (0..p).filter(|&k| k != j) {
                    let mut v: Vec<f64> = x.column(k).to_vec();
                    let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    for _ in 0..2 {
                        for q in &basis {
                            let d: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                            v.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
                        }
                    }
                    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    if norm > 1e-9 * norm0.max(1.0) {
                        basis.push(v.iter().map(|a| a / norm).collect());
                    }
                }
                let y: Vec<f64> = x.column(j).to_vec();
                let mean = y.iter().sum::<f64>() / n as f64;
                let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
                if sst == 0.0 {
                    return f64::INFINITY;
                }
                let mut r = y.clone();
                for _ in 0..2 {
                    for q in &basis {
                        let d: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                        r.iter_mut().zip(q).for_each(|(a, b)| *a -= d * b);
                    }
                }
                let r2 = 1.0 - r.iter().map(|a| a * a).sum::<f64>() / sst;
                if r2 >= VIF_INFINITE_R2 {
                    f64::INFINITY
                } else {
                    1.0 / (1.0 - r2)
                }
            })
            .collect()
    }

    fn matrix(x: Array2<f64>) -> EncodedMatrix {
        let names = (0..x.ncols()).map(|j| format!("f{j}")).collect::<Vec<_>>();
        EncodedMatrix::from_parts(names, x)
    }

    #[test]
    fn orthogonal_design_has_unit_vif() {
        let x = array![[1.0, 1.0], [-1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]];
        for v in vif_all(&matrix(x)).unwrap() {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn correlated_pair_closed_form() {
        let z1 = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let z2 = [1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let c: f64 = 0.19;
        // z1 and z2 are centred, orthogonal and of equal norm, so r = 0.9
        let x = Array2::from_shape_fn((8, 2), |(i, j)| {
            if j == 0 {
                z1[i]
            } else {
                0.9 * z1[i] + c.sqrt() * z2[i]
            }
        });
        let v = vif_all(&matrix(x)).unwrap();
        for vj in v {
            assert_relative_eq!(vj, 1.0 / (1.0 - 0.81), max_relative = 1e-9);
        }
    }

    #[test]
    fn duplicated_column_is_infinite() {
        let x = array![
            [1.0, 1.0, 0.3],
            [2.0, 2.0, -1.0],
            [4.0, 4.0, 0.5],
            [3.0, 3.0, 2.0],
            [0.0, 0.0, 1.0]
        ];
        let v = vif_all(&matrix(x)).unwrap();
        assert!(v[0].is_infinite() && v[1].is_infinite());
        assert!(v[2].is_finite());
    }

    #[test]
    fn constant_column_is_infinite_and_ignored() {
        let x = array![
            [1.0, 5.0, 1.0],
            [-1.0, 5.0, 1.0],
            [1.0, 5.0, -1.0],
            [-1.0, 5.0, -1.0],
            [0.0, 5.0, 0.0]
        ];
        let v = vif_all(&matrix(x)).unwrap();
        assert!(v[1].is_infinite());
        assert!((v[0] - 1.0).abs() < 1e-9 && (v[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_rows() {
        let x = array![[1.0, 2.0], [3.0, 1.0]];
        assert!(matches!(vif_all(&matrix(x)), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn subset_matches_direct() {
        let x = Array2::from_shape_fn((40, 4), |(i, j)| {
            ((i * 7 + j * 13) % 11) as f64 + (i as f64 * 0.1 * j as f64).sin()
        });
        let corr = correlation_matrix(x.view()).unwrap();
        let sub = vif_from_correlation(&corr, &[0, 2, 3]).unwrap();
        let direct = vif_oracle(&x.select(Axis(1), &[0, 2, 3]));
        for (a, b) in sub.iter().zip(&direct) {
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    proptest! {
        #[test]
        fn agrees_with_least_squares_oracle(
            seed in prop::collection::vec(-3.0f64..3.0, 30 * 3),
            dup in 0usize..3,
            mix in prop::bool::ANY,
        ) {
            let base = Array2::from_shape_vec((30, 3), seed).unwrap();
            let x = Array2::from_shape_fn((30, 5), |(i, j)| match j {
                0..=2 => base[[i, j]],
                3 => if mix { base[[i, 0]] + 2.0 * base[[i, 1]] } else { base[[i, dup]] * 0.5 + 1.0 },
                _ => base[[i, 2]] * 0.3 + ((i * 31) % 7) as f64,
            });
            let got = vif_all(&matrix(x.clone())).unwrap();
            let want = vif_oracle(&x);
            for (g, w) in got.iter().zip(&want) {
                if w.is_infinite() || *w > 1e9 {
                    prop_assert!(g.is_infinite() || *g > 1e9, "got {g} want {w}");
                } else {
                    prop_assert!((g - w).abs() <= 1e-6 * w, "got {g} want {w}");
                }
            }
        }
    }
}
