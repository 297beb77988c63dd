use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::{check_prediction_input, check_training_data, sigmoid};
use crate::serde_util::{decimal, decimal_vec};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2_lambda: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2_lambda: 1e-4,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    #[serde(with = "decimal_vec")]
    pub weights: Vec<f64>,
    #[serde(with = "decimal")]
    pub intercept: f64,
    #[serde(with = "decimal")]
    pub l2_lambda: f64,
    pub converged: bool,
    pub n_iter: usize,
}

impl LogisticModel {
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        check_prediction_input(x, self.weights.len())?;
        let w = Array1::from(self.weights.clone());
        Ok(x.dot(&w)
            .iter()
            .map(|z| sigmoid(z + self.intercept))
            .collect())
    }
}

/// Penalized objective `mean log-loss + λ/2·‖w‖²` and its gradient, with the
/// intercept first in `beta` and unpenalized.
pub fn logistic_loss_grad(
    x: ArrayView2<f64>,
    y: &[u8],
    beta: &[f64],
    l2_lambda: f64,
) -> (f64, Vec<f64>) {
    let n = x.nrows() as f64;
    let w = Array1::from(beta[1..].to_vec());
    let z = x.dot(&w) + beta[0];
    let mut loss = 0.0;
    let mut resid = Array1::zeros(x.nrows());
    for (i, &zi) in z.iter().enumerate() {
        let yi = f64::from(y[i]);
        // log(1 + e^z) - y z, stable in both tails
        loss += zi.max(0.0) + (-zi.abs()).exp().ln_1p() - yi * zi;
        resid[i] = sigmoid(zi) - yi;
    }
    loss /= n;
    loss += 0.5 * l2_lambda * beta[1..].iter().map(|b| b * b).sum::<f64>();
    let mut grad = Vec::with_capacity(beta.len());
    grad.push(resid.sum() / n);
    let gx = x.t().dot(&resid) / n;
    grad.extend(gx.iter().zip(&beta[1..]).map(|(g, b)| g + l2_lambda * b));
    (loss, grad)
}

/// L2-penalized logistic regression by damped Newton iterations.
///
/// `converged` requires a gradient max-norm below `tol`, a negligible final
/// step and a positive definite Hessian; separable data with no penalty
/// therefore ends flagged as not converged.
pub fn fit_logistic(
    x: ArrayView2<f64>,
    y: &[u8],
    params: &LogisticParams,
) -> Result<LogisticModel> {
    fit_logistic_trace(x, y, params).map(|(m, _)| m)
}

/// As [`fit_logistic`], also returning the objective after every accepted step.
pub fn fit_logistic_trace(
    x: ArrayView2<f64>,
    y: &[u8],
    params: &LogisticParams,
) -> Result<(LogisticModel, Vec<f64>)> {
    check_training_data(x, y)?;
    let (n, p) = x.dim();
    let lambda = params.l2_lambda;
    let mut xa = Array2::ones((n, p + 1));
    xa.slice_mut(ndarray::s![.., 1..]).assign(&x);

    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    let rate = pos / n as f64;
    let mut beta = vec![0.0; p + 1];
    beta[0] = (rate / (1.0 - rate)).ln();
    let (mut loss, mut grad) = logistic_loss_grad(x, y, &beta, lambda);
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iters = 0;

    while iters < params.max_iter {
        iters += 1;
        // Hessian: Xaᵀ diag(p(1-p)) Xa / n + λ on the weights
        let z = xa.dot(&Array1::from(beta.clone()));
        let sw: Array1<f64> = z.mapv(|zi| {
            let s = sigmoid(zi);
            (s * (1.0 - s) / n as f64).sqrt()
        });
        let xw = &xa * &sw.insert_axis(Axis(1));
        let hess = xw.t().dot(&xw);
        let mut h = DMatrix::from_fn(p + 1, p + 1, |i, j| hess[[i, j]]);
        for j in 1..=p {
            h[(j, j)] += lambda;
        }
        let g = DVector::from_column_slice(&grad);
        let (step, jittered) = newton_step(h, &g);

        let grad_norm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = beta
                .iter()
                .zip(step.iter())
                .map(|(b, s)| b - t * s)
                .collect();
            let (l, gr) = logistic_loss_grad(x, y, &cand, lambda);
            if l.is_finite() && l <= loss {
                accepted = Some((cand, l, gr));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, l, gr)) = accepted else {
            converged = grad_norm < params.tol && !jittered;
            break;
        };
        let step_norm = beta
            .iter()
            .zip(&cand)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = 1.0 + cand.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        beta = cand;
        loss = l;
        grad = gr;
        trace.push(loss);
        let new_norm = grad.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if new_norm < params.tol && step_norm <= params.tol.sqrt() * scale && !jittered {
            converged = true;
            break;
        }
    }
    let model = LogisticModel {
        intercept: beta[0],
        weights: beta[1..].to_vec(),
        l2_lambda: lambda,
        converged,
        n_iter: iters,
    };
    Ok((model, trace))
}

fn newton_step(h: DMatrix<f64>, g: &DVector<f64>) -> (DVector<f64>, bool) {
    if let Some(c) = h.clone().cholesky() {
        return (c.solve(g), false);
    }
    let scale = (0..h.nrows())
        .map(|i| h[(i, i)].abs())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut jitter = 1e-10 * scale;
    loop {
        let mut hj = h.clone();
        for i in 0..hj.nrows() {
            hj[(i, i)] += jitter;
        }
        if let Some(c) = hj.cholesky() {
            return (c.solve(g), true);
        }
        jitter *= 10.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use ndarray::concatenate;
    use rand::Rng as _;

    fn noisy(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = stream(seed, "logit_test", 0);
        let x = Array2::from_shape_fn((n, 3), |_| rng.random_range(-2.0..2.0));
        let y = x
            .rows()
            .into_iter()
            .map(|r| u8::from(rng.random::<f64>() < sigmoid(1.5 * r[0] - r[1] + 0.3)))
            .collect();
        (x, y)
    }

    #[test]
    fn converges_with_small_gradient() {
        let (x, y) = noisy(400, 1);
        let (m, trace) = fit_logistic_trace(x.view(), &y, &LogisticParams::default()).unwrap();
        assert!(m.converged);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0]);
        }
        let mut beta = vec![m.intercept];
        beta.extend(&m.weights);
        let (_, g) = logistic_loss_grad(x.view(), &y, &beta, m.l2_lambda);
        assert!(g.iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = noisy(50, 2);
        let beta = vec![0.2, -0.4, 0.7, 0.1];
        let (_, g) = logistic_loss_grad(x.view(), &y, &beta, 0.3);
        for k in 0..beta.len() {
            let h = 1e-5;
            let mut a = beta.clone();
            let mut b = beta.clone();
            a[k] += h;
            b[k] -= h;
            let fd = (logistic_loss_grad(x.view(), &y, &a, 0.3).0
                - logistic_loss_grad(x.view(), &y, &b, 0.3).0)
                / (2.0 * h);
            assert!(
                (fd - g[k]).abs() <= 1e-5 * g[k].abs().max(1e-3),
                "{k}: {fd} vs {}",
                g[k]
            );
        }
    }

    #[test]
    fn separable_data_is_flagged() {
        let x = Array2::from_shape_vec((6, 1), vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let y = [0, 0, 0, 1, 1, 1];
        let params = LogisticParams {
            l2_lambda: 0.0,
            ..LogisticParams::default()
        };
        let m = fit_logistic(x.view(), &y, &params).unwrap();
        assert!(!m.converged);
        assert!(m.weights[0] > 10.0);
    }

    #[test]
    fn stacked_copy_gives_same_fit() {
        let (x, y) = noisy(200, 3);
        let x2 = concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let y2: Vec<u8> = y.iter().chain(&y).copied().collect();
        let a = fit_logistic(x.view(), &y, &LogisticParams::default()).unwrap();
        let b = fit_logistic(x2.view(), &y2, &LogisticParams::default()).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            assert!((u - v).abs() < 1e-9);
        }
        assert!((a.intercept - b.intercept).abs() < 1e-9);
    }
}
