use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Explainable;
use crate::data::stratified_sample;
use crate::rng::{derive_seed, rng_from_seed};
use crate::{Error, Result};

pub const MAX_EXACT_FEATURES: usize = 15;
pub const MIN_PERMUTATIONS: usize = 10;
pub const DEFAULT_BACKGROUND_SIZE: usize = 100;

/// Composite rows per prediction batch.
const BATCH_ROWS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapMethod {
    Exact,
    Permutation,
}

/// Attributions for a single row.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapRow {
    pub values: Vec<f64>,
    pub base_value: f64,
    pub prediction: f64,
}

fn check_inputs(x: &[f64], background: ArrayView2<f64>) -> Result<()> {
    if background.nrows() == 0 {
        return Err(Error::EmptyBackground);
    }
    if background.ncols() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: background.ncols(),
            found: x.len(),
        });
    }
    Ok(())
}

/// Mean prediction over the background for each feature mask; bit `j` set
/// means feature `j` is taken from `x`.
fn coalition_values<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    background: ArrayView2<f64>,
    masks: &[u64],
) -> Result<Vec<f64>> {
    let (b, f) = background.dim();
    let per_batch = (BATCH_ROWS / b).max(1);
    let mut out = Vec::with_capacity(masks.len());
    for chunk in masks.chunks(per_batch) {
        let mut rows = Array2::<f64>::zeros((chunk.len() * b, f));
        for (m, &mask) in chunk.iter().enumerate() {
            for r in 0..b {
                let mut row = rows.row_mut(m * b + r);
                for j in 0..f {
                    row[j] = if mask >> j & 1 == 1 {
                        x[j]
                    } else {
                        background[[r, j]]
                    };
                }
            }
        }
        let preds = model.predict(rows.view())?;
        for m in 0..chunk.len() {
            out.push(preds[m * b..(m + 1) * b].iter().sum::<f64>() / b as f64);
        }
    }
    Ok(out)
}

/// Exact Shapley values by enumerating all `2^F` coalitions with the
/// interventional value function `v(S) = mean_b f(x_S, b_{-S})`.
pub fn shap_exact<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    background: ArrayView2<f64>,
) -> Result<ShapRow> {
    check_inputs(x, background)?;
    let f = x.len();
    if f > MAX_EXACT_FEATURES {
        return Err(Error::TooManyFeatures {
            n: f,
            max: MAX_EXACT_FEATURES,
        });
    }
    let masks: Vec<u64> = (0..1u64 << f).collect();
    let v = coalition_values(model, x, background, &masks)?;
    // weight[s] = s! (F - s - 1)! / F!
    let fact: Vec<f64> = (0..=f)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    let weight: Vec<f64> = (0..f)
        .map(|s| fact[s] * fact[f - s - 1] / fact[f])
        .collect();
    let mut values = vec![0.0; f];
    for (i, phi) in values.iter_mut().enumerate() {
        let bit = 1u64 << i;
        let mut acc = 0.0;
        for mask in (0..1u64 << f).filter(|m| m & bit == 0) {
            let s = mask.count_ones() as usize;
            acc += weight[s] * (v[(mask | bit) as usize] - v[mask as usize]);
        }
        *phi = acc;
    }
    Ok(ShapRow {
        values,
        base_value: v[0],
        prediction: v[(1usize << f) - 1],
    })
}

/// Monte-Carlo Shapley values from `n_permutations` random feature orders.
pub fn shap_permutation<M: Explainable + ?Sized>(
    model: &M,
    x: &[f64],
    background: ArrayView2<f64>,
    n_permutations: usize,
    seed: u64,
) -> Result<ShapRow> {
    check_inputs(x, background)?;
    if n_permutations < MIN_PERMUTATIONS {
        return Err(Error::InvalidArgument(format!(
            "n_permutations must be at least {MIN_PERMUTATIONS}, got {n_permutations}"
        )));
    }
    let (b, f) = background.dim();
    let base_value = model.predict(background)?.iter().sum::<f64>() / b as f64;
    let x_row = Array2::from_shape_vec((1, f), x.to_vec()).expect("one row");
    let prediction = model.predict(x_row.view())?[0];
    let mut values = vec![0.0; f];
    if f == 0 {
        return Ok(ShapRow {
            values,
            base_value,
            prediction,
        });
    }

    let mut rng = rng_from_seed(seed);
    let mut order: Vec<usize> = (0..f).collect();
    let steps = f - 1;
    let per_batch = (BATCH_ROWS / (b * steps.max(1))).max(1);
    let mut done = 0;
    while done < n_permutations {
        let count = per_batch.min(n_permutations - done);
        let mut orders = Vec::with_capacity(count);
        let mut rows = Array2::<f64>::zeros((count * steps * b, f));
        for p in 0..count {
            order.shuffle(&mut rng);
            let mut composite = background.to_owned();
            for (k, &j) in order[..steps].iter().enumerate() {
                composite.column_mut(j).fill(x[j]);
                let start = (p * steps + k) * b;
                rows.slice_mut(ndarray::s![start..start + b, ..])
                    .assign(&composite);
            }
            orders.push(order.clone());
        }
        let preds = if steps > 0 {
            model.predict(rows.view())?
        } else {
            Vec::new()
        };
        for (p, ord) in orders.iter().enumerate() {
            let mut prev = base_value;
            for (k, &j) in ord.iter().enumerate() {
                let cur = if k < steps {
                    let start = (p * steps + k) * b;
                    preds[start..start + b].iter().sum::<f64>() / b as f64
                } else {
                    prediction
                };
                values[j] += cur - prev;
                prev = cur;
            }
        }
        done += count;
    }
    for v in &mut values {
        *v /= n_permutations as f64;
    }
    Ok(ShapRow {
        values,
        base_value,
        prediction,
    })
}

/// Per-row attributions plus metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub feature_names: Vec<String>,
    /// Row-major `n_rows x n_features`.
    pub values: Vec<Vec<f64>>,
    pub base_value: f64,
    pub predictions: Vec<f64>,
    pub background_size: usize,
    pub method: ShapMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_permutations: Option<usize>,
}

impl ShapMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[j]).collect()
    }

    /// `rows x features` plus `base_value` and `prediction` columns.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        use crate::serde_util::format_f64;
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["row".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.push("base_value".into());
        header.push("prediction".into());
        w.write_record(&header)?;
        for (i, (row, pred)) in self.values.iter().zip(&self.predictions).enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|&v| format_f64(v)));
            rec.push(format_f64(self.base_value));
            rec.push(format_f64(*pred));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("shap matrix", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub method: ShapMethod,
    pub n_permutations: usize,
    pub seed: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            method: ShapMethod::Permutation,
            n_permutations: 100,
            seed: 0,
        }
    }
}

/// Explain every row of `x` in parallel. Permutation seeds are derived per
/// row index, so results do not depend on scheduling.
pub fn explain_rows<M: Explainable + ?Sized>(
    model: &M,
    x: ArrayView2<f64>,
    feature_names: &[String],
    background: ArrayView2<f64>,
    config: &ExplainConfig,
) -> Result<ShapMatrix> {
    if feature_names.len() != x.ncols() {
        return Err(Error::LengthMismatch {
            left: feature_names.len(),
            right: x.ncols(),
        });
    }
    let explain_one = |i: usize, row: ArrayView1<f64>| -> Result<ShapRow> {
        let row = row.to_vec();
        match config.method {
            ShapMethod::Exact => shap_exact(model, &row, background),
            ShapMethod::Permutation => shap_permutation(
                model,
                &row,
                background,
                config.n_permutations,
                derive_seed(config.seed, "shap_permutation", i as u64),
            ),
        }
    };
    let rows: Vec<ShapRow> = (0..x.nrows())
        .into_par_iter()
        .map(|i| explain_one(i, x.row(i)))
        .collect::<Result<_>>()?;
    let base_value = match rows.first() {
        Some(r) => r.base_value,
        None => model.predict(background)?.iter().sum::<f64>() / background.nrows().max(1) as f64,
    };
    Ok(ShapMatrix {
        feature_names: feature_names.to_vec(),
        predictions: rows.iter().map(|r| r.prediction).collect(),
        values: rows.into_iter().map(|r| r.values).collect(),
        base_value,
        background_size: background.nrows(),
        method: config.method,
        n_permutations: (config.method == ShapMethod::Permutation).then_some(config.n_permutations),
    })
}

/// Stratified, seeded background sample of training rows.
pub fn select_background(
    x_train: ArrayView2<f64>,
    y_train: &[u8],
    size: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    if x_train.nrows() != y_train.len() {
        return Err(Error::LengthMismatch {
            left: x_train.nrows(),
            right: y_train.len(),
        });
    }
    if size == 0 || x_train.nrows() == 0 {
        return Err(Error::EmptyBackground);
    }
    let rows = stratified_sample(y_train, size, seed)?;
    Ok(x_train.select(ndarray::Axis(0), &rows))
}
