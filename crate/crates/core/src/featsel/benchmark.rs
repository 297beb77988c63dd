use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    select_hybrid, select_spearman, select_univariate, select_vif, HybridThresholds,
    SelectionMethod, SelectionReport,
};
use crate::data::{one_hot_encode, stratified_split, EncodedMatrix, EncodingMode, Table};
use crate::eval::auc;
use crate::learners::{fit_logistic, LogisticParams};
use crate::serde_util::format_f64;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub train_fraction: f64,
    pub seed: u64,
    pub vif_threshold: f64,
    pub spearman_threshold: f64,
    pub alpha: f64,
    pub hybrid: HybridThresholds,
    pub logistic: LogisticParams,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            train_fraction: 0.8,
            seed: 0,
            vif_threshold: 5.0,
            spearman_threshold: 0.7,
            alpha: 0.05,
            hybrid: HybridThresholds::default(),
            logistic: LogisticParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    /// `baseline` or a selection method name.
    pub method: String,
    /// Distinct source columns behind the kept features.
    pub n_predictors: usize,
    pub n_features: usize,
    pub selection_seconds: f64,
    /// Wall time of the downstream model fit only.
    pub training_seconds: f64,
    /// Percent change of training time against the baseline row.
    pub time_difference_pct: Option<f64>,
    pub test_auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    /// Zero every wall-clock field so the table is reproducible byte for byte.
    pub fn zero_timings(&mut self) {
        for r in &mut self.rows {
            r.selection_seconds = 0.0;
            r.training_seconds = 0.0;
            if r.time_difference_pct.is_some() {
                r.time_difference_pct = Some(0.0);
            }
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "method",
            "predictors",
            "features",
            "training_time_s",
            "time_difference",
            "test_auc",
        ])?;
        for r in &self.rows {
            let diff = r
                .time_difference_pct
                .map_or_else(|| "N.A.".to_string(), |d| format!("{d:.1}%"));
            w.write_record([
                r.method.as_str(),
                &r.n_predictors.to_string(),
                &r.n_features.to_string(),
                &format!("{:.4}", r.training_seconds),
                &diff,
                &format_f64(r.test_auc),
            ])?;
        }
        w.flush().map_err(|e| Error::io("benchmark table", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn distinct_sources(x: &EncodedMatrix) -> usize {
    let mut s: Vec<&str> = x.source_map.iter().map(String::as_str).collect();
    s.sort_unstable();
    s.dedup();
    s.len()
}

/// Run one selection method on `train_rows` and return its report plus the
/// design matrix of the kept features over every row. VIF, univariate and
/// hybrid selection feed a drop-first encoding; Spearman works on the full
/// one-hot encoding.
pub fn select_features(
    table: &Table,
    y: &[u8],
    train_rows: &[usize],
    method: SelectionMethod,
    config: &BenchmarkConfig,
) -> Result<(SelectionReport, EncodedMatrix)> {
    if y.len() != table.n_rows() {
        return Err(Error::LengthMismatch {
            left: table.n_rows(),
            right: y.len(),
        });
    }
    let y_train: Vec<u8> = train_rows.iter().map(|&r| y[r]).collect();
    match method {
        SelectionMethod::Vif => {
            let drop_first = one_hot_encode(table, EncodingMode::DropFirst)?;
            let r = select_vif(&drop_first.take_rows(train_rows), config.vif_threshold)?;
            let x = drop_first.select_features(&r.kept)?;
            Ok((r, x))
        }
        SelectionMethod::Spearman => {
            let full = one_hot_encode(table, EncodingMode::Full)?;
            let r = select_spearman(
                &full.take_rows(train_rows),
                &y_train,
                config.spearman_threshold,
            )?;
            let x = full.select_features(&r.kept)?;
            Ok((r, x))
        }
        SelectionMethod::Univariate | SelectionMethod::Hybrid => {
            let train_table = table.take_rows(train_rows);
            let r = if method == SelectionMethod::Univariate {
                select_univariate(&train_table, &y_train, config.alpha)?
            } else {
                select_hybrid(&train_table, &y_train, config.hybrid)?
            };
            let drop_first = one_hot_encode(table, EncodingMode::DropFirst)?;
            let idx: Vec<usize> = (0..drop_first.n_features())
                .filter(|&j| r.kept.contains(&drop_first.source_map[j]))
                .collect();
            Ok((r, drop_first.select_indices(&idx)))
        }
    }
}

/// Compare selection methods against the full feature set with one fixed
/// stratified split and one fixed logistic-regression configuration.
/// Selection sees only the training rows.
pub fn benchmark_selection(
    table: &Table,
    y: &[u8],
    methods: &[SelectionMethod],
    config: &BenchmarkConfig,
) -> Result<BenchmarkTable> {
    if methods.is_empty() {
        return Err(Error::InvalidArgument(
            "benchmark needs at least one method".into(),
        ));
    }
    if y.len() != table.n_rows() {
        return Err(Error::LengthMismatch {
            left: table.n_rows(),
            right: y.len(),
        });
    }
    let split = stratified_split(y, config.train_fraction, config.seed)?;
    let y_train: Vec<u8> = split.train.iter().map(|&r| y[r]).collect();
    let y_test: Vec<u8> = split.test.iter().map(|&r| y[r]).collect();

    let evaluate =
        |method: &str, x: EncodedMatrix, selection_seconds: f64| -> Result<BenchmarkRow> {
            let train = x.take_rows(&split.train);
            let test = x.take_rows(&split.test);
            let start = Instant::now();
            let model = fit_logistic(train.x.view(), &y_train, &config.logistic)?;
            let training_seconds = start.elapsed().as_secs_f64();
            let scores = model.predict_proba(test.x.view())?;
            Ok(BenchmarkRow {
                method: method.into(),
                n_predictors: distinct_sources(&x),
                n_features: x.n_features(),
                selection_seconds,
                training_seconds,
                time_difference_pct: None,
                test_auc: auc(&scores, &y_test)?,
            })
        };

    let mut rows = vec![evaluate(
        "baseline",
        one_hot_encode(table, EncodingMode::DropFirst)?,
        0.0,
    )?];
    for &m in methods {
        let (report, x) = select_features(table, y, &split.train, m, config)?;
        rows.push(evaluate(m.as_str(), x, report.runtime_seconds)?);
    }
    let base = rows[0].training_seconds;
    for r in rows.iter_mut().skip(1) {
        r.time_difference_pct = Some(if base > 0.0 {
            (r.training_seconds - base) / base * 100.0
        } else {
            0.0
        });
    }
    Ok(BenchmarkTable { rows })
}
