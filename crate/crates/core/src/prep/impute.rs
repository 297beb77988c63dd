use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::plan::{ColumnAction, PrepPlan};
use crate::data::{ColumnValues, Domain, Table, MISSING_CATEGORY};
use crate::learners::{fit_forest_classes, fit_forest_regression, ForestParams};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Fill value chosen for one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FillValue {
    Number(f64),
    Category(String),
}

impl std::fmt::Display for FillValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FillValue::Number(v) => write!(f, "{}", crate::serde_util::format_f64(*v)),
            FillValue::Category(c) => f.write_str(c),
        }
    }
}

fn rows_or_all(reference: Option<&[usize]>, n: usize) -> Vec<usize> {
    reference.map_or_else(|| (0..n).collect(), <[usize]>::to_vec)
}

/// Lower median of the observed reference values.
pub(crate) fn lower_median(values: &[f64], rows: &[usize]) -> Option<f64> {
    let mut v: Vec<f64> = rows
        .iter()
        .map(|&r| values[r])
        .filter(|x| !x.is_nan())
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

/// Most frequent observed category; ties go to the lexicographically first label.
pub(crate) fn mode(codes: &[u32], labels: &[String], rows: &[usize]) -> Option<u32> {
    let mut counts = vec![0usize; labels.len()];
    for &r in rows {
        if codes[r] != MISSING_CATEGORY {
            counts[codes[r] as usize] += 1;
        }
    }
    (0..labels.len())
        .filter(|&c| counts[c] > 0)
        .max_by(|&a, &b| {
            counts[a]
                .cmp(&counts[b])
                .then_with(|| labels[b].cmp(&labels[a]))
        })
        .map(|c| c as u32)
}

fn fill_value(table: &Table, col: usize, rows: &[usize]) -> Result<FillValue> {
    let spec = table.spec(col);
    let all_missing = || Error::AllMissingColumn(spec.name.clone());
    match table.values(col) {
        ColumnValues::Continuous(v) => lower_median(v, rows)
            .map(FillValue::Number)
            .ok_or_else(all_missing),
        ColumnValues::Categorical(c) => mode(c, &spec.categories, rows)
            .map(|k| FillValue::Category(spec.categories[k as usize].clone()))
            .ok_or_else(all_missing),
    }
}

fn filled(table: &Table, col: usize, value: &FillValue) -> ColumnValues {
    match (table.values(col), value) {
        (ColumnValues::Continuous(v), FillValue::Number(x)) => {
            ColumnValues::Continuous(v.iter().map(|&c| if c.is_nan() { *x } else { c }).collect())
        }
        (ColumnValues::Categorical(v), FillValue::Category(label)) => {
            let code = table
                .spec(col)
                .categories
                .iter()
                .position(|c| c == label)
                .expect("label from spec") as u32;
            ColumnValues::Categorical(
                v.iter()
                    .map(|&c| if c == MISSING_CATEGORY { code } else { c })
                    .collect(),
            )
        }
        _ => unreachable!("fill value matches column kind"),
    }
}

fn planned_columns(table: &Table, plan: &PrepPlan, wanted: &[ColumnAction]) -> Result<Vec<usize>> {
    let mut cols = Vec::new();
    for cp in plan.columns.iter().filter(|c| wanted.contains(&c.action)) {
        cols.push(table.require_column(&cp.name)?);
    }
    Ok(cols)
}

fn replace_columns(table: &Table, replacements: Vec<(usize, ColumnValues)>) -> Result<Table> {
    let (specs, mut values) = table.clone().into_parts();
    for (col, v) in replacements {
        values[col] = v;
    }
    Table::new(specs, values)
}

/// Median/mode fills for the columns the plan marks for simple imputation.
/// Statistics come from `reference_rows` (default: all rows).
pub fn impute_simple_with(
    table: &Table,
    plan: &PrepPlan,
    reference_rows: Option<&[usize]>,
) -> Result<(Table, Vec<(String, FillValue)>)> {
    let rows = rows_or_all(reference_rows, table.n_rows());
    let cols = planned_columns(
        table,
        plan,
        &[ColumnAction::ImputeMedian, ColumnAction::ImputeMode],
    )?;
    let mut fills = Vec::with_capacity(cols.len());
    let mut replacements = Vec::with_capacity(cols.len());
    for col in cols {
        let value = fill_value(table, col, &rows)?;
        replacements.push((col, filled(table, col, &value)));
        fills.push((table.spec(col).name.clone(), value));
    }
    Ok((replace_columns(table, replacements)?, fills))
}

pub fn impute_simple(table: &Table, plan: &PrepPlan) -> Result<Table> {
    impute_simple_with(table, plan, None).map(|(t, _)| t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestImputeParams {
    pub max_iter: usize,
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Rows whose observed values train the forests and give the initial
    /// fills. `None` uses the whole table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_rows: Option<Vec<usize>>,
}

impl Default for ForestImputeParams {
    fn default() -> Self {
        ForestImputeParams {
            max_iter: 10,
            n_trees: 50,
            max_depth: 12,
            seed: 0,
            reference_rows: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestImputeReport {
    pub iterations: usize,
    /// Normalised squared change of continuous imputations, per iteration.
    pub continuous_change: Vec<f64>,
    /// Fraction of categorical imputations that changed, per iteration.
    pub categorical_change: Vec<f64>,
}

/// Predictor design for imputing `target`: continuous columns as-is,
/// categorical columns one-hot (one indicator for binary columns).
fn design(table: &Table, predictors: &[usize]) -> Array2<f64> {
    let n = table.n_rows();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for &p in predictors {
        match table.values(p) {
            ColumnValues::Continuous(v) => cols.push(v.clone()),
            ColumnValues::Categorical(c) => {
                let k = table.spec(p).categories.len();
                let levels = if k == 2 { 1..2 } else { 0..k };
                for level in levels {
                    cols.push(
                        c.iter()
                            .map(|&x| f64::from(u8::from(x == level as u32)))
                            .collect(),
                    );
                }
            }
        }
    }
    Array2::from_shape_fn((n, cols.len()), |(r, j)| cols[j][r])
}

/// Iterative random-forest imputation of the columns planned for it.
///
/// Targets start from median/mode fills and are revisited in ascending order
/// of missingness; each pass refits a forest per target on its observed rows
/// and overwrites only the originally missing cells. Iteration stops when the
/// change in imputed values grows for every column kind present, returning the
/// previous pass, or after `max_iter` passes.
pub fn impute_forest_with(
    table: &Table,
    plan: &PrepPlan,
    params: &ForestImputeParams,
) -> Result<(Table, ForestImputeReport)> {
    let mut targets = planned_columns(table, plan, &[ColumnAction::ImputeForest])?;
    let mut report = ForestImputeReport {
        iterations: 0,
        continuous_change: Vec::new(),
        categorical_change: Vec::new(),
    };
    if targets.is_empty() {
        return Ok((table.clone(), report));
    }
    if params.max_iter == 0 || params.n_trees == 0 {
        return Err(Error::InvalidArgument(
            "forest imputation needs max_iter ≥ 1 and n_trees ≥ 1".into(),
        ));
    }
    targets.sort_by_key(|&c| (table.missing_count(c), c));
    let n = table.n_rows();
    let rows = rows_or_all(params.reference_rows.as_deref(), n);
    let in_reference = {
        let mut mask = vec![false; n];
        for &r in &rows {
            mask[r] = true;
        }
        mask
    };

    let mut current = table.clone();
    let mut init = Vec::new();
    for &t in &targets {
        let value = fill_value(table, t, &rows)?;
        init.push((t, filled(table, t, &value)));
    }
    current = replace_columns(&current, init)?;

    let predictor_pool: Vec<usize> = (0..current.n_cols())
        .filter(|&c| current.spec(c).domain != Domain::Outcome && current.missing_count(c) == 0)
        .collect();
    let has_cont = targets.iter().any(|&t| !table.spec(t).is_categorical());
    let has_cat = targets.iter().any(|&t| table.spec(t).is_categorical());

    let (mut last_cont, mut last_cat) = (f64::INFINITY, f64::INFINITY);
    for iter in 0..params.max_iter {
        let mut next = current.clone();
        for (ti, &t) in targets.iter().enumerate() {
            let spec = table.spec(t);
            let predictors: Vec<usize> =
                predictor_pool.iter().copied().filter(|&c| c != t).collect();
            if predictors.is_empty() {
                return Err(Error::NoPredictorsAvailable(spec.name.clone()));
            }
            let x = design(&next, &predictors);
            let is_missing = table.missing_mask(t);
            let train: Vec<usize> = (0..n)
                .filter(|&r| !is_missing[r] && in_reference[r])
                .collect();
            let missing: Vec<usize> = (0..n).filter(|&r| is_missing[r]).collect();
            if train.is_empty() {
                return Err(Error::AllMissingColumn(spec.name.clone()));
            }
            let x_train = x.select(ndarray::Axis(0), &train);
            let x_miss = x.select(ndarray::Axis(0), &missing);
            let forest = ForestParams {
                n_trees: params.n_trees,
                max_depth: params.max_depth,
                seed: derive_seed(
                    params.seed,
                    "impute_forest",
                    (iter * targets.len() + ti) as u64,
                ),
                ..ForestParams::default()
            };
            let values = match table.values(t) {
                ColumnValues::Continuous(orig) => {
                    let y: Vec<f64> = train.iter().map(|&r| orig[r]).collect();
                    let pred = fit_forest_regression(x_train.view(), &y, &forest)?
                        .predict_values(x_miss.view())?;
                    let ColumnValues::Continuous(mut col) = next.values(t).clone() else {
                        unreachable!()
                    };
                    for (&r, p) in missing.iter().zip(pred) {
                        col[r] = p;
                    }
                    ColumnValues::Continuous(col)
                }
                ColumnValues::Categorical(orig) => {
                    let y: Vec<u32> = train.iter().map(|&r| orig[r]).collect();
                    let k = spec.categories.len();
                    let pred = fit_forest_classes(x_train.view(), &y, k, &forest)?
                        .predict_classes(x_miss.view())?;
                    let ColumnValues::Categorical(mut col) = next.values(t).clone() else {
                        unreachable!()
                    };
                    for (&r, p) in missing.iter().zip(pred) {
                        col[r] = p;
                    }
                    ColumnValues::Categorical(col)
                }
            };
            next = replace_columns(&next, vec![(t, values)])?;
        }

        let (mut num, mut den, mut changed, mut cells) = (0.0, 0.0, 0usize, 0usize);
        for &t in &targets {
            let mask = table.missing_mask(t);
            match (current.values(t), next.values(t)) {
                (ColumnValues::Continuous(a), ColumnValues::Continuous(b)) => {
                    for r in 0..n {
                        den += b[r] * b[r];
                        if mask[r] {
                            num += (b[r] - a[r]).powi(2);
                        }
                    }
                }
                (ColumnValues::Categorical(a), ColumnValues::Categorical(b)) => {
                    for r in (0..n).filter(|&r| mask[r]) {
                        cells += 1;
                        changed += usize::from(a[r] != b[r]);
                    }
                }
                _ => unreachable!("kinds are stable"),
            }
        }
        let d_cont = if den > 0.0 { num / den } else { 0.0 };
        let d_cat = if cells > 0 {
            changed as f64 / cells as f64
        } else {
            0.0
        };
        report.iterations = iter + 1;
        report.continuous_change.push(d_cont);
        report.categorical_change.push(d_cat);

        let cont_up = !has_cont || d_cont > last_cont;
        let cat_up = !has_cat || d_cat > last_cat;
        if iter > 0 && cont_up && cat_up {
            // the pass before this one was the better fit
            return Ok((current, report));
        }
        current = next;
        last_cont = d_cont;
        last_cat = d_cat;
        if d_cont == 0.0 && d_cat == 0.0 {
            break;
        }
    }
    Ok((current, report))
}

pub fn impute_forest(table: &Table, plan: &PrepPlan, params: &ForestImputeParams) -> Result<Table> {
    impute_forest_with(table, plan, params).map(|(t, _)| t)
}
