use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Sentinel stored in categorical columns for a missing cell.
pub const MISSING_CATEGORY: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Patient,
    Clinical,
    System,
    Outcome,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Patient => "patient",
            Domain::Clinical => "clinical",
            Domain::System => "system",
            Domain::Outcome => "outcome",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One entry of the schema sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub domain: Domain,
    pub kind: ColumnKind,
    /// Declared category labels, in declared order (categorical only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
    /// Whether the declared order of `categories` is meaningful.
    #[serde(default, skip_serializing_if = "is_false")]
    pub ordered: bool,
}

impl ColumnSpec {
    pub fn continuous(name: impl Into<String>, domain: Domain) -> Self {
        ColumnSpec {
            name: name.into(),
            domain,
            kind: ColumnKind::Continuous,
            categories: Vec::new(),
            ordered: false,
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        domain: Domain,
        categories: impl IntoIterator<Item = S>,
    ) -> Self {
        ColumnSpec {
            name: name.into(),
            domain,
            kind: ColumnKind::Categorical,
            categories: categories.into_iter().map(Into::into).collect(),
            ordered: false,
        }
    }

    pub fn with_ordered(mut self, ordered: bool) -> Self {
        self.ordered = ordered;
        self
    }

    pub fn is_categorical(&self) -> bool {
        self.kind == ColumnKind::Categorical
    }
}

/// Column storage. Missing continuous cells hold `NaN`, missing categorical
/// cells hold [`MISSING_CATEGORY`]; indices refer to `ColumnSpec::categories`.
#[derive(Debug, Clone)]
pub enum ColumnValues {
    Continuous(Vec<f64>),
    Categorical(Vec<u32>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Continuous(v) => v.len(),
            ColumnValues::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_missing(&self, row: usize) -> bool {
        match self {
            ColumnValues::Continuous(v) => v[row].is_nan(),
            ColumnValues::Categorical(v) => v[row] == MISSING_CATEGORY,
        }
    }

    fn take(&self, rows: &[usize]) -> ColumnValues {
        match self {
            ColumnValues::Continuous(v) => {
                ColumnValues::Continuous(rows.iter().map(|&r| v[r]).collect())
            }
            ColumnValues::Categorical(v) => {
                ColumnValues::Categorical(rows.iter().map(|&r| v[r]).collect())
            }
        }
    }
}

/// An immutable, schema-tagged table.
#[derive(Debug, Clone)]
pub struct Table {
    specs: Vec<ColumnSpec>,
    n_rows: usize,
    values: Vec<ColumnValues>,
    missing: Vec<Vec<bool>>,
}

impl Table {
    pub fn new(specs: Vec<ColumnSpec>, values: Vec<ColumnValues>) -> Result<Table> {
        if specs.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: specs.len(),
                right: values.len(),
            });
        }
        let mut seen = HashSet::new();
        let mut outcomes = 0;
        for spec in &specs {
            if !seen.insert(spec.name.as_str()) {
                return Err(Error::DuplicateColumn(spec.name.clone()));
            }
            if spec.domain == Domain::Outcome {
                outcomes += 1;
            }
            if spec.is_categorical() {
                let distinct: HashSet<&String> = spec.categories.iter().collect();
                if distinct.len() != spec.categories.len() {
                    return Err(Error::InvalidSchema(format!(
                        "column `{}` declares a category twice",
                        spec.name
                    )));
                }
            }
        }
        if outcomes > 1 {
            return Err(Error::InvalidSchema("more than one outcome column".into()));
        }
        let n_rows = values.first().map_or(0, ColumnValues::len);
        for (spec, col) in specs.iter().zip(&values) {
            if col.len() != n_rows {
                return Err(Error::LengthMismatch {
                    left: n_rows,
                    right: col.len(),
                });
            }
            match (spec.kind, col) {
                (ColumnKind::Continuous, ColumnValues::Continuous(_)) => {}
                (ColumnKind::Categorical, ColumnValues::Categorical(v)) => {
                    let k = spec.categories.len() as u32;
                    if let Some(&bad) = v.iter().find(|&&c| c != MISSING_CATEGORY && c >= k) {
                        return Err(Error::InvalidSchema(format!(
                            "column `{}` has category index {bad} but declares {k} categories",
                            spec.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidSchema(format!(
                        "column `{}` storage does not match its kind",
                        spec.name
                    )))
                }
            }
        }
        let missing = values
            .iter()
            .map(|col| (0..n_rows).map(|r| col.is_missing(r)).collect())
            .collect();
        Ok(Table {
            specs,
            n_rows,
            values,
            missing,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[ColumnSpec] {
        &self.specs
    }

    pub fn spec(&self, col: usize) -> &ColumnSpec {
        &self.specs[col]
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.specs.iter().map(|s| s.name.as_str())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.specs.iter().position(|s| s.name == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn values(&self, col: usize) -> &ColumnValues {
        &self.values[col]
    }

    pub fn continuous(&self, col: usize) -> Result<&[f64]> {
        match &self.values[col] {
            ColumnValues::Continuous(v) => Ok(v),
            ColumnValues::Categorical(_) => Err(Error::InvalidArgument(format!(
                "column `{}` is not continuous",
                self.specs[col].name
            ))),
        }
    }

    pub fn categorical(&self, col: usize) -> Result<&[u32]> {
        match &self.values[col] {
            ColumnValues::Categorical(v) => Ok(v),
            ColumnValues::Continuous(_) => Err(Error::InvalidArgument(format!(
                "column `{}` is not categorical",
                self.specs[col].name
            ))),
        }
    }

    pub fn missing_mask(&self, col: usize) -> &[bool] {
        &self.missing[col]
    }

    pub fn is_missing(&self, col: usize, row: usize) -> bool {
        self.missing[col][row]
    }

    pub fn missing_count(&self, col: usize) -> usize {
        self.missing[col].iter().filter(|&&m| m).count()
    }

    pub fn total_missing(&self) -> usize {
        (0..self.n_cols()).map(|c| self.missing_count(c)).sum()
    }

    /// Label of a categorical cell, `None` when missing or continuous.
    pub fn category_label(&self, col: usize, row: usize) -> Option<&str> {
        match &self.values[col] {
            ColumnValues::Categorical(v) if v[row] != MISSING_CATEGORY => {
                Some(self.specs[col].categories[v[row] as usize].as_str())
            }
            _ => None,
        }
    }

    /// Index of the outcome column, if the schema declares one.
    pub fn outcome_column(&self) -> Option<usize> {
        self.specs.iter().position(|s| s.domain == Domain::Outcome)
    }

    /// Indices of every non-outcome column.
    pub fn predictor_columns(&self) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&c| self.specs[c].domain != Domain::Outcome)
            .collect()
    }

    /// New table with the named columns, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Table> {
        let idx = names
            .iter()
            .map(|n| self.require_column(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        self.select_indices(&idx)
    }

    pub fn select_indices(&self, cols: &[usize]) -> Result<Table> {
        Table::new(
            cols.iter().map(|&c| self.specs[c].clone()).collect(),
            cols.iter().map(|&c| self.values[c].clone()).collect(),
        )
    }

    /// New table without the outcome column.
    pub fn predictors(&self) -> Table {
        let cols = self.predictor_columns();
        self.select_indices(&cols)
            .expect("subset of a valid table is valid")
    }

    pub fn take_rows(&self, rows: &[usize]) -> Table {
        Table {
            specs: self.specs.clone(),
            n_rows: rows.len(),
            values: self.values.iter().map(|c| c.take(rows)).collect(),
            missing: self
                .missing
                .iter()
                .map(|m| rows.iter().map(|&r| m[r]).collect())
                .collect(),
        }
    }

    /// Replace one column's spec and values, keeping its position.
    pub fn replace_column(
        &self,
        col: usize,
        spec: ColumnSpec,
        values: ColumnValues,
    ) -> Result<Table> {
        let mut specs = self.specs.clone();
        let mut vals = self.values.clone();
        specs[col] = spec;
        vals[col] = values;
        Table::new(specs, vals)
    }

    pub fn into_parts(self) -> (Vec<ColumnSpec>, Vec<ColumnValues>) {
        (self.specs, self.values)
    }
}

impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.specs == other.specs
            && self.n_rows == other.n_rows
            && self.missing == other.missing
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| match (a, b) {
                    (ColumnValues::Continuous(x), ColumnValues::Continuous(y)) => {
                        x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
                    }
                    (ColumnValues::Categorical(x), ColumnValues::Categorical(y)) => x == y,
                    _ => false,
                })
    }
}
