use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::table::{ColumnValues, Domain, Table};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingMode {
    /// One indicator per category.
    Full,
    /// Drops the first (lexicographically smallest) category of each column.
    DropFirst,
}

/// Dense design matrix with a map from every feature back to its source column.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix {
    pub feature_names: Vec<String>,
    pub source_map: Vec<String>,
    pub x: Array2<f64>,
    pub y: Option<Vec<u8>>,
}

impl EncodedMatrix {
    /// Matrix whose features are their own source columns.
    pub fn from_parts(feature_names: Vec<String>, x: Array2<f64>) -> Self {
        assert_eq!(feature_names.len(), x.ncols(), "one name per column");
        EncodedMatrix {
            source_map: feature_names.clone(),
            feature_names,
            x,
            y: None,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    pub fn with_labels(mut self, y: Vec<u8>) -> Result<Self> {
        if y.len() != self.n_rows() {
            return Err(Error::LengthMismatch {
                left: self.n_rows(),
                right: y.len(),
            });
        }
        self.y = Some(y);
        Ok(self)
    }

    /// Keep the named features, in the order given.
    pub fn select_features<S: AsRef<str>>(&self, names: &[S]) -> Result<EncodedMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_index(n.as_ref())
                    .ok_or_else(|| Error::UnknownColumn(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_indices(&idx))
    }

    pub fn select_indices(&self, idx: &[usize]) -> EncodedMatrix {
        EncodedMatrix {
            feature_names: idx.iter().map(|&j| self.feature_names[j].clone()).collect(),
            source_map: idx.iter().map(|&j| self.source_map[j].clone()).collect(),
            x: self.x.select(ndarray::Axis(1), idx),
            y: self.y.clone(),
        }
    }

    pub fn take_rows(&self, rows: &[usize]) -> EncodedMatrix {
        EncodedMatrix {
            feature_names: self.feature_names.clone(),
            source_map: self.source_map.clone(),
            x: self.x.select(ndarray::Axis(0), rows),
            y: self
                .y
                .as_ref()
                .map(|y| rows.iter().map(|&r| y[r]).collect()),
        }
    }
}

/// One-hot encode every non-outcome column of a fully observed table.
///
/// Continuous columns are copied; categorical columns become `col=category`
/// indicators in lexicographic category order.
pub fn one_hot_encode(table: &Table, mode: EncodingMode) -> Result<EncodedMatrix> {
    let n = table.n_rows();
    let mut names = Vec::new();
    let mut sources = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();

    for col in 0..table.n_cols() {
        let spec = table.spec(col);
        if spec.domain == Domain::Outcome {
            continue;
        }
        if table.missing_count(col) > 0 {
            return Err(Error::MissingCellsPresent(spec.name.clone()));
        }
        match table.values(col) {
            ColumnValues::Continuous(v) => {
                names.push(spec.name.clone());
                sources.push(spec.name.clone());
                columns.push(v.clone());
            }
            ColumnValues::Categorical(codes) => {
                let mut order: Vec<usize> = (0..spec.categories.len()).collect();
                order.sort_by(|&a, &b| spec.categories[a].cmp(&spec.categories[b]));
                let skip = usize::from(mode == EncodingMode::DropFirst);
                for &cat in order.iter().skip(skip) {
                    names.push(format!("{}={}", spec.name, spec.categories[cat]));
                    sources.push(spec.name.clone());
                    columns.push(
                        codes
                            .iter()
                            .map(|&c| if c as usize == cat { 1.0 } else { 0.0 })
                            .collect(),
                    );
                }
            }
        }
    }

    let p = columns.len();
    let x = Array2::from_shape_fn((n, p), |(i, j)| columns[j][i]);
    Ok(EncodedMatrix {
        feature_names: names,
        source_map: sources,
        x,
        y: None,
    })
}

/// Full encoding restricted to a previously chosen feature list, e.g. when
/// scoring new data with a saved model.
pub fn encode_features<S: AsRef<str>>(table: &Table, feature_names: &[S]) -> Result<EncodedMatrix> {
    let mut sources: Vec<String> = Vec::new();
    for f in feature_names {
        let f = f.as_ref();
        let src = match table.column_index(f) {
            Some(_) => f.to_string(),
            None => f
                .split_once('=')
                .map(|(c, _)| c.to_string())
                .ok_or_else(|| Error::UnknownColumn(f.to_string()))?,
        };
        if !sources.contains(&src) {
            sources.push(src);
        }
    }
    let sub = table.select_columns(&sources)?;
    one_hot_encode(&sub, EncodingMode::Full)?.select_features(feature_names)
}
