use std::path::Path;

use anyhow::Context;
use losstack::data::{one_hot_encode, EncodedMatrix, EncodingMode, Table};
use losstack::ensemble::StackedModel;
use losstack::explain::Explainable;
use losstack::learners::Model;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "model", rename_all = "snake_case")]
pub enum BundledModel {
    Single(Model),
    Stacking(StackedModel),
}

impl Explainable for BundledModel {
    fn predict(&self, x: ArrayView2<f64>) -> losstack::Result<Vec<f64>> {
        match self {
            BundledModel::Single(m) => m.predict_proba(x),
            BundledModel::Stacking(m) => m.predict_proba(x),
        }
    }
}

/// A fitted model plus everything needed to rebuild its design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub name: String,
    pub encoding: EncodingMode,
    pub feature_names: Vec<String>,
    /// Source column of every feature.
    pub source_columns: Vec<String>,
    pub seed: u64,
    pub model: BundledModel,
}

impl ModelBundle {
    pub fn new(
        name: &str,
        features: &EncodedMatrix,
        encoding: EncodingMode,
        seed: u64,
        model: BundledModel,
    ) -> Self {
        ModelBundle {
            format_version: BUNDLE_VERSION,
            name: name.into(),
            encoding,
            feature_names: features.feature_names.clone(),
            source_columns: features.source_map.clone(),
            seed,
            model,
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| losstack::Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{} is not JSON", path.display()))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64);
        if version != Some(u64::from(BUNDLE_VERSION)) {
            return Err(losstack::Error::UnsupportedVersion(version.unwrap_or(0) as u32).into());
        }
        serde_json::from_value(value)
            .with_context(|| format!("{} is not a model bundle", path.display()))
    }

    /// The bundle's features over every row of a prepared table.
    pub fn design(&self, table: &Table) -> anyhow::Result<EncodedMatrix> {
        let x = one_hot_encode(table, self.encoding)?;
        if let Some(f) = self
            .feature_names
            .iter()
            .find(|f| x.feature_index(f).is_none())
        {
            return Err(losstack::Error::UnknownColumn(f.clone()).into());
        }
        Ok(x.select_features(&self.feature_names)?)
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> losstack::Result<Vec<f64>> {
        self.model.predict(x)
    }
}
