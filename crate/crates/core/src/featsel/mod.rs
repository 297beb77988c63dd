//! Correlation- and test-based feature selection plus domain variable sets.

mod benchmark;
mod methods;
mod sets;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::serde_util::{format_f64, lenient_f64};
use crate::{Error, Result};

pub use benchmark::{
    benchmark_selection, select_features, BenchmarkConfig, BenchmarkRow, BenchmarkTable,
};
pub use methods::{
    select_hybrid, select_spearman, select_univariate, select_vif, HybridThresholds,
};
pub use sets::{build_variable_sets, variable_set, VariableSet, BASELINE_SET};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Vif,
    Spearman,
    Univariate,
    Hybrid,
}

impl SelectionMethod {
    pub const ALL: [SelectionMethod; 4] = [
        SelectionMethod::Vif,
        SelectionMethod::Spearman,
        SelectionMethod::Univariate,
        SelectionMethod::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMethod::Vif => "vif",
            SelectionMethod::Spearman => "spearman",
            SelectionMethod::Univariate => "univariate",
            SelectionMethod::Hybrid => "hybrid",
        }
    }
}

impl std::fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SelectionMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown selection method `{s}`")))
    }
}

/// A feature removed by a selection rule, with the statistic that crossed
/// the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedFeature {
    pub feature: String,
    pub reason: String,
    #[serde(with = "lenient_f64")]
    pub statistic: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub method: SelectionMethod,
    /// Kept features in input order.
    pub kept: Vec<String>,
    /// Dropped features in the order they were removed.
    pub dropped: Vec<DroppedFeature>,
    pub runtime_seconds: f64,
}

impl SelectionReport {
    /// Same selection outcome, ignoring runtime.
    pub fn same_selection(&self, other: &SelectionReport) -> bool {
        self.method == other.method && self.kept == other.kept && self.dropped == other.dropped
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["feature", "status", "reason", "statistic", "threshold"])?;
        for f in &self.kept {
            w.write_record([f.as_str(), "kept", "", "", ""])?;
        }
        for d in &self.dropped {
            w.write_record([
                d.feature.as_str(),
                "dropped",
                &d.reason,
                &format_f64(d.statistic),
                &format_f64(d.threshold),
            ])?;
        }
        w.flush().map_err(|e| Error::io("selection report", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
