//! Missing-data handling and categorical rebalancing.
//!
//! [`plan_prep`] inspects a table and decides, per column, whether to drop it,
//! fill it with a median/mode, or impute it with iterative random forests, and
//! whether dominant or rare categories need attention. [`prepare`] applies a
//! plan end to end.

mod impute;
mod plan;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, Table};
use crate::serde_util::format_f64;
use crate::{Error, Result};

pub use impute::{
    impute_forest, impute_forest_with, impute_simple, impute_simple_with, FillValue,
    ForestImputeParams, ForestImputeReport,
};
pub use plan::{
    apply_rebalance, merge_labels, missing_action, plan_prep, ColumnAction, ColumnPlan, PrepPlan,
    RebalanceAction, DOMINANT_SHARE, DROP_MISSING_ABOVE, RARE_SHARE, SIMPLE_BELOW,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepSummaryRow {
    pub column: String,
    pub kind: ColumnKind,
    pub missing_fraction: f64,
    pub action: ColumnAction,
    pub rebalance: RebalanceAction,
    /// Fill value, merge map or dominant share, depending on the action.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepSummary {
    pub rows: Vec<PrepSummaryRow>,
    pub forest: ForestImputeReport,
}

impl PrepSummary {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "column",
            "kind",
            "missing_fraction",
            "action",
            "rebalance",
            "detail",
        ])?;
        for r in &self.rows {
            let kind = match r.kind {
                ColumnKind::Continuous => "continuous",
                ColumnKind::Categorical => "categorical",
            };
            w.write_record([
                r.column.as_str(),
                kind,
                &format_f64(r.missing_fraction),
                r.action.as_str(),
                r.rebalance.as_str(),
                &r.detail,
            ])?;
        }
        w.flush().map_err(|e| Error::io("prep summary", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Apply a plan: drop and merge, then median/mode fills, then forest
/// imputation. Fill statistics and forest training use
/// `params.reference_rows` when set.
pub fn prepare(
    table: &Table,
    plan: &PrepPlan,
    params: &ForestImputeParams,
) -> Result<(Table, PrepSummary)> {
    let rebalanced = apply_rebalance(table, plan)?;
    let (simple, fills) = impute_simple_with(&rebalanced, plan, params.reference_rows.as_deref())?;
    let (out, forest) = impute_forest_with(&simple, plan, params)?;

    let rows = plan
        .columns
        .iter()
        .map(|cp| {
            let detail = if let Some((_, v)) = fills.iter().find(|(n, _)| *n == cp.name) {
                v.to_string()
            } else if cp.rebalance == RebalanceAction::DropDominant {
                format!(
                    "dominant share {}",
                    format_f64(cp.dominant_share.unwrap_or(f64::NAN))
                )
            } else if !cp.merge_map.is_empty() {
                cp.merge_map
                    .iter()
                    .map(|(a, b)| format!("{a} -> {b}"))
                    .collect::<Vec<_>>()
                    .join("; ")
            } else {
                String::new()
            };
            PrepSummaryRow {
                column: cp.name.clone(),
                kind: cp.kind,
                missing_fraction: cp.missing_fraction,
                action: cp.action,
                rebalance: cp.rebalance,
                detail,
            }
        })
        .collect();
    Ok((out, PrepSummary { rows, forest }))
}
