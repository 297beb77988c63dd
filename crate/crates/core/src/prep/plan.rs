use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, ColumnSpec, ColumnValues, Domain, Table, MISSING_CATEGORY};
use crate::{Error, Result};

/// Missing fraction strictly above which a column is dropped.
pub const DROP_MISSING_ABOVE: f64 = 0.15;
/// Missing fraction strictly below which simple imputation is used.
pub const SIMPLE_BELOW: f64 = 0.02;
/// Share of the most frequent category at or above which a column is dropped.
pub const DOMINANT_SHARE: f64 = 0.98;
/// Category share strictly below which a category is merged.
pub const RARE_SHARE: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnAction {
    #[serde(rename = "drop_missing_gt_15")]
    DropMissing,
    ImputeMedian,
    ImputeMode,
    ImputeForest,
    Keep,
}

impl ColumnAction {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnAction::DropMissing => "drop_missing_gt_15",
            ColumnAction::ImputeMedian => "impute_median",
            ColumnAction::ImputeMode => "impute_mode",
            ColumnAction::ImputeForest => "impute_forest",
            ColumnAction::Keep => "keep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RebalanceAction {
    #[serde(rename = "drop_dominant_98")]
    DropDominant,
    #[serde(rename = "merge_rare_2")]
    MergeRare,
    Keep,
}

impl RebalanceAction {
    pub fn as_str(self) -> &'static str {
        match self {
            RebalanceAction::DropDominant => "drop_dominant_98",
            RebalanceAction::MergeRare => "merge_rare_2",
            RebalanceAction::Keep => "keep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPlan {
    pub name: String,
    pub kind: ColumnKind,
    pub missing_count: usize,
    pub missing_fraction: f64,
    pub action: ColumnAction,
    pub rebalance: RebalanceAction,
    /// Old category label → new label, for every label that changes.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub merge_map: BTreeMap<String, String>,
    /// Categories after merging, in output order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub merged_categories: Vec<String>,
    /// Share of the most frequent observed category (categorical only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant_share: Option<f64>,
}

impl ColumnPlan {
    pub fn is_dropped(&self) -> bool {
        self.action == ColumnAction::DropMissing || self.rebalance == RebalanceAction::DropDominant
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepPlan {
    pub n_rows: usize,
    pub columns: Vec<ColumnPlan>,
}

impl PrepPlan {
    pub fn column(&self, name: &str) -> Option<&ColumnPlan> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn dropped(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.is_dropped())
            .map(|c| c.name.as_str())
            .collect()
    }

    /// True when applying the plan would change nothing.
    pub fn is_noop(&self) -> bool {
        self.columns
            .iter()
            .all(|c| c.action == ColumnAction::Keep && c.rebalance == RebalanceAction::Keep)
    }
}

/// Pick the action for a column from its missing cell count.
///
/// Boundaries are evaluated on integer counts so that e.g. exactly 15% is
/// never misclassified by floating-point rounding.
pub fn missing_action(kind: ColumnKind, missing: usize, n_rows: usize) -> ColumnAction {
    let (m, n) = (missing as u128, n_rows as u128);
    if m == 0 {
        ColumnAction::Keep
    } else if 100 * m > 15 * n {
        ColumnAction::DropMissing
    } else if 100 * m < 2 * n {
        match kind {
            ColumnKind::Continuous => ColumnAction::ImputeMedian,
            ColumnKind::Categorical => ColumnAction::ImputeMode,
        }
    } else {
        ColumnAction::ImputeForest
    }
}

/// Closed-open numeric band parsed from labels like `<50`, `50-99`, `>400`.
#[derive(Debug, Clone, PartialEq)]
struct Band {
    lo: Option<String>,
    hi: Option<String>,
}

fn is_number(s: &str) -> bool {
    !s.is_empty() && s.parse::<f64>().is_ok()
}

fn parse_band(label: &str) -> Option<Band> {
    let s = label.trim();
    if let Some(hi) = s.strip_prefix('<') {
        return is_number(hi.trim()).then(|| Band {
            lo: None,
            hi: Some(hi.trim().to_string()),
        });
    }
    if let Some(lo) = s.strip_prefix('>').or_else(|| s.strip_suffix('+')) {
        return is_number(lo.trim()).then(|| Band {
            lo: Some(lo.trim().to_string()),
            hi: None,
        });
    }
    let (lo, hi) = s.split_once('-')?;
    (is_number(lo.trim()) && is_number(hi.trim())).then(|| Band {
        lo: Some(lo.trim().to_string()),
        hi: Some(hi.trim().to_string()),
    })
}

/// Label for two adjacent ordered groups merged together (`lower` first).
pub fn merge_labels(lower: &str, upper: &str) -> String {
    if let (Some(a), Some(b)) = (parse_band(lower), parse_band(upper)) {
        return match (a.lo, b.hi) {
            (None, Some(hi)) => format!("<{hi}"),
            (Some(lo), None) => format!(">{lo}"),
            (Some(lo), Some(hi)) => format!("{lo}-{hi}"),
            (None, None) => format!("{lower}/{upper}"),
        };
    }
    format!("{lower}/{upper}")
}

struct Group {
    label: String,
    members: Vec<usize>,
    count: usize,
}

/// Iteratively merge the rarest category (< `RARE_SHARE` of observed cells)
/// while at least three groups remain. Returns the final groups.
fn merge_rare(spec: &ColumnSpec, counts: &[usize]) -> Vec<Group> {
    let observed: usize = counts.iter().sum();
    let mut groups: Vec<Group> = spec
        .categories
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(i, (label, &count))| Group {
            label: label.clone(),
            members: vec![i],
            count,
        })
        .collect();
    if observed == 0 {
        return groups;
    }
    let is_rare = |count: usize| (count as u128) * 100 < (observed as u128) * 2;
    while groups.len() >= 3 {
        let Some(rare) = (0..groups.len())
            .filter(|&g| is_rare(groups[g].count))
            .min_by_key(|&g| (groups[g].count, g))
        else {
            break;
        };
        if spec.ordered {
            let target = match (
                rare.checked_sub(1),
                (rare + 1 < groups.len()).then_some(rare + 1),
            ) {
                (Some(l), Some(r)) => {
                    if groups[r].count < groups[l].count {
                        r
                    } else {
                        l
                    }
                }
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => unreachable!("at least three groups"),
            };
            let (lo, hi) = (rare.min(target), rare.max(target));
            let upper = groups.remove(hi);
            let lower = &mut groups[lo];
            lower.label = merge_labels(&lower.label, &upper.label);
            lower.members.extend(upper.members);
            lower.count += upper.count;
        } else {
            let target = (0..groups.len())
                .filter(|&g| g != rare)
                .max_by_key(|&g| (groups[g].count, std::cmp::Reverse(g)))
                .expect("at least three groups");
            let absorbed = groups.remove(rare);
            let target = if target > rare { target - 1 } else { target };
            groups[target].members.extend(absorbed.members);
            groups[target].count += absorbed.count;
        }
    }
    groups
}

fn category_counts(codes: &[u32], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for &c in codes {
        if c != MISSING_CATEGORY {
            counts[c as usize] += 1;
        }
    }
    counts
}

/// Derive the preparation plan for every non-outcome column.
pub fn plan_prep(table: &Table) -> PrepPlan {
    let n = table.n_rows();
    let columns = table
        .predictor_columns()
        .into_iter()
        .map(|c| plan_column(table, c, n))
        .collect();
    PrepPlan { n_rows: n, columns }
}

fn plan_column(table: &Table, col: usize, n: usize) -> ColumnPlan {
    let spec = table.spec(col);
    let missing_count = table.missing_count(col);
    let action = missing_action(spec.kind, missing_count, n);
    let mut plan = ColumnPlan {
        name: spec.name.clone(),
        kind: spec.kind,
        missing_count,
        missing_fraction: if n == 0 {
            0.0
        } else {
            missing_count as f64 / n as f64
        },
        action,
        rebalance: RebalanceAction::Keep,
        merge_map: BTreeMap::new(),
        merged_categories: Vec::new(),
        dominant_share: None,
    };
    let ColumnValues::Categorical(codes) = table.values(col) else {
        return plan;
    };
    if action == ColumnAction::DropMissing {
        return plan;
    }
    let counts = category_counts(codes, spec.categories.len());
    let observed: usize = counts.iter().sum();
    if observed == 0 {
        return plan;
    }
    let groups = merge_rare(spec, &counts);
    let top = groups.iter().map(|g| g.count).max().unwrap_or(0);
    plan.dominant_share = Some(top as f64 / observed as f64);
    if (top as u128) * 100 >= (observed as u128) * 98 {
        plan.rebalance = RebalanceAction::DropDominant;
        return plan;
    }
    if groups.len() < spec.categories.len() {
        plan.rebalance = RebalanceAction::MergeRare;
        for g in &groups {
            for &m in &g.members {
                if spec.categories[m] != g.label {
                    plan.merge_map
                        .insert(spec.categories[m].clone(), g.label.clone());
                }
            }
        }
        plan.merged_categories = groups.iter().map(|g| g.label.clone()).collect();
    }
    plan
}

/// Drop planned columns and recode merged categories. The outcome column and
/// any column the plan does not mention pass through unchanged.
pub fn apply_rebalance(table: &Table, plan: &PrepPlan) -> Result<Table> {
    let mut specs = Vec::new();
    let mut values = Vec::new();
    for col in 0..table.n_cols() {
        let spec = table.spec(col);
        let Some(cp) = plan
            .column(&spec.name)
            .filter(|_| spec.domain != Domain::Outcome)
        else {
            specs.push(spec.clone());
            values.push(table.values(col).clone());
            continue;
        };
        if cp.is_dropped() {
            continue;
        }
        if cp.rebalance != RebalanceAction::MergeRare {
            specs.push(spec.clone());
            values.push(table.values(col).clone());
            continue;
        }
        let ColumnValues::Categorical(codes) = table.values(col) else {
            return Err(Error::InvalidArgument(format!(
                "merge planned for continuous column `{}`",
                spec.name
            )));
        };
        let recode: Vec<u32> = spec
            .categories
            .iter()
            .map(|label| {
                let new = cp.merge_map.get(label).unwrap_or(label);
                cp.merged_categories
                    .iter()
                    .position(|c| c == new)
                    .map(|p| p as u32)
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "plan for `{}` does not cover `{label}`",
                            spec.name
                        ))
                    })
            })
            .collect::<Result<_>>()?;
        let codes = codes
            .iter()
            .map(|&c| {
                if c == MISSING_CATEGORY {
                    c
                } else {
                    recode[c as usize]
                }
            })
            .collect();
        specs.push(
            ColumnSpec::categorical(
                spec.name.clone(),
                spec.domain,
                cp.merged_categories.iter().cloned(),
            )
            .with_ordered(spec.ordered),
        );
        values.push(ColumnValues::Categorical(codes));
    }
    Table::new(specs, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_boundaries() {
        use ColumnAction::*;
        use ColumnKind::*;
        assert_eq!(missing_action(Continuous, 16, 100), DropMissing);
        assert_eq!(missing_action(Continuous, 15, 100), ImputeForest);
        assert_eq!(missing_action(Continuous, 2, 100), ImputeForest);
        assert_eq!(missing_action(Continuous, 1, 100), ImputeMedian);
        assert_eq!(missing_action(Categorical, 1, 100), ImputeMode);
        assert_eq!(missing_action(Categorical, 0, 100), Keep);
        assert_eq!(missing_action(Continuous, 1887, 12575), DropMissing);
        assert_eq!(missing_action(Continuous, 1886, 12575), ImputeForest);
    }

    #[test]
    fn band_labels() {
        assert_eq!(merge_labels("<50", "50-99"), "<99");
        assert_eq!(merge_labels("200-399", ">400"), ">200");
        assert_eq!(merge_labels("50-99", "100-199"), "50-199");
        assert_eq!(merge_labels("low", "mid"), "low/mid");
    }

    fn cat_table(categories: &[&str], ordered: bool, counts: &[usize]) -> Table {
        let codes = counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c as u32, k))
            .collect();
        Table::new(
            vec![
                ColumnSpec::categorical("c", Domain::System, categories.iter().copied())
                    .with_ordered(ordered),
            ],
            vec![ColumnValues::Categorical(codes)],
        )
        .unwrap()
    }

    #[test]
    fn ordered_rare_merges_into_neighbour() {
        let t = cat_table(
            &["<50", "50-99", "100-199", ">200"],
            true,
            &[71, 753, 4000, 5176],
        );
        let plan = plan_prep(&t);
        let cp = &plan.columns[0];
        assert_eq!(cp.rebalance, RebalanceAction::MergeRare);
        assert_eq!(cp.merged_categories, ["<99", "100-199", ">200"]);
        assert_eq!(cp.merge_map.get("<50").unwrap(), "<99");
        let out = apply_rebalance(&t, &plan).unwrap();
        let codes = out.categorical(0).unwrap();
        assert_eq!(codes.iter().filter(|&&c| c == 0).count(), 824);
        assert!(plan_prep(&out).is_noop());
    }

    #[test]
    fn unordered_rare_merges_into_mode() {
        let t = cat_table(&["Home", "Rehab", "Other"], false, &[60, 39, 1]);
        let cp = plan_prep(&t).columns.remove(0);
        assert_eq!(cp.merged_categories, ["Home", "Rehab"]);
        assert_eq!(cp.merge_map.get("Other").unwrap(), "Home");
    }

    #[test]
    fn dominant_and_binary_rare() {
        let t = cat_table(&["No", "Yes"], false, &[17, 983]);
        let cp = plan_prep(&t).columns.remove(0);
        assert_eq!(cp.rebalance, RebalanceAction::DropDominant);
        let out = apply_rebalance(&t, &plan_prep(&t)).unwrap();
        assert_eq!(out.n_cols(), 0);

        let t = cat_table(&["No", "Yes"], false, &[985, 15]);
        assert_eq!(
            plan_prep(&t).columns[0].rebalance,
            RebalanceAction::DropDominant
        );
        let t = cat_table(&["No", "Yes"], false, &[9790, 210]);
        let cp = plan_prep(&t).columns.remove(0);
        assert_eq!(cp.rebalance, RebalanceAction::Keep);
        let t = cat_table(&["No", "Yes"], false, &[9810, 190]);
        let cp = plan_prep(&t).columns.remove(0);
        assert_eq!(cp.rebalance, RebalanceAction::DropDominant);
    }

    #[test]
    fn undeclared_levels_fold_away() {
        let t = cat_table(&["a", "b", "c"], false, &[50, 50, 0]);
        let cp = plan_prep(&t).columns.remove(0);
        assert_eq!(cp.merged_categories, ["a", "b"]);
    }
}
