use std::cmp::Ordering;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DroppedFeature, SelectionMethod, SelectionReport};
use crate::data::{ColumnValues, Domain, EncodedMatrix, Table, MISSING_CATEGORY};
use crate::stats::{
    average_ranks, chi_square_categories, correlation_matrix, correlation_ratio, cramers_v,
    mann_whitney_u, pearson, point_biserial, vif_from_correlation,
};
use crate::{Error, Result};

fn check_labels(n_rows: usize, y: &[u8]) -> Result<()> {
    if y.len() != n_rows {
        return Err(Error::LengthMismatch {
            left: n_rows,
            right: y.len(),
        });
    }
    Ok(())
}

fn report(
    method: SelectionMethod,
    names: &[String],
    dropped: Vec<DroppedFeature>,
    start: Instant,
) -> SelectionReport {
    let kept = names
        .iter()
        .filter(|n| !dropped.iter().any(|d| &d.feature == *n))
        .cloned()
        .collect();
    SelectionReport {
        method,
        kept,
        dropped,
        runtime_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Index of the larger statistic; ties go to the lexicographically first name.
fn argmax_by_name(values: &[f64], names: &[&str]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        let ord = values[i].total_cmp(&values[best]);
        if ord == Ordering::Greater || (ord == Ordering::Equal && names[i] < names[best]) {
            best = i;
        }
    }
    best
}

/// Iterative VIF elimination on a drop-first encoded design.
pub fn select_vif(x: &EncodedMatrix, threshold: f64) -> Result<SelectionReport> {
    let start = Instant::now();
    let corr = correlation_matrix(x.x.view())?;
    let mut active: Vec<usize> = (0..x.n_features()).collect();
    let mut dropped = Vec::new();
    while !active.is_empty() {
        let vifs = vif_from_correlation(&corr, &active)?;
        let names: Vec<&str> = active
            .iter()
            .map(|&j| x.feature_names[j].as_str())
            .collect();
        let worst = argmax_by_name(&vifs, &names);
        if !(vifs[worst] > threshold) {
            break;
        }
        dropped.push(DroppedFeature {
            feature: names[worst].to_string(),
            reason: "vif".into(),
            statistic: vifs[worst],
            threshold,
        });
        active.remove(worst);
    }
    Ok(report(
        SelectionMethod::Vif,
        &x.feature_names,
        dropped,
        start,
    ))
}

fn abs_or_zero(r: Result<f64>) -> f64 {
    r.map(f64::abs).unwrap_or(0.0)
}

struct Pair {
    a: usize,
    b: usize,
    strength: f64,
    kind: &'static str,
    threshold: f64,
}

/// Visit crossing pairs strongest first and drop the member less associated
/// with the target (ties: the lexicographically later name).
fn resolve_pairs(
    mut pairs: Vec<Pair>,
    target: &[f64],
    names: &[String],
    alive: &mut [bool],
) -> Vec<DroppedFeature> {
    pairs.sort_by(|p, q| {
        q.strength
            .total_cmp(&p.strength)
            .then((p.a, p.b).cmp(&(q.a, q.b)))
    });
    let mut dropped = Vec::new();
    for p in pairs {
        if !alive[p.a] || !alive[p.b] {
            continue;
        }
        let (ta, tb) = (target[p.a], target[p.b]);
        let (loser, winner) = match ta.total_cmp(&tb) {
            Ordering::Less => (p.a, p.b),
            Ordering::Greater => (p.b, p.a),
            Ordering::Equal if names[p.a] > names[p.b] => (p.a, p.b),
            Ordering::Equal => (p.b, p.a),
        };
        alive[loser] = false;
        dropped.push(DroppedFeature {
            feature: names[loser].clone(),
            reason: format!("{} with {}", p.kind, names[winner]),
            statistic: p.strength,
            threshold: p.threshold,
        });
    }
    dropped
}

fn column_f64(x: &EncodedMatrix, j: usize) -> Vec<f64> {
    x.x.column(j).to_vec()
}

/// Pairwise Spearman filter on a fully one-hot encoded design.
pub fn select_spearman(x: &EncodedMatrix, y: &[u8], threshold: f64) -> Result<SelectionReport> {
    let start = Instant::now();
    check_labels(x.n_rows(), y)?;
    let p = x.n_features();
    let ranks: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|j| average_ranks(&column_f64(x, j)))
        .collect::<Result<_>>()?;
    let target: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|j| abs_or_zero(point_biserial(y, &column_f64(x, j))))
        .collect();
    let pairs: Vec<Pair> = (0..p)
        .into_par_iter()
        .flat_map_iter(|a| {
            let ranks = &ranks;
            (a + 1..p).filter_map(move |b| {
                let rho = abs_or_zero(pearson(&ranks[a], &ranks[b]));
                (rho > threshold).then_some(Pair {
                    a,
                    b,
                    strength: rho,
                    kind: "spearman",
                    threshold,
                })
            })
        })
        .collect();
    let mut alive = vec![true; p];
    let dropped = resolve_pairs(pairs, &target, &x.feature_names, &mut alive);
    Ok(report(
        SelectionMethod::Spearman,
        &x.feature_names,
        dropped,
        start,
    ))
}

enum Raw<'a> {
    Continuous(&'a [f64]),
    Categorical(&'a [u32], usize),
}

struct RawColumn<'a> {
    name: String,
    values: Raw<'a>,
    degenerate: bool,
}

fn raw_columns(table: &Table) -> Result<Vec<RawColumn<'_>>> {
    let mut out = Vec::new();
    for col in 0..table.n_cols() {
        let spec = table.spec(col);
        if spec.domain == Domain::Outcome {
            continue;
        }
        if table.missing_count(col) > 0 {
            return Err(Error::MissingCellsPresent(spec.name.clone()));
        }
        let (values, degenerate) = match table.values(col) {
            ColumnValues::Continuous(v) => (Raw::Continuous(v), v.iter().all(|&x| x == v[0])),
            ColumnValues::Categorical(c) => {
                debug_assert!(!c.contains(&MISSING_CATEGORY));
                (
                    Raw::Categorical(c, spec.categories.len()),
                    c.iter().all(|&x| x == c[0]),
                )
            }
        };
        out.push(RawColumn {
            name: spec.name.clone(),
            values,
            degenerate: degenerate || table.n_rows() < 2,
        });
    }
    Ok(out)
}

fn degenerate_entry(name: &str, threshold: f64) -> DroppedFeature {
    DroppedFeature {
        feature: name.into(),
        reason: "degenerate".into(),
        statistic: f64::NAN,
        threshold,
    }
}

/// Keep raw columns whose association test with the label has `p < alpha`:
/// chi-square for categorical columns, Mann-Whitney U for continuous ones.
pub fn select_univariate(table: &Table, y: &[u8], alpha: f64) -> Result<SelectionReport> {
    let start = Instant::now();
    check_labels(table.n_rows(), y)?;
    let cols = raw_columns(table)?;
    let y32: Vec<u32> = y.iter().map(|&v| u32::from(v)).collect();
    let outcomes: Vec<Option<Result<f64>>> = cols
        .par_iter()
        .map(|c| {
            if c.degenerate {
                return None;
            }
            let test = match c.values {
                Raw::Categorical(codes, _) => chi_square_categories(codes, &y32),
                Raw::Continuous(v) => {
                    let (a, b): (Vec<f64>, Vec<f64>) = {
                        let a = v
                            .iter()
                            .zip(y)
                            .filter(|(_, &l)| l == 0)
                            .map(|(x, _)| *x)
                            .collect();
                        let b = v
                            .iter()
                            .zip(y)
                            .filter(|(_, &l)| l == 1)
                            .map(|(x, _)| *x)
                            .collect();
                        (a, b)
                    };
                    mann_whitney_u(&a, &b)
                }
            };
            Some(test.map(|t| t.p_value))
        })
        .collect();
    let mut dropped = Vec::new();
    for (c, outcome) in cols.iter().zip(outcomes) {
        match outcome {
            None => dropped.push(degenerate_entry(&c.name, alpha)),
            Some(Err(
                Error::DegenerateTable(_)
                | Error::ZeroExpectedCount
                | Error::EmptyInput(_)
                | Error::ConstantInput,
            )) => dropped.push(degenerate_entry(&c.name, alpha)),
            Some(Err(e)) => return Err(e),
            Some(Ok(p)) if !(p < alpha) => dropped.push(DroppedFeature {
                feature: c.name.clone(),
                reason: "p_value".into(),
                statistic: p,
                threshold: alpha,
            }),
            Some(Ok(_)) => {}
        }
    }
    let names: Vec<String> = cols.iter().map(|c| c.name.clone()).collect();
    Ok(report(SelectionMethod::Univariate, &names, dropped, start))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridThresholds {
    pub spearman: f64,
    pub cramers_v: f64,
    pub point_biserial: f64,
    pub corr_ratio: f64,
}

impl Default for HybridThresholds {
    fn default() -> Self {
        HybridThresholds {
            spearman: 0.7,
            cramers_v: 0.6,
            point_biserial: 0.3,
            corr_ratio: 0.4,
        }
    }
}

/// Two-stage filter on raw columns.
///
/// Stage 1 resolves same-type pairs (Spearman for continuous pairs, Cramér's V
/// for categorical pairs) by dropping the member less associated with the
/// label. Stage 2 drops every surviving continuous column that is associated
/// with a surviving categorical column: point-biserial for two-level columns,
/// the correlation ratio for polytomous ones.
pub fn select_hybrid(
    table: &Table,
    y: &[u8],
    thresholds: HybridThresholds,
) -> Result<SelectionReport> {
    let start = Instant::now();
    check_labels(table.n_rows(), y)?;
    let cols = raw_columns(table)?;
    let names: Vec<String> = cols.iter().map(|c| c.name.clone()).collect();
    let y32: Vec<u32> = y.iter().map(|&v| u32::from(v)).collect();
    let p = cols.len();
    let mut dropped: Vec<DroppedFeature> = cols
        .iter()
        .filter(|c| c.degenerate)
        .map(|c| degenerate_entry(&c.name, f64::NAN))
        .collect();
    let mut alive: Vec<bool> = cols.iter().map(|c| !c.degenerate).collect();

    let ranks: Vec<Option<Vec<f64>>> = cols
        .par_iter()
        .map(|c| match c.values {
            Raw::Continuous(v) => Some(average_ranks(v).expect("non-empty column")),
            Raw::Categorical(..) => None,
        })
        .collect();
    let target: Vec<f64> = cols
        .par_iter()
        .map(|c| match c.values {
            Raw::Continuous(v) => abs_or_zero(point_biserial(y, v)),
            Raw::Categorical(codes, _) => cramers_v(codes, &y32).unwrap_or(0.0),
        })
        .collect();

    let alive_ref = &alive;
    let pairs: Vec<Pair> = (0..p)
        .into_par_iter()
        .filter(|&a| alive_ref[a])
        .flat_map_iter(|a| {
            let (cols, ranks) = (&cols, &ranks);
            (a + 1..p)
                .filter(move |&b| alive_ref[b])
                .filter_map(move |b| match (&cols[a].values, &cols[b].values) {
                    (Raw::Continuous(_), Raw::Continuous(_)) => {
                        let rho = abs_or_zero(pearson(ranks[a].as_ref()?, ranks[b].as_ref()?));
                        (rho > thresholds.spearman).then_some(Pair {
                            a,
                            b,
                            strength: rho,
                            kind: "spearman",
                            threshold: thresholds.spearman,
                        })
                    }
                    (Raw::Categorical(ca, _), Raw::Categorical(cb, _)) => {
                        let v = cramers_v(ca, cb).unwrap_or(0.0);
                        (v > thresholds.cramers_v).then_some(Pair {
                            a,
                            b,
                            strength: v,
                            kind: "cramers_v",
                            threshold: thresholds.cramers_v,
                        })
                    }
                    _ => None,
                })
        })
        .collect();
    dropped.extend(resolve_pairs(pairs, &target, &names, &mut alive));

    // stage 2: continuous vs categorical
    let stage2: Vec<Option<DroppedFeature>> = (0..p)
        .into_par_iter()
        .map(|a| {
            let Raw::Continuous(v) = cols[a].values else {
                return None;
            };
            if !alive[a] {
                return None;
            }
            let mut best: Option<(f64, f64, usize, &str)> = None;
            for b in (0..p).filter(|&b| alive[b]) {
                let Raw::Categorical(codes, k) = cols[b].values else {
                    continue;
                };
                let (stat, thr, kind) = if k == 2 {
                    let bin: Vec<u8> = codes.iter().map(|&c| c as u8).collect();
                    (
                        abs_or_zero(point_biserial(&bin, v)),
                        thresholds.point_biserial,
                        "point_biserial",
                    )
                } else {
                    (
                        correlation_ratio(codes, v).unwrap_or(0.0),
                        thresholds.corr_ratio,
                        "corr_ratio",
                    )
                };
                if stat > thr && best.is_none_or(|(s, t, _, _)| stat / thr > s / t) {
                    best = Some((stat, thr, b, kind));
                }
            }
            best.map(|(stat, thr, b, kind)| DroppedFeature {
                feature: names[a].clone(),
                reason: format!("{kind} with {}", names[b]),
                statistic: stat,
                threshold: thr,
            })
        })
        .collect();
    dropped.extend(stage2.into_iter().flatten());
    Ok(report(SelectionMethod::Hybrid, &names, dropped, start))
}
