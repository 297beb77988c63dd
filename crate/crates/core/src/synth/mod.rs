//! Synthetic stroke-cohort generator with planted ground truth.
//!
//! Each row gets a latent log-mean length of stay `ln(base_los) + Σ effects`;
//! the stay itself is negative-binomial (gamma-Poisson) around that mean and
//! clamped to `[1, 150]`. The true probability of exceeding the cohort's 75th
//! percentile is reported per row, so downstream models can be scored against
//! the best achievable ranking.

mod library;

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::{
    dichotomize_outcome, ColumnSpec, ColumnValues, Domain, OutcomeSpec, Table, MISSING_CATEGORY,
};
use crate::rng::{stream, Rng};
use crate::{Error, Result};

pub use library::{default_specs, spec_by_name, SPEC_NAMES};

pub const MIN_LOS: f64 = 1.0;
pub const MAX_LOS: f64 = 150.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SynthKind {
    Continuous {
        mean: f64,
        sd: f64,
        min: f64,
        max: f64,
        decimals: u32,
    },
    Categorical {
        categories: Vec<String>,
        probs: Vec<f64>,
        #[serde(default)]
        ordered: bool,
        /// Realise the category counts exactly (largest remainder) instead
        /// of sampling them.
        #[serde(default)]
        exact_counts: bool,
    },
    /// Near-copy of an earlier column: Gaussian jitter of `noise` source
    /// standard deviations for continuous sources, a random relabelling with
    /// probability `noise` for categorical ones.
    Clone { source: String, noise: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthColumn {
    pub name: String,
    pub domain: Domain,
    pub kind: SynthKind,
    /// Contribution to the log-mean stay: one coefficient per standard
    /// deviation for continuous columns, one per category for categorical
    /// columns. Empty means no effect.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<f64>,
    /// MCAR missing fraction, realised as an exact cell count.
    #[serde(default)]
    pub missing: f64,
}

impl SynthColumn {
    pub fn continuous(
        name: &str,
        domain: Domain,
        mean: f64,
        sd: f64,
        bounds: (f64, f64),
        decimals: u32,
    ) -> Self {
        SynthColumn {
            name: name.into(),
            domain,
            kind: SynthKind::Continuous {
                mean,
                sd,
                min: bounds.0,
                max: bounds.1,
                decimals,
            },
            effects: Vec::new(),
            missing: 0.0,
        }
    }

    pub fn categorical(name: &str, domain: Domain, categories: &[&str], probs: &[f64]) -> Self {
        SynthColumn {
            name: name.into(),
            domain,
            kind: SynthKind::Categorical {
                categories: categories.iter().map(|s| s.to_string()).collect(),
                probs: probs.to_vec(),
                ordered: false,
                exact_counts: false,
            },
            effects: Vec::new(),
            missing: 0.0,
        }
    }

    /// `No`/`Yes` column with `P(Yes) = p_yes`.
    pub fn binary(name: &str, domain: Domain, p_yes: f64) -> Self {
        Self::categorical(name, domain, &["No", "Yes"], &[1.0 - p_yes, p_yes])
    }

    pub fn clone_of(name: &str, domain: Domain, source: &str, noise: f64) -> Self {
        SynthColumn {
            name: name.into(),
            domain,
            kind: SynthKind::Clone {
                source: source.into(),
                noise,
            },
            effects: Vec::new(),
            missing: 0.0,
        }
    }

    pub fn effects(mut self, effects: &[f64]) -> Self {
        self.effects = effects.to_vec();
        self
    }

    pub fn effect(self, effect: f64) -> Self {
        self.effects(&[effect])
    }

    pub fn missing(mut self, fraction: f64) -> Self {
        self.missing = fraction;
        self
    }

    pub fn ordered(mut self) -> Self {
        if let SynthKind::Categorical { ordered, .. } = &mut self.kind {
            *ordered = true;
        }
        self
    }

    pub fn exact(mut self) -> Self {
        if let SynthKind::Categorical { exact_counts, .. } = &mut self.kind {
            *exact_counts = true;
        }
        self
    }

    fn has_effect(&self) -> bool {
        self.effects.iter().any(|&e| e != 0.0)
    }
}

fn default_signal_scale() -> f64 {
    1.0
}

fn default_outcome_column() -> String {
    "los_days".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub name: String,
    pub n_rows: usize,
    pub seed: u64,
    /// Stay (days) of a row whose effects are all zero.
    pub base_los: f64,
    /// Gamma shape of the overdispersion; larger is closer to Poisson.
    pub dispersion: f64,
    /// Multiplier applied to every effect; 0 yields a pure-noise cohort.
    #[serde(default = "default_signal_scale")]
    pub signal_scale: f64,
    #[serde(default = "default_outcome_column")]
    pub outcome_column: String,
    pub columns: Vec<SynthColumn>,
}

impl SynthSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_rows(mut self, n_rows: usize) -> Self {
        self.n_rows = n_rows;
        self
    }

    pub fn without_signal(mut self) -> Self {
        self.signal_scale = 0.0;
        self
    }

    /// Number of predictor columns per domain (patient, clinical, system).
    pub fn domain_counts(&self) -> (usize, usize, usize) {
        let count = |d| self.columns.iter().filter(|c| c.domain == d).count();
        (
            count(Domain::Patient),
            count(Domain::Clinical),
            count(Domain::System),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n_rows < 2 {
            return bad(format!("n_rows must be at least 2, got {}", self.n_rows));
        }
        if !(self.base_los.is_finite() && self.base_los > 0.0) {
            return bad(format!("base_los must be positive, got {}", self.base_los));
        }
        if !(self.dispersion.is_finite() && self.dispersion > 0.0) {
            return bad(format!(
                "dispersion must be positive, got {}",
                self.dispersion
            ));
        }
        if !(self.signal_scale.is_finite() && self.signal_scale >= 0.0) {
            return bad(format!(
                "signal_scale must be non-negative, got {}",
                self.signal_scale
            ));
        }
        if self.columns.is_empty() {
            return bad("no predictor columns".into());
        }
        let mut seen: HashMap<&str, &SynthColumn> = HashMap::new();
        for col in &self.columns {
            if col.name == self.outcome_column || seen.contains_key(col.name.as_str()) {
                return bad(format!("duplicate column `{}`", col.name));
            }
            if col.domain == Domain::Outcome {
                return bad(format!("column `{}` cannot be tagged outcome", col.name));
            }
            if !(0.0..1.0).contains(&col.missing) {
                return bad(format!(
                    "column `{}` missing fraction {} outside [0, 1)",
                    col.name, col.missing
                ));
            }
            if col.effects.iter().any(|e| !e.is_finite()) {
                return bad(format!("column `{}` has a non-finite effect", col.name));
            }
            match &col.kind {
                SynthKind::Continuous {
                    mean, sd, min, max, ..
                } => {
                    if !(mean.is_finite() && sd.is_finite() && *sd > 0.0 && min < max) {
                        return bad(format!(
                            "column `{}` has invalid continuous parameters",
                            col.name
                        ));
                    }
                    if col.effects.len() > 1 {
                        return bad(format!(
                            "continuous column `{}` takes at most one effect",
                            col.name
                        ));
                    }
                }
                SynthKind::Categorical {
                    categories, probs, ..
                } => {
                    if categories.len() < 2 || probs.len() != categories.len() {
                        return bad(format!(
                            "column `{}` needs ≥2 categories with one probability each",
                            col.name
                        ));
                    }
                    let total: f64 = probs.iter().sum();
                    if probs.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                        return bad(format!(
                            "column `{}` probabilities must be non-negative and sum to 1",
                            col.name
                        ));
                    }
                    if !col.effects.is_empty() && col.effects.len() != categories.len() {
                        return bad(format!(
                            "column `{}` needs one effect per category",
                            col.name
                        ));
                    }
                }
                SynthKind::Clone { source, noise } => {
                    match seen.get(source.as_str()) {
                        Some(src) if !matches!(src.kind, SynthKind::Clone { .. }) => {}
                        _ => {
                            return bad(format!(
                            "clone `{}` must reference an earlier non-clone column, got `{source}`",
                            col.name
                        ))
                        }
                    }
                    if !(noise.is_finite() && (0.0..=1.0).contains(noise)) {
                        return bad(format!("clone `{}` noise {noise} outside [0, 1]", col.name));
                    }
                    if !col.effects.is_empty() {
                        return bad(format!("clone `{}` cannot carry its own effects", col.name));
                    }
                }
            }
            seen.insert(&col.name, col);
        }
        Ok(())
    }
}

/// Everything an oracle test needs to know about a generated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec_name: String,
    pub seed: u64,
    pub n_rows: usize,
    pub base_los: f64,
    pub dispersion: f64,
    /// Effects actually applied (after `signal_scale`), keyed by column.
    pub coefficients: BTreeMap<String, Vec<f64>>,
    pub signal_columns: Vec<String>,
    /// Columns with no effect that are not clones of a signal column.
    pub noise_columns: Vec<String>,
    /// Each group lists the source column first.
    pub clone_groups: Vec<Vec<String>>,
    pub missing_counts: BTreeMap<String, usize>,
    /// 75th percentile of the realised stays over the whole cohort.
    pub threshold: f64,
    pub threshold_days: f64,
    pub prevalence: f64,
    /// Model-free `P(stay > threshold)` per row.
    pub true_risk: Vec<f64>,
    /// AUC of `true_risk` against the realised labels.
    pub true_auc: f64,
}

/// Probability that a negative-binomial count with mean `mu` and shape `r`,
/// clamped to `[MIN_LOS, MAX_LOS]`, exceeds `t`.
pub fn exceedance_probability(mu: f64, r: f64, t: f64) -> f64 {
    if t < MIN_LOS {
        return 1.0;
    }
    if t >= MAX_LOS {
        return 0.0;
    }
    let q = mu / (r + mu);
    let mut pmf = (r / (r + mu)).powf(r);
    let mut cdf = pmf;
    let upper = t.floor() as u32;
    for k in 0..upper {
        let k = f64::from(k);
        pmf *= (k + r) / (k + 1.0) * q;
        cdf += pmf;
    }
    (1.0 - cdf).clamp(0.0, 1.0)
}

fn round_to(v: f64, decimals: u32) -> f64 {
    let m = 10f64.powi(decimals as i32);
    (v * m).round() / m
}

/// Category counts summing to `n` by the largest-remainder rule.
fn exact_counts(probs: &[f64], n: usize) -> Vec<usize> {
    let raw: Vec<f64> = probs.iter().map(|p| p * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    let short = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle().take(short) {
        counts[i] += 1;
    }
    counts
}

enum Drawn {
    Continuous(Vec<f64>),
    Categorical(Vec<u32>),
}

struct Resolved<'a> {
    spec: ColumnSpec,
    /// Generating column (the source, for clones).
    base: &'a SynthColumn,
}

fn draw_column(col: &SynthColumn, n: usize, rng: &mut Rng) -> Drawn {
    match &col.kind {
        SynthKind::Continuous {
            mean,
            sd,
            min,
            max,
            decimals,
        } => {
            let normal = Normal::new(*mean, *sd).expect("validated");
            Drawn::Continuous(
                (0..n)
                    .map(|_| round_to(normal.sample(rng).clamp(*min, *max), *decimals))
                    .collect(),
            )
        }
        SynthKind::Categorical {
            probs,
            exact_counts: exact,
            ..
        } => {
            if *exact {
                let mut codes: Vec<u32> = exact_counts(probs, n)
                    .into_iter()
                    .enumerate()
                    .flat_map(|(c, k)| std::iter::repeat_n(c as u32, k))
                    .collect();
                codes.shuffle(rng);
                Drawn::Categorical(codes)
            } else {
                let cum: Vec<f64> = probs
                    .iter()
                    .scan(0.0, |s, p| {
                        *s += p;
                        Some(*s)
                    })
                    .collect();
                let last = probs.len() - 1;
                Drawn::Categorical(
                    (0..n)
                        .map(|_| {
                            let u: f64 = rng.random();
                            cum.iter().position(|&c| u < c).unwrap_or(last) as u32
                        })
                        .collect(),
                )
            }
        }
        SynthKind::Clone { .. } => unreachable!("clones are drawn from their source"),
    }
}

fn draw_clone(source: &SynthColumn, values: &Drawn, noise: f64, rng: &mut Rng) -> Drawn {
    match (&source.kind, values) {
        (
            SynthKind::Continuous {
                sd,
                min,
                max,
                decimals,
                ..
            },
            Drawn::Continuous(v),
        ) => {
            let jitter = Normal::new(0.0, noise * sd).expect("validated");
            Drawn::Continuous(
                v.iter()
                    .map(|&x| round_to((x + jitter.sample(rng)).clamp(*min, *max), *decimals))
                    .collect(),
            )
        }
        (SynthKind::Categorical { categories, .. }, Drawn::Categorical(v)) => {
            let k = categories.len() as u32;
            Drawn::Categorical(
                v.iter()
                    .map(|&c| {
                        if rng.random::<f64>() < noise {
                            let shift = rng.random_range(1..k);
                            (c + shift) % k
                        } else {
                            c
                        }
                    })
                    .collect(),
            )
        }
        _ => unreachable!("source kind and storage agree"),
    }
}

fn column_spec(col: &SynthColumn, base: &SynthColumn) -> ColumnSpec {
    match &base.kind {
        SynthKind::Continuous { .. } => ColumnSpec::continuous(col.name.clone(), col.domain),
        SynthKind::Categorical {
            categories,
            ordered,
            ..
        } => ColumnSpec::categorical(col.name.clone(), col.domain, categories.iter().cloned())
            .with_ordered(*ordered),
        SynthKind::Clone { .. } => unreachable!("clone of clone rejected by validation"),
    }
}

/// Generate a cohort and its ground truth from a single seeded stream.
pub fn generate(spec: &SynthSpec) -> Result<(Table, GroundTruth)> {
    spec.validate()?;
    let n = spec.n_rows;
    let mut rng = stream(spec.seed, "synth", 0);

    let by_name: HashMap<&str, &SynthColumn> =
        spec.columns.iter().map(|c| (c.name.as_str(), c)).collect();
    let mut resolved = Vec::with_capacity(spec.columns.len());
    let mut drawn: Vec<Drawn> = Vec::with_capacity(spec.columns.len());
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (j, col) in spec.columns.iter().enumerate() {
        let (base, values) = match &col.kind {
            SynthKind::Clone { source, noise } => {
                let src = by_name[source.as_str()];
                (
                    src,
                    draw_clone(src, &drawn[index[source.as_str()]], *noise, &mut rng),
                )
            }
            _ => (col, draw_column(col, n, &mut rng)),
        };
        resolved.push(Resolved {
            spec: column_spec(col, base),
            base,
        });
        drawn.push(values);
        index.insert(&col.name, j);
    }

    let mut coefficients = BTreeMap::new();
    let mut eta = vec![spec.base_los.ln(); n];
    for (col, values) in spec.columns.iter().zip(&drawn) {
        if !col.has_effect() {
            continue;
        }
        let effects: Vec<f64> = col.effects.iter().map(|e| e * spec.signal_scale).collect();
        match (&col.kind, values) {
            (SynthKind::Continuous { mean, sd, .. }, Drawn::Continuous(v)) => {
                for (e, x) in eta.iter_mut().zip(v) {
                    *e += effects[0] * (x - mean) / sd;
                }
            }
            (SynthKind::Categorical { .. }, Drawn::Categorical(v)) => {
                for (e, &c) in eta.iter_mut().zip(v) {
                    *e += effects[c as usize];
                }
            }
            _ => unreachable!("clones carry no effects"),
        }
        coefficients.insert(col.name.clone(), effects);
    }

    let r = spec.dispersion;
    let los: Vec<f64> = eta
        .iter()
        .map(|&e| {
            let mu = e.exp();
            let lambda = Gamma::new(r, mu / r)
                .expect("positive shape and scale")
                .sample(&mut rng);
            let count = if lambda > 0.0 {
                Poisson::new(lambda)
                    .expect("positive rate")
                    .sample(&mut rng)
            } else {
                0.0
            };
            count.clamp(MIN_LOS, MAX_LOS)
        })
        .collect();

    let mut missing_counts = BTreeMap::new();
    let mut columns: Vec<ColumnValues> = Vec::with_capacity(drawn.len() + 1);
    for (col, values) in spec.columns.iter().zip(drawn) {
        let k = (col.missing * n as f64).round() as usize;
        let rows = if k > 0 {
            rand::seq::index::sample(&mut rng, n, k).into_vec()
        } else {
            Vec::new()
        };
        missing_counts.insert(col.name.clone(), k);
        columns.push(match values {
            Drawn::Continuous(mut v) => {
                for &i in &rows {
                    v[i] = f64::NAN;
                }
                ColumnValues::Continuous(v)
            }
            Drawn::Categorical(mut v) => {
                for &i in &rows {
                    v[i] = MISSING_CATEGORY;
                }
                ColumnValues::Categorical(v)
            }
        });
    }
    columns.push(ColumnValues::Continuous(los));
    let mut specs: Vec<ColumnSpec> = resolved.iter().map(|r| r.spec.clone()).collect();
    specs.push(ColumnSpec::continuous(
        spec.outcome_column.clone(),
        Domain::Outcome,
    ));
    let table = Table::new(specs, columns)?;

    let outcome_spec = OutcomeSpec {
        los_column: spec.outcome_column.clone(),
        ..OutcomeSpec::default()
    };
    let outcome = dichotomize_outcome(&table, &outcome_spec, None)?;
    let true_risk: Vec<f64> = eta
        .iter()
        .map(|&e| exceedance_probability(e.exp(), r, outcome.threshold))
        .collect();
    let true_auc = crate::eval::auc(&true_risk, &outcome.labels)?;

    let signal_columns: Vec<String> = coefficients
        .iter()
        .filter(|(_, e)| e.iter().any(|&x| x != 0.0))
        .map(|(k, _)| k.clone())
        .collect();
    let is_signal = |name: &str| signal_columns.iter().any(|s| s == name);
    let mut groups: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (col, res) in spec.columns.iter().zip(&resolved) {
        if let SynthKind::Clone { .. } = col.kind {
            groups
                .entry(res.base.name.as_str())
                .or_insert_with(|| vec![res.base.name.clone()])
                .push(col.name.clone());
        }
    }
    let clone_of_signal = |name: &str| {
        groups
            .values()
            .any(|g| g[1..].iter().any(|c| c == name) && is_signal(&g[0]))
    };
    let noise_columns = spec
        .columns
        .iter()
        .filter(|c| !is_signal(&c.name) && !clone_of_signal(&c.name))
        .map(|c| c.name.clone())
        .collect();
    let clone_groups = spec
        .columns
        .iter()
        .filter_map(|c| groups.get(c.name.as_str()).cloned())
        .collect();

    let truth = GroundTruth {
        spec_name: spec.name.clone(),
        seed: spec.seed,
        n_rows: n,
        base_los: spec.base_los,
        dispersion: r,
        coefficients,
        signal_columns,
        noise_columns,
        clone_groups,
        missing_counts,
        threshold: outcome.threshold,
        threshold_days: outcome.threshold_days,
        prevalence: outcome.n_positive as f64 / n as f64,
        true_risk,
        true_auc,
    };
    Ok((table, truth))
}
