use std::fmt;
use std::path::{Path, PathBuf};

use losstack::explain::{DEFAULT_BACKGROUND_SIZE, MIN_PERMUTATIONS};
use losstack::featsel::{HybridThresholds, SelectionMethod};
use losstack::learners::LearnerKind;
use serde::{Deserialize, Serialize};

/// A problem with the run configuration or the command line; exits with 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Built-in synthetic spec name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<String>,
    /// Row count override for the synthetic spec.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutcomeConfig {
    pub los_column: String,
    pub percentile: f64,
}

impl Default for OutcomeConfig {
    fn default() -> Self {
        OutcomeConfig {
            los_column: "los_days".into(),
            percentile: 0.75,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    pub forest_trees: usize,
    pub max_iter: usize,
    pub max_depth: usize,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            forest_trees: 50,
            max_iter: 10,
            max_depth: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    /// `None` keeps every feature of the variable set.
    pub method: Option<SelectionMethod>,
    pub vif_threshold: f64,
    pub spearman_threshold: f64,
    pub alpha: f64,
    pub hybrid: HybridThresholds,
    /// Also benchmark every method against the full set.
    pub benchmark: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            method: Some(SelectionMethod::Univariate),
            vif_threshold: 5.0,
            spearman_threshold: 0.7,
            alpha: 0.05,
            hybrid: HybridThresholds::default(),
            benchmark: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Logistic,
    RandomForest,
    GbtLevelwise,
    GbtLeafwise,
    GbtOblivious,
    Stacking,
}

impl ModelChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelChoice::Stacking => "stacking",
            other => other.learner().expect("single learner").as_str(),
        }
    }

    pub fn learner(self) -> Option<LearnerKind> {
        match self {
            ModelChoice::Logistic => Some(LearnerKind::Logistic),
            ModelChoice::RandomForest => Some(LearnerKind::RandomForest),
            ModelChoice::GbtLevelwise => Some(LearnerKind::GbtLevelwise),
            ModelChoice::GbtLeafwise => Some(LearnerKind::GbtLeafwise),
            ModelChoice::GbtOblivious => Some(LearnerKind::GbtOblivious),
            ModelChoice::Stacking => None,
        }
    }
}

impl std::str::FromStr for ModelChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| config_error(format!("unknown model '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Configurations drawn per learner; 0 keeps the default parameters.
    pub n_iter: usize,
    pub k_folds: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            n_iter: 0,
            k_folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub train_fraction: f64,
    pub threshold: f64,
    pub n_boot: usize,
    pub calibration_bins: usize,
    pub cv_k: usize,
    /// Repeated cross-validation of the chosen model on the training rows; 0 skips it.
    pub cv_repeats: usize,
    /// Bootstrap comparison against a logistic-regression baseline.
    pub compare_with_logistic: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            train_fraction: 0.8,
            threshold: losstack::learners::DEFAULT_THRESHOLD,
            n_boot: 1000,
            calibration_bins: 10,
            cv_k: 5,
            cv_repeats: 0,
            compare_with_logistic: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainOptions {
    pub enabled: bool,
    /// Test rows explained (stratified sample).
    pub rows: usize,
    pub background: usize,
    pub n_permutations: usize,
    pub n_boot: usize,
    pub top: usize,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            enabled: true,
            rows: 100,
            background: DEFAULT_BACKGROUND_SIZE,
            n_permutations: 20,
            n_boot: 1000,
            top: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every stage derives its own seed from it.
    pub seed: u64,
    pub input: InputConfig,
    pub outcome: OutcomeConfig,
    pub prep: PrepConfig,
    /// One of the domain combinations (`all`, `patient+clinical`, ...) or `baseline`.
    pub variable_set: String,
    /// Columns of the `baseline` variable set.
    pub baseline_columns: Vec<String>,
    pub selection: SelectionConfig,
    pub model: ModelChoice,
    pub search: SearchConfig,
    pub evaluation: EvalConfig,
    pub explain: ExplainOptions,
    pub output_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_id: Option<String>,
    /// Zero timings and omit timestamps so every artifact is byte-stable.
    pub reproducible: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            input: InputConfig::default(),
            outcome: OutcomeConfig::default(),
            prep: PrepConfig::default(),
            variable_set: "all".into(),
            baseline_columns: Vec::new(),
            selection: SelectionConfig::default(),
            model: ModelChoice::Stacking,
            search: SearchConfig::default(),
            evaluation: EvalConfig::default(),
            explain: ExplainOptions::default(),
            output_dir: PathBuf::from("out"),
            run_id: None,
            reproducible: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| config_error(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let open = |v: f64| v > 0.0 && v < 1.0;
        if !open(self.outcome.percentile) {
            return Err(config_error("outcome.percentile must lie in (0, 1)"));
        }
        if !open(self.evaluation.train_fraction) {
            return Err(config_error("evaluation.train_fraction must lie in (0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.evaluation.threshold) {
            return Err(config_error("evaluation.threshold must lie in [0, 1]"));
        }
        if self.evaluation.n_boot < 100 {
            return Err(config_error("evaluation.n_boot must be at least 100"));
        }
        if self.evaluation.calibration_bins == 0 {
            return Err(config_error("evaluation.calibration_bins must be positive"));
        }
        if self.evaluation.cv_repeats > 0 && self.evaluation.cv_k < 2 {
            return Err(config_error("evaluation.cv_k must be at least 2"));
        }
        if self.search.n_iter > 0 && self.search.k_folds < 2 {
            return Err(config_error("search.k_folds must be at least 2"));
        }
        if self.explain.enabled {
            if self.explain.n_permutations < MIN_PERMUTATIONS {
                return Err(config_error(format!(
                    "explain.n_permutations must be at least {MIN_PERMUTATIONS}"
                )));
            }
            if self.explain.rows < 2 || self.explain.background == 0 || self.explain.n_boot == 0 {
                return Err(config_error(
                    "explain.rows must be at least 2; background and n_boot positive",
                ));
            }
        }
        if self.prep.forest_trees == 0 {
            return Err(config_error("prep.forest_trees must be positive"));
        }
        if let Some(id) = &self.run_id {
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                return Err(config_error(format!("invalid run id '{id}'")));
            }
        }
        Ok(())
    }

    /// Input must name exactly one of a synthetic spec or a data/schema pair.
    pub fn validate_input(&self) -> anyhow::Result<()> {
        match (&self.input.spec, &self.input.data, &self.input.schema) {
            (Some(_), None, None) => Ok(()),
            (None, Some(_), Some(_)) => Ok(()),
            (None, Some(_), None) => Err(config_error("--data needs --schema")),
            (None, None, Some(_)) => Err(config_error("--schema needs --data")),
            (None, None, None) => Err(config_error(
                "no input: give --spec or --data with --schema",
            )),
            _ => Err(config_error(
                "give either --spec or --data/--schema, not both",
            )),
        }
    }

    pub fn run_id(&self) -> String {
        if let Some(id) = &self.run_id {
            return id.clone();
        }
        let stem = match (&self.input.spec, &self.input.data) {
            (Some(spec), _) => spec.clone(),
            (None, Some(path)) => path
                .file_stem()
                .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned()),
            (None, None) => "run".into(),
        };
        format!("{stem}-seed{}", self.seed)
    }
}
