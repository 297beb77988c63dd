use std::time::Instant;

use anyhow::Context;
use losstack::data::{
    dichotomize_outcome, load_csv, one_hot_encode, read_schema, stratified_sample,
    stratified_split, EncodedMatrix, EncodingMode, OutcomeSpec, SplitIndices, Table,
};
use losstack::ensemble::{fit_stacking, random_search, SearchResult, SearchSpace, StackingConfig};
use losstack::eval::{
    bootstrap_compare, calibration_curve, epv, metrics_report, repeated_stratified_cv, roc_curve,
    ComparisonResult, CvReport, Epv, FitPredict, MetricsReport,
};
use losstack::explain::{
    explain_rows, select_background, shap_summarize, Direction, ExplainConfig, ShapMethod,
    ShapSummary,
};
use losstack::featsel::{
    benchmark_selection, build_variable_sets, select_features, BenchmarkConfig, SelectionMethod,
    VariableSet,
};
use losstack::learners::{LearnerKind, LearnerParams};
use losstack::prep::{plan_prep, prepare, ForestImputeParams, PrepPlan, PrepSummary};
use losstack::rng::derive_seed;
use losstack::serde_util::format_f64;
use losstack::synth::{generate, spec_by_name, GroundTruth};
use ndarray::ArrayView2;
use serde::Serialize;

use crate::bundle::{BundledModel, ModelBundle};
use crate::config::{config_error, ModelChoice, RunConfig};
use crate::output::RunDir;
use crate::svg;

/// Exact attributions are used up to this many features.
const EXACT_SHAP_FEATURES: usize = 10;

pub fn timestamp(cfg: &RunConfig) -> Option<String> {
    if cfg.reproducible {
        return None;
    }
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    Some(format!("unix {secs}"))
}

fn seconds(start: Instant, cfg: &RunConfig) -> f64 {
    if cfg.reproducible {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    }
}

pub struct Input {
    pub table: Table,
    pub truth: Option<GroundTruth>,
    pub name: String,
}

pub fn load_input(cfg: &RunConfig, out: &mut RunDir) -> anyhow::Result<Input> {
    cfg.validate_input()?;
    if let Some(name) = &cfg.input.spec {
        let mut spec = spec_by_name(name).map_err(|e| config_error(e.to_string()))?;
        let seed = derive_seed(cfg.seed, "synth", 0);
        out.seed("synth", seed);
        spec = spec.with_seed(seed);
        if let Some(n) = cfg.input.rows {
            spec = spec.with_rows(n);
        }
        let (table, truth) = generate(&spec).map_err(|e| config_error(e.to_string()))?;
        return Ok(Input {
            table,
            truth: Some(truth),
            name: name.clone(),
        });
    }
    let data = cfg.input.data.as_ref().expect("validated input");
    let schema = cfg.input.schema.as_ref().expect("validated input");
    let specs = read_schema(schema)?;
    let table = load_csv(data, &specs)?;
    Ok(Input {
        table,
        truth: None,
        name: data
            .file_stem()
            .map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned()),
    })
}

pub fn write_input(out: &mut RunDir, input: &Input) -> anyhow::Result<()> {
    let csv = out.root().join("data").join(format!("{}.csv", input.name));
    std::fs::create_dir_all(csv.parent().expect("has parent"))
        .context("cannot create data directory")?;
    losstack::data::write_csv(&input.table, &csv)?;
    let bytes = std::fs::read(&csv).map_err(|e| losstack::Error::io(&csv, e))?;
    out.write_bytes(&format!("data/{}.csv", input.name), &bytes)?;
    out.write_json(
        &format!("data/{}.schema.json", input.name),
        &input.table.specs(),
    )?;
    if let Some(truth) = &input.truth {
        out.write_json("data/ground_truth.json", truth)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeSummary {
    pub los_column: String,
    pub percentile: f64,
    pub threshold: f64,
    pub threshold_days: f64,
    pub n_rows: usize,
    pub n_positive: usize,
    pub prevalence: f64,
    pub split_seed: u64,
    pub train_fraction: f64,
    pub n_train: usize,
    pub n_train_events: usize,
    pub n_test: usize,
    pub n_test_events: usize,
}

/// The prepared cohort: imputed table, labels and the train/test split.
pub struct Prepared {
    pub table: Table,
    pub labels: Vec<u8>,
    pub split: SplitIndices,
    pub plan: PrepPlan,
    pub summary: PrepSummary,
    pub outcome: OutcomeSummary,
}

impl Prepared {
    pub fn y_train(&self) -> Vec<u8> {
        self.split.train.iter().map(|&i| self.labels[i]).collect()
    }

    pub fn y_test(&self) -> Vec<u8> {
        self.split.test.iter().map(|&i| self.labels[i]).collect()
    }
}

/// Labels from the full-cohort percentile, a stratified split, then the
/// missing-data plan with imputation statistics taken from training rows.
pub fn prepare_input(cfg: &RunConfig, raw: &Table, out: &mut RunDir) -> anyhow::Result<Prepared> {
    let spec = OutcomeSpec {
        los_column: cfg.outcome.los_column.clone(),
        percentile: cfg.outcome.percentile,
        ..OutcomeSpec::default()
    };
    let outcome = dichotomize_outcome(raw, &spec, None)?;
    let split_seed = derive_seed(cfg.seed, "split", 0);
    out.seed("split", split_seed);
    let split = stratified_split(&outcome.labels, cfg.evaluation.train_fraction, split_seed)?;
    let plan = plan_prep(raw);
    let impute_seed = derive_seed(cfg.seed, "impute", 0);
    out.seed("impute", impute_seed);
    let params = ForestImputeParams {
        max_iter: cfg.prep.max_iter,
        n_trees: cfg.prep.forest_trees,
        max_depth: cfg.prep.max_depth,
        seed: impute_seed,
        reference_rows: Some(split.train.clone()),
    };
    let (table, summary) = prepare(raw, &plan, &params)?;
    let events = |rows: &[usize]| rows.iter().filter(|&&i| outcome.labels[i] == 1).count();
    let n = outcome.labels.len();
    let outcome_summary = OutcomeSummary {
        los_column: spec.los_column.clone(),
        percentile: spec.percentile,
        threshold: outcome.threshold,
        threshold_days: outcome.threshold_days,
        n_rows: n,
        n_positive: outcome.n_positive,
        prevalence: outcome.n_positive as f64 / n as f64,
        split_seed,
        train_fraction: cfg.evaluation.train_fraction,
        n_train: split.train.len(),
        n_train_events: events(&split.train),
        n_test: split.test.len(),
        n_test_events: events(&split.test),
    };
    Ok(Prepared {
        table,
        labels: outcome.labels,
        split,
        plan,
        summary,
        outcome: outcome_summary,
    })
}

pub fn write_prep(out: &mut RunDir, prepared: &Prepared) -> anyhow::Result<()> {
    let csv = out.root().join("prep").join("prepared.csv");
    std::fs::create_dir_all(csv.parent().expect("has parent"))
        .context("cannot create prep directory")?;
    losstack::data::write_csv(&prepared.table, &csv)?;
    let bytes = std::fs::read(&csv).map_err(|e| losstack::Error::io(&csv, e))?;
    out.write_bytes("prep/prepared.csv", &bytes)?;
    out.write_json("prep/schema.json", &prepared.table.specs())?;
    out.write_json("prep/plan.json", &prepared.plan)?;
    out.write_with("prep/summary.csv", |w| prepared.summary.write_csv(w))?;
    out.write_json("prep/forest_report.json", &prepared.summary.forest)?;
    out.write_json("prep/outcome.json", &prepared.outcome)?;
    Ok(())
}

fn outcome_column_name(table: &Table) -> Option<String> {
    table.outcome_column().map(|c| table.spec(c).name.clone())
}

/// The configured variable set and the table restricted to it (plus outcome).
pub fn variable_set_table(cfg: &RunConfig, table: &Table) -> anyhow::Result<(VariableSet, Table)> {
    let sets = build_variable_sets(table, &cfg.baseline_columns)?;
    let names: Vec<&str> = sets.iter().map(|s| s.name.as_str()).collect();
    let set = sets
        .iter()
        .find(|s| s.name == cfg.variable_set)
        .cloned()
        .ok_or_else(|| {
            config_error(format!(
                "unknown variable set '{}'; choose one of {}",
                cfg.variable_set,
                names.join(", ")
            ))
        })?;
    let mut columns = set.columns.clone();
    columns.extend(outcome_column_name(table));
    let restricted = table.select_columns(&columns)?;
    Ok((set, restricted))
}

fn distinct_sources(x: &EncodedMatrix) -> usize {
    let mut s: Vec<&str> = x.source_map.iter().map(String::as_str).collect();
    s.sort_unstable();
    s.dedup();
    s.len()
}

/// One line of a performance table: training and test metrics of a scorer.
#[derive(Debug, Clone, Serialize)]
pub struct PerformanceRow {
    pub name: String,
    pub n_predictors: usize,
    pub n_features: usize,
    pub train: MetricsReport,
    pub test: MetricsReport,
}

fn performance_row(
    cfg: &RunConfig,
    name: &str,
    x: &EncodedMatrix,
    train_scores: &[f64],
    test_scores: &[f64],
    prepared: &Prepared,
    index: u64,
) -> anyhow::Result<PerformanceRow> {
    let e = &cfg.evaluation;
    let seed = derive_seed(cfg.seed, "auc_ci", index);
    Ok(PerformanceRow {
        name: name.into(),
        n_predictors: distinct_sources(x),
        n_features: x.n_features(),
        train: metrics_report(
            train_scores,
            &prepared.y_train(),
            e.threshold,
            e.n_boot,
            seed,
        )?,
        test: metrics_report(test_scores, &prepared.y_test(), e.threshold, e.n_boot, seed)?,
    })
}

fn write_performance_csv<'a>(
    rows: &'a [PerformanceRow],
    first_column: &str,
) -> impl FnOnce(&mut Vec<u8>) -> losstack::Result<()> + 'a {
    let first_column = first_column.to_string();
    move |buf: &mut Vec<u8>| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            first_column.as_str(),
            "predictors",
            "features",
            "train_auc",
            "train_auc_ci_low",
            "train_auc_ci_high",
            "test_auc",
            "test_auc_ci_low",
            "test_auc_ci_high",
            "test_accuracy",
            "test_sensitivity",
            "test_specificity",
            "test_weighted_f1",
        ])?;
        for r in rows {
            w.write_record([
                r.name.clone(),
                r.n_predictors.to_string(),
                r.n_features.to_string(),
                format_f64(r.train.auc),
                format_f64(r.train.auc_ci_low),
                format_f64(r.train.auc_ci_high),
                format_f64(r.test.auc),
                format_f64(r.test.auc_ci_low),
                format_f64(r.test.auc_ci_high),
                format_f64(r.test.accuracy),
                format_f64(r.test.sensitivity),
                format_f64(r.test.specificity),
                format_f64(r.test.weighted_f1),
            ])?;
        }
        w.flush()
            .map_err(|e| losstack::Error::io("performance table", e))?;
        Ok(())
    }
}

fn logistic_scores(x: &EncodedMatrix, prepared: &Prepared) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let xtr = x.take_rows(&prepared.split.train);
    let xte = x.take_rows(&prepared.split.test);
    let model =
        LearnerParams::Logistic(Default::default()).fit(xtr.x.view(), &prepared.y_train())?;
    Ok((
        model.predict_proba(xtr.x.view())?,
        model.predict_proba(xte.x.view())?,
    ))
}

/// Logistic regression on every variable combination.
pub fn variable_set_table_report(
    cfg: &RunConfig,
    prepared: &Prepared,
    out: &mut RunDir,
) -> anyhow::Result<()> {
    let sets = build_variable_sets(&prepared.table, &cfg.baseline_columns)?;
    let mut rows = Vec::with_capacity(sets.len());
    for (k, set) in sets.iter().enumerate() {
        let x = one_hot_encode(&prepared.table, EncodingMode::DropFirst)?;
        let idx: Vec<usize> = (0..x.n_features())
            .filter(|&j| set.columns.contains(&x.source_map[j]))
            .collect();
        let x = x.select_indices(&idx);
        let (train, test) = logistic_scores(&x, prepared)?;
        rows.push(performance_row(
            cfg,
            &set.name,
            &x,
            &train,
            &test,
            prepared,
            100 + k as u64,
        )?);
    }
    out.write_with(
        "select/variable_sets.csv",
        write_performance_csv(&rows, "variable_set"),
    )?;
    Ok(())
}

fn benchmark_config(cfg: &RunConfig, prepared: &Prepared) -> BenchmarkConfig {
    let s = &cfg.selection;
    BenchmarkConfig {
        train_fraction: cfg.evaluation.train_fraction,
        seed: prepared.outcome.split_seed,
        vif_threshold: s.vif_threshold,
        spearman_threshold: s.spearman_threshold,
        alpha: s.alpha,
        hybrid: s.hybrid,
        ..BenchmarkConfig::default()
    }
}

pub struct Selection {
    pub x: EncodedMatrix,
    pub encoding: EncodingMode,
}

pub fn run_selection(
    cfg: &RunConfig,
    set_table: &Table,
    prepared: &Prepared,
    out: &mut RunDir,
) -> anyhow::Result<Selection> {
    let config = benchmark_config(cfg, prepared);
    if cfg.selection.benchmark {
        let start = Instant::now();
        let mut table =
            benchmark_selection(set_table, &prepared.labels, &SelectionMethod::ALL, &config)?;
        if cfg.reproducible {
            table.zero_timings();
        }
        out.write_with("select/benchmark.csv", |w| table.write_csv(w))?;
        out.write_json("select/benchmark.json", &table)?;
        out.timing("selection_benchmark", seconds(start, cfg));
    }
    let Some(method) = cfg.selection.method else {
        return Ok(Selection {
            x: one_hot_encode(set_table, EncodingMode::DropFirst)?,
            encoding: EncodingMode::DropFirst,
        });
    };
    let (mut report, x) = select_features(
        set_table,
        &prepared.labels,
        &prepared.split.train,
        method,
        &config,
    )?;
    if cfg.reproducible {
        report.runtime_seconds = 0.0;
    }
    out.write_with("select/selection.csv", |w| report.write_csv(w))?;
    out.write_json("select/selection.json", &report)?;
    let encoding = if method == SelectionMethod::Spearman {
        EncodingMode::Full
    } else {
        EncodingMode::DropFirst
    };
    Ok(Selection { x, encoding })
}

fn write_search(out: &mut RunDir, result: &SearchResult) -> anyhow::Result<()> {
    let rel = format!("model/search_{}.csv", result.kind.as_str());
    out.write_with(&rel, |buf| {
        let names: Vec<&String> = result
            .trials
            .first()
            .map(|t| t.values.keys().collect())
            .unwrap_or_default();
        let mut w = csv::Writer::from_writer(buf);
        let mut header = vec!["trial".to_string()];
        header.extend(names.iter().map(|n| n.to_string()));
        header.push("mean_auc".into());
        header.push("best".into());
        w.write_record(&header)?;
        for t in &result.trials {
            let mut rec = vec![t.index.to_string()];
            rec.extend(names.iter().map(|n| format_f64(t.values[*n])));
            rec.push(format_f64(t.mean_auc));
            rec.push((t.index == result.best_index).to_string());
            w.write_record(&rec)?;
        }
        w.flush()
            .map_err(|e| losstack::Error::io("search table", e))?;
        Ok(())
    })?;
    Ok(())
}

fn tuned_params(
    cfg: &RunConfig,
    kind: LearnerKind,
    xtr: ArrayView2<f64>,
    ytr: &[u8],
    out: &mut RunDir,
) -> anyhow::Result<LearnerParams> {
    if cfg.search.n_iter == 0 {
        return Ok(kind.default_params());
    }
    let seed = derive_seed(cfg.seed, "search", kind as u64);
    out.seed(&format!("search_{}", kind.as_str()), seed);
    let mut space = SearchSpace::default_for(kind, seed);
    space.n_iter = cfg.search.n_iter;
    space.k_folds = cfg.search.k_folds;
    let result = random_search(kind, &space, xtr, ytr)?;
    write_search(out, &result)?;
    Ok(result.best_params)
}

pub fn train_model(
    cfg: &RunConfig,
    selection: &Selection,
    prepared: &Prepared,
    out: &mut RunDir,
) -> anyhow::Result<ModelBundle> {
    let start = Instant::now();
    let xtr = selection.x.take_rows(&prepared.split.train);
    let ytr = prepared.y_train();
    let model = match cfg.model.learner() {
        Some(kind) => {
            let params = tuned_params(cfg, kind, xtr.x.view(), &ytr, out)?;
            let seed = derive_seed(cfg.seed, "fit", kind as u64);
            out.seed("fit", seed);
            BundledModel::Single(params.with_seed(seed).fit(xtr.x.view(), &ytr)?)
        }
        None => {
            let base = LearnerKind::BASE
                .iter()
                .map(|&k| tuned_params(cfg, k, xtr.x.view(), &ytr, out))
                .collect::<anyhow::Result<Vec<_>>>()?;
            let seed = derive_seed(cfg.seed, "stacking", 0);
            out.seed("stacking", seed);
            BundledModel::Stacking(fit_stacking(
                xtr.x.view(),
                &ytr,
                &StackingConfig::new(base, seed),
            )?)
        }
    };
    let bundle = ModelBundle::new(
        cfg.model.as_str(),
        &selection.x,
        selection.encoding,
        cfg.seed,
        model,
    );
    out.write_json("model/bundle.json", &bundle)?;
    out.timing("train", seconds(start, cfg));
    Ok(bundle)
}

/// Wraps a stacking configuration for repeated cross-validation.
struct StackingFit(StackingConfig);

impl FitPredict for StackingFit {
    fn fit_predict(
        &self,
        x_train: ArrayView2<f64>,
        y_train: &[u8],
        x_test: ArrayView2<f64>,
        seed: u64,
    ) -> losstack::Result<Vec<f64>> {
        let config = StackingConfig {
            seed,
            ..self.0.clone()
        };
        fit_stacking(x_train, y_train, &config)?.predict_proba(x_test)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub model_a: String,
    pub model_b: String,
    pub alternative: String,
    #[serde(flatten)]
    pub result: ComparisonResult,
}

pub fn compare_scores(
    cfg: &RunConfig,
    (name_a, scores_a): (&str, &[f64]),
    (name_b, scores_b): (&str, &[f64]),
    y_test: &[u8],
) -> anyhow::Result<Comparison> {
    let result = bootstrap_compare(
        scores_a,
        scores_b,
        y_test,
        cfg.evaluation.n_boot,
        derive_seed(cfg.seed, "compare", 0),
    )?;
    Ok(Comparison {
        model_a: name_a.into(),
        model_b: name_b.into(),
        alternative: format!("auc({name_a}) > auc({name_b})"),
        result,
    })
}

#[derive(Debug, Clone, Serialize)]
struct EvalSummary<'a> {
    model: &'a str,
    threshold: f64,
    train: &'a MetricsReport,
    test: &'a MetricsReport,
    epv: Epv,
    n_predictors: usize,
    n_features: usize,
}

pub fn evaluate(
    cfg: &RunConfig,
    bundle: &ModelBundle,
    x: &EncodedMatrix,
    prepared: &Prepared,
    out: &mut RunDir,
) -> anyhow::Result<()> {
    let start = Instant::now();
    let xtr = x.take_rows(&prepared.split.train);
    let xte = x.take_rows(&prepared.split.test);
    let y_test = prepared.y_test();
    let choice: ModelChoice = bundle.name.parse()?;
    let train_scores = bundle.predict(xtr.x.view())?;
    let test_scores = bundle.predict(xte.x.view())?;

    let mut rows = Vec::new();
    let (lr_train, lr_test) = logistic_scores(x, prepared)?;
    if choice != ModelChoice::Logistic {
        rows.push(performance_row(
            cfg, "logistic", x, &lr_train, &lr_test, prepared, 1,
        )?);
    }
    if let BundledModel::Stacking(stacked) = &bundle.model {
        for (k, (m, p)) in stacked
            .base_models
            .iter()
            .zip(&stacked.base_params)
            .enumerate()
        {
            let tr = m.predict_proba(xtr.x.view())?;
            let te = m.predict_proba(xte.x.view())?;
            rows.push(performance_row(
                cfg,
                p.kind().as_str(),
                x,
                &tr,
                &te,
                prepared,
                2 + k as u64,
            )?);
        }
    }
    let main = performance_row(
        cfg,
        &bundle.name,
        x,
        &train_scores,
        &test_scores,
        prepared,
        0,
    )?;
    rows.push(main.clone());
    out.write_with(
        "eval/model_performance.csv",
        write_performance_csv(&rows, "model"),
    )?;

    let ratio = epv(
        prepared.outcome.n_train,
        prepared.outcome.n_train_events,
        main.n_predictors,
    )?;
    out.write_json(
        "eval/metrics.json",
        &EvalSummary {
            model: &bundle.name,
            threshold: cfg.evaluation.threshold,
            train: &main.train,
            test: &main.test,
            epv: ratio,
            n_predictors: main.n_predictors,
            n_features: main.n_features,
        },
    )?;

    let curve = calibration_curve(&test_scores, &y_test, cfg.evaluation.calibration_bins);
    out.write_with("eval/calibration.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "bin",
            "lower",
            "upper",
            "mean_predicted",
            "observed_fraction",
            "count",
        ])?;
        for b in &curve.bins {
            w.write_record([
                b.index.to_string(),
                format_f64(b.lower),
                format_f64(b.upper),
                format_f64(b.mean_predicted),
                format_f64(b.observed_fraction),
                b.count.to_string(),
            ])?;
        }
        w.flush()
            .map_err(|e| losstack::Error::io("calibration table", e))?;
        Ok(())
    })?;
    let roc = roc_curve(&test_scores, &y_test)?;
    out.write_with("eval/roc.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["fpr", "tpr", "threshold"])?;
        for (f, t, s) in &roc {
            w.write_record([format_f64(*f), format_f64(*t), format_f64(*s)])?;
        }
        w.flush().map_err(|e| losstack::Error::io("roc table", e))?;
        Ok(())
    })?;
    let ts = timestamp(cfg);
    let title = format!("{} (test set)", bundle.name);
    out.write_bytes(
        "plots/roc.svg",
        svg::roc_svg(
            &roc,
            main.test.auc,
            &format!("ROC curve: {title}"),
            ts.as_deref(),
        )
        .as_bytes(),
    )?;
    out.write_bytes(
        "plots/calibration.svg",
        svg::calibration_svg(&curve, &format!("Calibration: {title}"), ts.as_deref()).as_bytes(),
    )?;

    if cfg.evaluation.compare_with_logistic && choice != ModelChoice::Logistic {
        let c = compare_scores(
            cfg,
            (&bundle.name, &test_scores),
            ("logistic", &lr_test),
            &y_test,
        )?;
        out.write_json("eval/comparison.json", &c)?;
    }
    if cfg.evaluation.cv_repeats > 0 {
        let ytr = prepared.y_train();
        let cv_seed = derive_seed(cfg.seed, "cv", 0);
        out.seed("cv", cv_seed);
        let (k, r) = (cfg.evaluation.cv_k, cfg.evaluation.cv_repeats);
        let report = match &bundle.model {
            BundledModel::Single(_) => {
                let kind = choice.learner().unwrap_or(LearnerKind::Logistic);
                repeated_stratified_cv(&kind.default_params(), xtr.x.view(), &ytr, k, r, cv_seed)?
            }
            BundledModel::Stacking(s) => {
                let config = StackingConfig::new(s.base_params.clone(), s.oof_seed);
                repeated_stratified_cv(&StackingFit(config), xtr.x.view(), &ytr, k, r, cv_seed)?
            }
        };
        write_cv(out, &report)?;
    }
    out.timing("evaluate", seconds(start, cfg));
    Ok(())
}

fn write_cv(out: &mut RunDir, report: &CvReport) -> anyhow::Result<()> {
    out.write_with("eval/cv.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "repeat",
            "fold",
            "n_test",
            "n_events",
            "auc",
            "accuracy",
            "sensitivity",
            "specificity",
            "weighted_f1",
        ])?;
        for f in &report.folds {
            w.write_record([
                f.repeat.to_string(),
                f.fold.to_string(),
                f.n_test.to_string(),
                f.n_events.to_string(),
                format_f64(f.auc),
                format_f64(f.accuracy),
                format_f64(f.sensitivity),
                format_f64(f.specificity),
                format_f64(f.weighted_f1),
            ])?;
        }
        w.flush().map_err(|e| losstack::Error::io("cv table", e))?;
        Ok(())
    })?;
    out.write_json("eval/cv.json", report)?;
    Ok(())
}

fn association(d: Direction) -> &'static str {
    match d {
        Direction::Prolonged => "Prolonged LOS",
        Direction::Short => "Short LOS",
        Direction::Either => "Either prolonged or short LOS",
    }
}

fn write_top_predictors(
    out: &mut RunDir,
    summary: &ShapSummary,
    bundle: &ModelBundle,
    table: &Table,
    top: usize,
) -> anyhow::Result<()> {
    out.write_with("explain/top_predictors.csv", |buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record([
            "rank",
            "feature",
            "source_column",
            "category",
            "association",
            "mean_abs_shap",
            "ci_low",
            "ci_high",
        ])?;
        for f in summary.features.iter().take(top) {
            let j = bundle
                .feature_names
                .iter()
                .position(|n| *n == f.feature)
                .expect("feature of the bundle");
            let source = &bundle.source_columns[j];
            let category = table
                .column_index(source)
                .map_or("unknown", |c| table.spec(c).domain.as_str());
            w.write_record([
                f.rank.to_string(),
                f.feature.clone(),
                source.clone(),
                category.to_string(),
                association(f.direction).to_string(),
                format_f64(f.mean_abs),
                format_f64(f.ci_low),
                format_f64(f.ci_high),
            ])?;
        }
        w.flush()
            .map_err(|e| losstack::Error::io("top predictors", e))?;
        Ok(())
    })?;
    Ok(())
}

pub fn explain(
    cfg: &RunConfig,
    bundle: &ModelBundle,
    x: &EncodedMatrix,
    prepared: &Prepared,
    out: &mut RunDir,
) -> anyhow::Result<()> {
    let start = Instant::now();
    let opts = &cfg.explain;
    let xtr = x.take_rows(&prepared.split.train);
    let bg_seed = derive_seed(cfg.seed, "background", 0);
    let rows_seed = derive_seed(cfg.seed, "explain_rows", 0);
    let shap_seed = derive_seed(cfg.seed, "shap", 0);
    let summary_seed = derive_seed(cfg.seed, "shap_summary", 0);
    for (name, seed) in [
        ("background", bg_seed),
        ("explain_rows", rows_seed),
        ("shap", shap_seed),
        ("shap_summary", summary_seed),
    ] {
        out.seed(name, seed);
    }
    let background =
        select_background(xtr.x.view(), &prepared.y_train(), opts.background, bg_seed)?;
    let mut picked = stratified_sample(&prepared.y_test(), opts.rows, rows_seed)?;
    picked.sort_unstable();
    let rows: Vec<usize> = picked.iter().map(|&i| prepared.split.test[i]).collect();
    let explained = x.take_rows(&rows);
    let method = if x.n_features() <= EXACT_SHAP_FEATURES {
        ShapMethod::Exact
    } else {
        ShapMethod::Permutation
    };
    let config = ExplainConfig {
        method,
        n_permutations: opts.n_permutations,
        seed: shap_seed,
    };
    let matrix = explain_rows(
        &bundle.model,
        explained.x.view(),
        &x.feature_names,
        background.view(),
        &config,
    )?;
    let features = EncodedMatrix::from_parts(x.feature_names.clone(), explained.x.clone());
    let (summary, points) = shap_summarize(&matrix, &features, opts.n_boot, summary_seed)?;

    out.write_with("explain/shap_values.csv", |w| matrix.write_csv(w))?;
    out.write_with("explain/shap_summary.csv", |w| summary.write_csv(w))?;
    out.write_json("explain/shap_summary.json", &summary)?;
    out.write_with("explain/beeswarm.csv", |w| {
        losstack::explain::write_beeswarm_csv(&points, w)
    })?;
    write_top_predictors(out, &summary, bundle, &prepared.table, opts.top)?;
    let ts = timestamp(cfg);
    out.write_bytes(
        "plots/beeswarm.svg",
        svg::beeswarm_svg(
            &points,
            opts.top,
            &format!("SHAP summary: {} (top {})", bundle.name, opts.top),
            ts.as_deref(),
        )
        .as_bytes(),
    )?;
    out.timing("explain", seconds(start, cfg));
    Ok(())
}

/// Scores of a bundle on the test rows of `prepared`.
pub fn test_scores(bundle: &ModelBundle, prepared: &Prepared) -> anyhow::Result<Vec<f64>> {
    let x = bundle.design(&prepared.table)?;
    Ok(bundle.predict(x.take_rows(&prepared.split.test).x.view())?)
}
