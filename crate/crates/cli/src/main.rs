mod bundle;
mod config;
mod output;
mod stages;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use losstack::featsel::SelectionMethod;
use losstack::ErrorCategory;

use crate::bundle::ModelBundle;
use crate::config::{config_error, ConfigError, ModelChoice, RunConfig};
use crate::output::RunDir;

#[derive(Debug, Parser)]
#[command(
    name = "losstack",
    version,
    about = "Explainable stacking ensemble for prolonged length of stay"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root (default `out`).
    #[arg(long, global = true, env = "LOSSTACK_OUT")]
    out: Option<PathBuf>,
    /// Name of the run directory under the output root.
    #[arg(long, global = true)]
    run_id: Option<String>,
    /// Zero timings and omit timestamps so artifacts are byte-stable.
    #[arg(long, global = true)]
    reproducible: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "LOSSTACK_THREADS")]
    threads: Option<usize>,
    /// Built-in synthetic cohort (`ischaemic-like`, `haemorrhagic-like`, ...).
    #[arg(long, global = true)]
    spec: Option<String>,
    /// Row count override for the synthetic cohort.
    #[arg(long, global = true)]
    rows: Option<usize>,
    /// Cohort CSV.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Column schema JSON for `--data`.
    #[arg(long, global = true)]
    schema: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Selection method (`vif`, `spearman`, `univariate`, `hybrid`) or `none`.
    #[arg(long)]
    select: Option<String>,
    /// `logistic`, `random_forest`, `gbt_levelwise`, `gbt_leafwise`, `gbt_oblivious` or `stacking`.
    #[arg(long)]
    model: Option<ModelChoice>,
    /// Domain combination, e.g. `all` or `patient+clinical`.
    #[arg(long)]
    variable_set: Option<String>,
    /// Random-search configurations per learner; 0 keeps defaults.
    #[arg(long)]
    n_iter: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort with its ground truth.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Dichotomize the outcome, split and impute.
    Prep {
        #[command(flatten)]
        common: Common,
    },
    /// Variable-set table, selection benchmark and the chosen selection.
    Select {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Fit the configured model and write a bundle.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Test-set metrics, calibration and ROC of a bundle.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Model bundle (default: the run's `model/bundle.json`).
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// One-sided bootstrap test that `--bundle` has a higher test AUC than `--against`.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        against: PathBuf,
    },
    /// SHAP attributions and summary of a bundle.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        bundle: Option<PathBuf>,
    },
    /// Every stage end to end.
    Pipeline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelArgs,
    },
}

fn resolve(common: &Common, model: Option<&ModelArgs>) -> anyhow::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = &common.out {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = &common.run_id {
        cfg.run_id = Some(v.clone());
    }
    cfg.reproducible |= common.reproducible;
    if common.spec.is_some() || common.data.is_some() || common.schema.is_some() {
        cfg.input.spec = common.spec.clone();
        cfg.input.data = common.data.clone();
        cfg.input.schema = common.schema.clone();
    }
    if let Some(v) = common.rows {
        cfg.input.rows = Some(v);
    }
    if let Some(m) = model {
        if let Some(s) = &m.select {
            cfg.selection.method =
                match s.as_str() {
                    "none" => None,
                    other => Some(other.parse::<SelectionMethod>().map_err(|_| {
                        config_error(format!("unknown selection method '{other}'"))
                    })?),
                };
        }
        if let Some(v) = m.model {
            cfg.model = v;
        }
        if let Some(v) = &m.variable_set {
            cfg.variable_set = v.clone();
        }
        if let Some(v) = m.n_iter {
            cfg.search.n_iter = v;
        }
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(config_error("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| config_error(format!("cannot configure thread pool: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bundle_path(cfg: &RunConfig, given: Option<PathBuf>) -> PathBuf {
    given.unwrap_or_else(|| {
        cfg.output_dir
            .join(cfg.run_id())
            .join("model")
            .join("bundle.json")
    })
}

fn file_stem(path: &std::path::Path) -> String {
    path.file_stem()
        .map_or_else(|| "bundle".into(), |s| s.to_string_lossy().into_owned())
}

fn run(command: Command) -> anyhow::Result<PathBuf> {
    match command {
        Command::Synth { common } => {
            let cfg = resolve(&common, None)?;
            if cfg.input.spec.is_none() {
                return Err(config_error("synth needs --spec"));
            }
            let mut out = RunDir::open(&cfg, "synth", false)?;
            let input = stages::load_input(&cfg, &mut out)?;
            stages::write_input(&mut out, &input)?;
            out.finish()
        }
        Command::Prep { common } => {
            let cfg = resolve(&common, None)?;
            let mut out = RunDir::open(&cfg, "prep", false)?;
            let input = stages::load_input(&cfg, &mut out)?;
            let prepared = stages::prepare_input(&cfg, &input.table, &mut out)?;
            stages::write_prep(&mut out, &prepared)?;
            out.finish()
        }
        Command::Select { common, model } => {
            let cfg = resolve(&common, Some(&model))?;
            let mut out = RunDir::open(&cfg, "select", false)?;
            let input = stages::load_input(&cfg, &mut out)?;
            let prepared = stages::prepare_input(&cfg, &input.table, &mut out)?;
            stages::variable_set_table_report(&cfg, &prepared, &mut out)?;
            let (_, set_table) = stages::variable_set_table(&cfg, &prepared.table)?;
            stages::run_selection(&cfg, &set_table, &prepared, &mut out)?;
            out.finish()
        }
        Command::Train { common, model } => {
            let mut cfg = resolve(&common, Some(&model))?;
            cfg.selection.benchmark = false;
            let mut out = RunDir::open(&cfg, "train", false)?;
            let input = stages::load_input(&cfg, &mut out)?;
            let prepared = stages::prepare_input(&cfg, &input.table, &mut out)?;
            let (_, set_table) = stages::variable_set_table(&cfg, &prepared.table)?;
            let selection = stages::run_selection(&cfg, &set_table, &prepared, &mut out)?;
            stages::train_model(&cfg, &selection, &prepared, &mut out)?;
            out.finish()
        }
        Command::Evaluate { common, bundle } => {
            let cfg = resolve(&common, None)?;
            let bundle = ModelBundle::load(&bundle_path(&cfg, bundle))?;
            let mut out = RunDir::open(&cfg, "evaluate", false)?;
            let input = stages::load_input(&cfg, &mut out)?;
            let prepared = stages::prepare_input(&cfg, &input.table, &mut out)?;
            let x = bundle.design(&prepared.table)?;
            stages::evaluate(&cfg, &bundle, &x, &prepared, &mut out)?;
            out.finish()
        }
        Command::Compare {
            common,
            bundle,
            against,
        } => {
            let cfg = resolve(&common, None)?;
            let a = ModelBundle::load(&bundle)?;
            let b = ModelBundle::load(&against)?;
            let mut out = RunDir::open(&cfg, "compare", false)?;
            let input = stages::load_input(&cfg, &mut out)?;
            let prepared = stages::prepare_input(&cfg, &input.table, &mut out)?;
            let (name_a, name_b) = (file_stem(&bundle), file_stem(&against));
            let sa = stages::test_scores(&a, &prepared)?;
            let sb = stages::test_scores(&b, &prepared)?;
            let c =
                stages::compare_scores(&cfg, (&a.name, &sa), (&b.name, &sb), &prepared.y_test())?;
            out.write_json(&format!("compare/{name_a}_vs_{name_b}.json"), &c)?;
            println!("{}", serde_json::to_string_pretty(&c)?);
            out.finish()
        }
        Command::Explain { common, bundle } => {
            let cfg = resolve(&common, None)?;
            let bundle = ModelBundle::load(&bundle_path(&cfg, bundle))?;
            let mut out = RunDir::open(&cfg, "explain", false)?;
            let input = stages::load_input(&cfg, &mut out)?;
            let prepared = stages::prepare_input(&cfg, &input.table, &mut out)?;
            let x = bundle.design(&prepared.table)?;
            stages::explain(&cfg, &bundle, &x, &prepared, &mut out)?;
            out.finish()
        }
        Command::Pipeline { common, model } => {
            let cfg = resolve(&common, Some(&model))?;
            let mut out = RunDir::open(&cfg, "pipeline", true)?;
            let input = stages::load_input(&cfg, &mut out)?;
            stages::write_input(&mut out, &input)?;
            let prepared = stages::prepare_input(&cfg, &input.table, &mut out)?;
            stages::write_prep(&mut out, &prepared)?;
            stages::variable_set_table_report(&cfg, &prepared, &mut out)?;
            let (_, set_table) = stages::variable_set_table(&cfg, &prepared.table)?;
            let selection = stages::run_selection(&cfg, &set_table, &prepared, &mut out)?;
            let bundle = stages::train_model(&cfg, &selection, &prepared, &mut out)?;
            stages::evaluate(&cfg, &bundle, &selection.x, &prepared, &mut out)?;
            if cfg.explain.enabled {
                stages::explain(&cfg, &bundle, &selection.x, &prepared, &mut out)?;
            }
            out.finish()
        }
    }
}

fn exit_code(err: &anyhow::Error) -> (u8, &'static str) {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return (2, "config");
        }
        if let Some(e) = cause.downcast_ref::<losstack::Error>() {
            return match e.category() {
                ErrorCategory::Config => (2, "config"),
                ErrorCategory::Data => (3, "data"),
                ErrorCategory::Numeric => (4, "numeric"),
            };
        }
    }
    (3, "data")
}

fn error_path(err: &anyhow::Error) -> Option<String> {
    err.chain()
        .find_map(|cause| match cause.downcast_ref::<losstack::Error>() {
            Some(losstack::Error::Io { path, .. }) => Some(path.display().to_string()),
            _ => None,
        })
}

fn report(err: &anyhow::Error) -> u8 {
    let (code, category) = exit_code(err);
    let mut body = serde_json::json!({
        "exit_code": code,
        "category": category,
        "message": err.to_string(),
        "chain": err.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
    });
    if let Some(path) = error_path(err) {
        body["path"] = path.into();
    }
    eprintln!("{}", serde_json::json!({ "error": body }));
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(err) => ExitCode::from(report(&err)),
    }
}
