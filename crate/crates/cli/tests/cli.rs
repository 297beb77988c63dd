use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn losstack(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_losstack"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn error_json(output: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().expect("error line on stderr");
    serde_json::from_str(line).expect("stderr carries error JSON")
}

fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(bytes))
}

#[test]
fn tiny_pipeline_writes_tables_plots_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = losstack(
        &["pipeline", "--spec", "tiny", "--reproducible"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let root = dir.path().join("tiny-seed42");
    for rel in [
        "prep/prepared.csv",
        "select/variable_sets.csv",
        "select/benchmark.csv",
        "select/selection.csv",
        "model/bundle.json",
        "eval/model_performance.csv",
        "eval/metrics.json",
        "eval/calibration.csv",
        "eval/comparison.json",
        "explain/shap_values.csv",
        "explain/top_predictors.csv",
    ] {
        assert!(root.join(rel).is_file(), "missing {rel}");
    }
    for svg in ["roc", "calibration", "beeswarm"] {
        let text = std::fs::read_to_string(root.join(format!("plots/{svg}.svg"))).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
        assert!(!text.contains("<metadata>"));
    }

    let perf = std::fs::read_to_string(root.join("eval/model_performance.csv")).unwrap();
    let models: Vec<&str> = perf
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        models,
        [
            "logistic",
            "random_forest",
            "gbt_levelwise",
            "gbt_leafwise",
            "gbt_oblivious",
            "stacking"
        ]
    );
    let bench = std::fs::read_to_string(root.join("select/benchmark.csv")).unwrap();
    assert!(bench.lines().nth(1).unwrap().starts_with("baseline,"));
    assert!(
        bench.contains(",0.0000,"),
        "reproducible runs zero the timings"
    );
    let top = std::fs::read_to_string(root.join("explain/top_predictors.csv")).unwrap();
    assert!(top.starts_with("rank,feature,source_column,category,association"));
    assert!(top.lines().skip(1).all(|l| l.contains(" LOS,")));

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["master_seed"], 42);
    let stage = &manifest["stages"]["pipeline"];
    assert!(stage["seeds"]["split"].is_u64());
    assert!(stage.get("timings_s").is_none());
    let artifacts = stage["artifacts"].as_object().unwrap();
    assert!(artifacts.len() >= 20);
    for (rel, record) in artifacts {
        let bytes = std::fs::read(root.join(rel)).unwrap();
        assert_eq!(
            record["sha256"].as_str().unwrap(),
            sha256_hex(&bytes),
            "{rel}"
        );
        assert_eq!(record["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
}

#[test]
fn reproducible_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "pipeline",
        "--spec",
        "tiny",
        "--seed",
        "7",
        "--reproducible",
        "--run-id",
        "same",
    ];
    assert!(losstack(&args, a.path()).status.success());
    assert!(losstack(&args, b.path()).status.success());
    let manifest = |d: &Path| -> Value {
        serde_json::from_str(&std::fs::read_to_string(d.join("same/manifest.json")).unwrap())
            .unwrap()
    };
    let (ma, mb) = (manifest(a.path()), manifest(b.path()));
    assert_eq!(ma["stages"], mb["stages"]);
    let seed_42 = tempfile::tempdir().unwrap();
    let args_42 = [
        "pipeline",
        "--spec",
        "tiny",
        "--seed",
        "42",
        "--reproducible",
        "--run-id",
        "same",
    ];
    assert!(losstack(&args_42, seed_42.path()).status.success());
    assert_ne!(manifest(seed_42.path())["stages"], ma["stages"]);
}

#[test]
fn stages_chain_through_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--spec", "tiny", "--reproducible", "--run-id", "staged"];
    let run = |cmd: &[&str]| {
        let args: Vec<&str> = cmd.iter().chain(common.iter()).copied().collect();
        let out = losstack(&args, dir.path());
        assert!(
            out.status.success(),
            "{cmd:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out
    };
    run(&["synth"]);
    run(&["prep"]);
    run(&["select", "--select", "spearman"]);
    run(&["train", "--model", "logistic", "--select", "none"]);
    run(&["evaluate"]);
    run(&["explain"]);
    let root = dir.path().join("staged");
    let bundle = root.join("model/bundle.json");
    let b = bundle.to_str().unwrap();
    let out = run(&["compare", "--bundle", b, "--against", b]);
    let printed: Value = serde_json::from_slice(
        &out.stdout[..out.stdout.iter().rposition(|&c| c == b'}').unwrap() + 1],
    )
    .unwrap();
    assert_eq!(printed["p_one_sided"], 0.5);
    assert_eq!(printed["difference"], 0.0);
    assert!(root.join("compare/bundle_vs_bundle.json").is_file());

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("manifest.json")).unwrap())
            .unwrap();
    let stages: Vec<&String> = manifest["stages"].as_object().unwrap().keys().collect();
    assert_eq!(
        stages,
        ["compare", "evaluate", "explain", "prep", "select", "synth", "train"]
    );
    let perf = std::fs::read_to_string(root.join("eval/model_performance.csv")).unwrap();
    assert_eq!(
        perf.lines().count(),
        2,
        "a logistic bundle has a single row"
    );
}

#[test]
fn data_and_schema_input_matches_the_synthetic_run() {
    let dir = tempfile::tempdir().unwrap();
    assert!(
        losstack(&["synth", "--spec", "tiny", "--run-id", "gen"], dir.path())
            .status
            .success()
    );
    let data = dir.path().join("gen/data/tiny.csv");
    let schema = dir.path().join("gen/data/tiny.schema.json");
    let args = [
        "prep",
        "--data",
        data.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--reproducible",
        "--run-id",
        "from-file",
    ];
    assert!(losstack(&args, dir.path()).status.success());
    assert!(losstack(
        &[
            "prep",
            "--spec",
            "tiny",
            "--reproducible",
            "--run-id",
            "from-spec"
        ],
        dir.path()
    )
    .status
    .success());
    let read = |id: &str| std::fs::read(dir.path().join(id).join("prep/prepared.csv")).unwrap();
    assert_eq!(read("from-file"), read("from-spec"));
}

#[test]
fn missing_schema_is_a_data_error_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = losstack(
        &[
            "prep",
            "--data",
            "nowhere.csv",
            "--schema",
            "nowhere.schema.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let err = error_json(&out);
    assert_eq!(err["error"]["exit_code"], 3);
    assert_eq!(err["error"]["category"], "data");
    assert_eq!(err["error"]["path"], "nowhere.schema.json");
}

#[test]
fn configuration_problems_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"seed": 1, "no_such_field": true}"#).unwrap();
    let out = losstack(
        &[
            "pipeline",
            "--spec",
            "tiny",
            "--config",
            config.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["category"], "config");

    let out = losstack(&["pipeline", "--spec", "no-such-spec"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("no-such-spec"));

    let out = losstack(
        &["pipeline", "--spec", "tiny", "--variable-set", "nonsense"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = losstack(
        &["pipeline", "--spec", "tiny", "--model", "perceptron"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));

    let out = losstack(&["prep"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_flags_layer_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"seed": 5, "input": {"spec": "tiny"}, "model": "gbt_oblivious", "explain": {"enabled": false}}"#,
    )
    .unwrap();
    let out = losstack(
        &[
            "pipeline",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "6",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let root = dir.path().join("tiny-seed6");
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(root.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["model"], "gbt_oblivious");
    assert_eq!(manifest["master_seed"], 6);
    assert!(!root.join("explain").exists());
    let svg = std::fs::read_to_string(root.join("plots/roc.svg")).unwrap();
    assert!(svg.contains("<metadata>generated unix "));
}

#[test]
fn unsupported_bundle_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("old.json");
    std::fs::write(&bundle, r#"{"format_version": 99}"#).unwrap();
    let out = losstack(
        &[
            "evaluate",
            "--spec",
            "tiny",
            "--bundle",
            bundle.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"]
        .as_str()
        .unwrap()
        .contains("99"));
}
