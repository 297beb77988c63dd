use losstack::data::{dichotomize_outcome, one_hot_encode, EncodingMode, OutcomeSpec, Table};
use losstack::featsel::{
    benchmark_selection, select_hybrid, select_spearman, select_univariate, select_vif,
    BenchmarkConfig, HybridThresholds, SelectionMethod,
};
use losstack::prep::{plan_prep, prepare, ForestImputeParams};
use losstack::stats::{spearman, vif_all};
use losstack::synth::{generate, spec_by_name, GroundTruth};

fn prepared(name: &str, rows: Option<usize>, seed: u64) -> (Table, Vec<u8>, GroundTruth) {
    let mut spec = spec_by_name(name).unwrap().with_seed(seed);
    if let Some(n) = rows {
        spec = spec.with_rows(n);
    }
    let (raw, truth) = generate(&spec).unwrap();
    let params = ForestImputeParams {
        n_trees: 10,
        max_iter: 2,
        seed,
        ..ForestImputeParams::default()
    };
    let (table, _) = prepare(&raw, &plan_prep(&raw), &params).unwrap();
    let y = dichotomize_outcome(&table, &OutcomeSpec::default(), None)
        .unwrap()
        .labels;
    (table, y, truth)
}

#[test]
fn univariate_recovers_planted_signal() {
    let (table, y, truth) = prepared("ischaemic-like", Some(5000), 11);
    let r = select_univariate(&table, &y, 0.05).unwrap();
    for s in &truth.signal_columns {
        assert!(r.kept.contains(s), "signal column {s} dropped");
    }
    assert_eq!(
        r.kept.len() + r.dropped.len(),
        table.predictor_columns().len()
    );
    let again = select_univariate(&table, &y, 0.05).unwrap();
    assert!(r.same_selection(&again));
}

#[test]
fn spearman_postcondition_and_clone_cluster() {
    let (table, y, _) = prepared("ischaemic-like", Some(4000), 3);
    let x = one_hot_encode(&table, EncodingMode::Full).unwrap();
    let r = select_spearman(&x, &y, 0.7).unwrap();
    let survivors = ["nihss", "nihss_arrival", "nihss_24h"]
        .iter()
        .filter(|n| r.kept.contains(&n.to_string()))
        .count();
    assert_eq!(survivors, 1);
    let kept = x.select_features(&r.kept).unwrap();
    for a in 0..kept.n_features() {
        for b in a + 1..kept.n_features() {
            if let Ok(rho) = spearman(&kept.x.column(a).to_vec(), &kept.x.column(b).to_vec()) {
                assert!(
                    rho.abs() <= 0.7,
                    "{} vs {}",
                    kept.feature_names[a],
                    kept.feature_names[b]
                );
            }
        }
    }
    let mut names: Vec<&String> = r
        .kept
        .iter()
        .chain(r.dropped.iter().map(|d| &d.feature))
        .collect();
    names.sort();
    let mut all: Vec<&String> = x.feature_names.iter().collect();
    all.sort();
    assert_eq!(names, all);
}

#[test]
fn vif_postcondition() {
    let (table, _, _) = prepared("ischaemic-like", Some(3000), 5);
    let x = one_hot_encode(&table, EncodingMode::DropFirst).unwrap();
    let r = select_vif(&x, 5.0).unwrap();
    let kept = x.select_features(&r.kept).unwrap();
    let vifs = vif_all(&kept).unwrap();
    assert!(vifs.iter().all(|&v| v <= 5.0));
    assert!(r.dropped.iter().all(|d| d.statistic > 5.0));
    assert!(r.dropped.len() >= 2, "clone columns must go");
}

#[test]
fn hybrid_keeps_subset_and_is_deterministic() {
    let (table, y, _) = prepared("haemorrhagic-like", None, 2);
    let a = select_hybrid(&table, &y, HybridThresholds::default()).unwrap();
    let b = select_hybrid(&table, &y, HybridThresholds::default()).unwrap();
    assert!(a.same_selection(&b));
    let clones = ["metro_site", "metro_catchment", "metro_network"];
    assert_eq!(
        clones
            .iter()
            .filter(|c| a.kept.contains(&c.to_string()))
            .count(),
        1
    );
    let all: Vec<String> = table
        .predictor_columns()
        .iter()
        .map(|&c| table.spec(c).name.clone())
        .collect();
    assert!(a.kept.iter().all(|k| all.contains(k)));
    assert_eq!(a.kept.len() + a.dropped.len(), all.len());
}

#[test]
fn benchmark_table_shape() {
    let (table, y, _) = prepared("haemorrhagic-like", None, 4);
    let bench = benchmark_selection(
        &table,
        &y,
        &SelectionMethod::ALL,
        &BenchmarkConfig::default(),
    )
    .unwrap();
    assert_eq!(bench.rows.len(), 5);
    assert_eq!(bench.rows[0].method, "baseline");
    assert!(bench.rows[0].time_difference_pct.is_none());
    assert!(bench.rows[1..]
        .iter()
        .all(|r| r.time_difference_pct.is_some()));
    assert!(bench.rows.iter().all(|r| r.test_auc > 0.6));
    let mut buf = Vec::new();
    bench.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(",N.A.,"));
}
