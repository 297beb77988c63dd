use losstack::data::{
    load_csv, one_hot_encode, percentile, read_schema, stratified_split, write_csv, write_schema,
    EncodingMode,
};
use losstack::prep::{plan_prep, prepare, ForestImputeParams};
use losstack::stats::{
    chi_square_categories, correlation_ratio, cramers_v, mann_whitney_u_pair, pearson,
    point_biserial, spearman,
};
use losstack::synth::{generate, spec_by_name};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spearman_ignores_monotone_transforms(v in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3..60)) {
        let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        if let Ok(r) = spearman(&x, &y) {
            let tx: Vec<f64> = x.iter().map(|v| v.exp()).collect();
            let ty: Vec<f64> = y.iter().map(|v| v * v * v - 7.0).collect();
            prop_assert!((spearman(&tx, &ty).unwrap() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn point_biserial_is_pearson(v in proptest::collection::vec((0u8..2, -5.0f64..5.0), 3..60)) {
        let (b, c): (Vec<u8>, Vec<f64>) = v.into_iter().unzip();
        let coded: Vec<f64> = b.iter().map(|&v| f64::from(v)).collect();
        match (point_biserial(&b, &c), pearson(&coded, &c)) {
            (Ok(a), Ok(p)) => prop_assert_eq!(a.to_bits(), p.to_bits()),
            (a, p) => prop_assert_eq!(a.is_err(), p.is_err()),
        }
    }

    #[test]
    fn association_measures_in_unit_interval(v in proptest::collection::vec((0u32..3, 0u32..4, -5.0f64..5.0), 4..80)) {
        let a: Vec<u32> = v.iter().map(|t| t.0).collect();
        let b: Vec<u32> = v.iter().map(|t| t.1).collect();
        let c: Vec<f64> = v.iter().map(|t| t.2).collect();
        if let Ok(cv) = cramers_v(&a, &b) {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&cv));
        }
        if let Ok(eta) = correlation_ratio(&a, &c) {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&eta));
        }
        if let Ok(t) = chi_square_categories(&a, &b) {
            prop_assert!((0.0..=1.0).contains(&t.p_value));
        }
    }

    #[test]
    fn u_statistics_sum_to_pair_count(
        a in proptest::collection::vec(0u8..10, 1..30),
        b in proptest::collection::vec(0u8..10, 1..30),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let (ua, ub) = mann_whitney_u_pair(&a, &b).unwrap();
        prop_assert_eq!(ua + ub, (a.len() * b.len()) as f64);
    }

    #[test]
    fn percentile_is_monotone(v in proptest::collection::vec(-100.0f64..100.0, 1..50), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
        prop_assert!(percentile(&v, lo).unwrap() <= percentile(&v, hi).unwrap());
    }

    #[test]
    fn split_keeps_prevalence(seed in 0u64..10_000, n in 20usize..300, k in 2usize..7) {
        let y: Vec<u8> = (0..n).map(|i| u8::from(i % k == 0)).collect();
        let s = stratified_split(&y, 0.7, seed).unwrap();
        let rate = |rows: &[usize]| rows.iter().filter(|&&i| y[i] == 1).count() as f64 / rows.len() as f64;
        let all: Vec<usize> = (0..n).collect();
        prop_assert!((rate(&s.train) - rate(&all)).abs() <= 1.0 / s.train.len() as f64 + 1e-12);
    }
}

#[test]
fn csv_and_schema_round_trip() {
    let (table, _) = generate(&spec_by_name("tiny").unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("tiny.csv");
    let schema = dir.path().join("tiny.schema.json");
    write_csv(&table, &csv).unwrap();
    write_schema(table.specs(), &schema).unwrap();
    let specs = read_schema(&schema).unwrap();
    assert_eq!(specs, table.specs());
    let back = load_csv(&csv, &specs).unwrap();
    for c in 0..table.n_cols() {
        assert_eq!(back.missing_mask(c), table.missing_mask(c));
    }
    let again = dir.path().join("again.csv");
    write_csv(&back, &again).unwrap();
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn full_encoding_partitions_each_categorical() {
    let (raw, _) = generate(&spec_by_name("tiny").unwrap()).unwrap();
    let (table, _) = prepare(&raw, &plan_prep(&raw), &ForestImputeParams::default()).unwrap();
    let x = one_hot_encode(&table, EncodingMode::Full).unwrap();
    for &c in &table.predictor_columns() {
        let spec = table.spec(c);
        if !spec.is_categorical() {
            continue;
        }
        let cols: Vec<usize> = (0..x.n_features())
            .filter(|&j| x.source_map[j] == spec.name)
            .collect();
        assert_eq!(cols.len(), spec.categories.len());
        for r in 0..x.n_rows() {
            assert_eq!(cols.iter().map(|&j| x.x[[r, j]]).sum::<f64>(), 1.0);
        }
    }
}
