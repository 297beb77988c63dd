use losstack::data::{ColumnKind, ColumnSpec, ColumnValues, Domain, Table};
use losstack::prep::{
    impute_forest, impute_simple, missing_action, plan_prep, prepare, ColumnAction,
    ForestImputeParams, RebalanceAction,
};
use losstack::synth::{generate, spec_by_name};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn ischaemic_like_prep() {
    let (table, _) = generate(&spec_by_name("ischaemic-like").unwrap()).unwrap();
    let plan = plan_prep(&table);
    assert_eq!(plan.columns.len(), 89);
    let col = |n: &str| plan.column(n).unwrap();
    assert_eq!(col("icu_access").rebalance, RebalanceAction::DropDominant);
    assert_eq!(col("hba1c").action, ColumnAction::DropMissing);
    assert_eq!(col("glucose").action, ColumnAction::ImputeForest);
    assert_eq!(
        col("atrial_fibrillation").action,
        ColumnAction::ImputeForest
    );
    assert_eq!(col("cholesterol").action, ColumnAction::ImputeForest);
    assert_eq!(col("bmi").action, ColumnAction::ImputeMedian);
    let beds = col("hospital_beds");
    assert_eq!(beds.rebalance, RebalanceAction::MergeRare);
    assert_eq!(
        beds.merged_categories,
        ["<99", "100-199", "200-399", ">400"]
    );
    assert_eq!(
        col("discharge_destination").merge_map.get("Other").unwrap(),
        "Home"
    );

    let params = ForestImputeParams {
        n_trees: 20,
        max_iter: 3,
        seed: 5,
        ..ForestImputeParams::default()
    };
    let (out, summary) = prepare(&table, &plan, &params).unwrap();
    assert_eq!(out.total_missing(), 0);
    assert_eq!(out.predictor_columns().len(), 87);
    assert!(plan_prep(&out).is_noop(), "prep is idempotent");
    assert_eq!(summary.rows.len(), 89);

    // observed cells untouched
    for name in ["glucose", "cholesterol", "bmi"] {
        let before = table
            .continuous(table.require_column(name).unwrap())
            .unwrap();
        let after = out.continuous(out.require_column(name).unwrap()).unwrap();
        for (b, a) in before.iter().zip(after) {
            if !b.is_nan() {
                assert_eq!(b.to_bits(), a.to_bits());
            }
        }
    }
    let mut buf = Vec::new();
    summary.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(
        text.contains("hospital_beds,categorical,0.0,keep,merge_rare_2,50-99 -> <99; <50 -> <99"),
        "{text}"
    );
}

fn linear_table(n: usize, seed: u64) -> (Table, Vec<f64>, Vec<usize>) {
    let mut rng = losstack::rng::rng_from_seed(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let x1: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let x2: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let truth: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 2.0 * a - b).collect();
    let mut x3 = truth.clone();
    let masked: Vec<usize> = rand::seq::index::sample(&mut rng, n, n / 10).into_vec();
    for &r in &masked {
        x3[r] = f64::NAN;
    }
    let noise: Vec<u32> = (0..n).map(|_| rng.random_range(0..3)).collect();
    let t = Table::new(
        vec![
            ColumnSpec::continuous("x1", Domain::Clinical),
            ColumnSpec::continuous("x2", Domain::Clinical),
            ColumnSpec::continuous("x3", Domain::Clinical),
            ColumnSpec::categorical("g", Domain::System, ["a", "b", "c"]),
        ],
        vec![
            ColumnValues::Continuous(x1),
            ColumnValues::Continuous(x2),
            ColumnValues::Continuous(x3),
            ColumnValues::Categorical(noise),
        ],
    )
    .unwrap();
    (t, truth, masked)
}

fn rmse(table: &Table, truth: &[f64], rows: &[usize]) -> f64 {
    let v = table.continuous(2).unwrap();
    (rows.iter().map(|&r| (v[r] - truth[r]).powi(2)).sum::<f64>() / rows.len() as f64).sqrt()
}

#[test]
fn forest_beats_median_on_linear_column() {
    for seed in 0..3 {
        let (t, truth, masked) = linear_table(600, seed);
        let mut plan = plan_prep(&t);
        assert_eq!(plan.columns[2].action, ColumnAction::ImputeForest);
        let params = ForestImputeParams {
            seed,
            ..ForestImputeParams::default()
        };
        let forest = impute_forest(&t, &plan, &params).unwrap();
        plan.columns[2].action = ColumnAction::ImputeMedian;
        let median = impute_simple(&t, &plan).unwrap();
        let (f, m) = (
            rmse(&forest, &truth, &masked),
            rmse(&median, &truth, &masked),
        );
        assert!(f < m, "seed {seed}: forest {f} median {m}");
        assert_eq!(forest.continuous(0).unwrap(), t.continuous(0).unwrap());
        let again = impute_forest(&t, &plan_prep(&t), &params).unwrap();
        let first = forest.continuous(2).unwrap();
        assert!(again
            .continuous(2)
            .unwrap()
            .iter()
            .zip(first)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn nothing_to_impute_is_identity() {
    let (t, _, _) = linear_table(100, 1);
    let t = t.select_columns(&["x1", "x2", "g"]).unwrap();
    let plan = plan_prep(&t);
    assert!(plan.is_noop());
    let out = impute_forest(&t, &plan, &ForestImputeParams::default()).unwrap();
    assert_eq!(out.continuous(0).unwrap(), t.continuous(0).unwrap());
}

#[test]
fn forest_needs_complete_predictors() {
    let t = Table::new(
        vec![ColumnSpec::continuous("only", Domain::Clinical)],
        vec![ColumnValues::Continuous(
            (0..50)
                .map(|i| if i % 10 == 0 { f64::NAN } else { f64::from(i) })
                .collect(),
        )],
    )
    .unwrap();
    let plan = plan_prep(&t);
    assert!(matches!(
        impute_forest(&t, &plan, &ForestImputeParams::default()),
        Err(losstack::Error::NoPredictorsAvailable(_))
    ));
}

#[test]
fn training_rows_drive_fill_statistics() {
    let t = Table::new(
        vec![
            ColumnSpec::continuous("a", Domain::Clinical),
            ColumnSpec::continuous("b", Domain::Clinical),
        ],
        vec![
            ColumnValues::Continuous(
                std::iter::once(f64::NAN)
                    .chain((1..100).map(f64::from))
                    .collect(),
            ),
            ColumnValues::Continuous((0..100).map(f64::from).collect()),
        ],
    )
    .unwrap();
    let plan = plan_prep(&t);
    let params = ForestImputeParams {
        reference_rows: Some((0..10).collect()),
        ..ForestImputeParams::default()
    };
    let (out, summary) = prepare(&t, &plan, &params).unwrap();
    assert_eq!(out.continuous(0).unwrap()[0], 5.0);
    assert_eq!(summary.rows[0].detail, "5.0");
}

proptest! {
    #[test]
    fn threshold_table_is_exhaustive(n in 1usize..100_000, frac in 0.0f64..1.0) {
        let m = ((n as f64) * frac) as usize;
        let f = m as f64 / n as f64;
        let a = missing_action(ColumnKind::Continuous, m, n);
        let expected = if m == 0 {
            ColumnAction::Keep
        } else if f > 0.15 + 1e-12 {
            ColumnAction::DropMissing
        } else if f < 0.02 - 1e-12 {
            ColumnAction::ImputeMedian
        } else if (0.02 + 1e-12..=0.15 - 1e-12).contains(&f) {
            ColumnAction::ImputeForest
        } else {
            a
        };
        prop_assert_eq!(a, expected);
    }
}
