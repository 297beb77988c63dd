use losstack::eval::{
    auc, auc_ci, bootstrap_compare, calibration_curve, metrics_report, repeated_stratified_cv,
    roc_curve,
};
use losstack::learners::{LearnerKind, LearnerParams, LogisticParams};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn pair_count(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                pairs += 1.0;
                wins += if si > sj {
                    1.0
                } else if si == sj {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    wins / pairs
}

fn labelled() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..50).prop_flat_map(|n| {
        (
            proptest::collection::vec((0u8..6).prop_map(|v| f64::from(v) / 5.0), n),
            proptest::collection::vec(0u8..2, n),
        )
            .prop_filter("both classes", |(_, y)| y.contains(&0) && y.contains(&1))
    })
}

proptest! {
    #[test]
    fn auc_equals_pair_counting((scores, labels) in labelled()) {
        prop_assert_eq!(auc(&scores, &labels).unwrap(), pair_count(&scores, &labels));
    }

    #[test]
    fn roc_is_monotone_from_origin((scores, labels) in labelled()) {
        let roc = roc_curve(&scores, &labels).unwrap();
        prop_assert_eq!((roc[0].0, roc[0].1), (0.0, 0.0));
        let last = roc.last().unwrap();
        prop_assert_eq!((last.0, last.1), (1.0, 1.0));
        for w in roc.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn calibration_counts_cover_every_row(scores in proptest::collection::vec(0.0f64..=1.0, 1..200), bins in 1usize..20) {
        let labels: Vec<u8> = scores.iter().map(|&s| u8::from(s > 0.5)).collect();
        let curve = calibration_curve(&scores, &labels, bins);
        prop_assert_eq!(curve.total_count(), scores.len());
        for b in &curve.bins {
            prop_assert!(b.mean_predicted >= b.lower - 1e-12 && b.mean_predicted <= b.upper + 1e-12);
        }
    }
}

#[test]
fn interval_brackets_point_estimate() {
    let mut rng = losstack::rng::rng_from_seed(4);
    let labels: Vec<u8> = (0..300).map(|i| u8::from(i % 3 == 0)).collect();
    let scores: Vec<f64> = labels
        .iter()
        .map(|&y| f64::from(y) * 0.5 + rng.random::<f64>())
        .collect();
    let r = metrics_report(&scores, &labels, 0.5, 500, 1).unwrap();
    assert!(r.auc_ci_low <= r.auc && r.auc <= r.auc_ci_high);
    assert!(r.auc_ci_high - r.auc_ci_low < 0.2);
    for m in [r.accuracy, r.sensitivity, r.specificity, r.weighted_f1] {
        assert!((0.0..=1.0).contains(&m));
    }
    assert_eq!(
        auc_ci(&scores, &labels, 500, 0.95, 1).unwrap(),
        (r.auc_ci_low, r.auc_ci_high)
    );
}

#[test]
fn comparison_detects_a_better_scorer() {
    let mut rng = losstack::rng::rng_from_seed(5);
    let labels: Vec<u8> = (0..400).map(|i| u8::from(i % 2 == 0)).collect();
    let good: Vec<f64> = labels
        .iter()
        .map(|&y| f64::from(y) + rng.random::<f64>() * 0.8)
        .collect();
    let weak: Vec<f64> = labels
        .iter()
        .map(|&y| f64::from(y) * 0.2 + rng.random::<f64>())
        .collect();
    let r = bootstrap_compare(&good, &weak, &labels, 500, 2).unwrap();
    assert!(r.p_one_sided < 0.001);
    let same = bootstrap_compare(&good, &good, &labels, 200, 2).unwrap();
    assert_eq!(same.p_one_sided, 0.5);
}

#[test]
fn repeated_cv_is_reproducible() {
    let mut rng = losstack::rng::rng_from_seed(6);
    let x = Array2::from_shape_fn((200, 2), |_| rng.random_range(-1.0..1.0));
    let y: Vec<u8> = x
        .outer_iter()
        .map(|r| u8::from(r[0] + 0.3 * rng.random::<f64>() > 0.0))
        .collect();
    let model = LearnerParams::Logistic(LogisticParams::default());
    let a = repeated_stratified_cv(&model, x.view(), &y, 5, 2, 3).unwrap();
    let b = repeated_stratified_cv(&model, x.view(), &y, 5, 2, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.folds.len(), 10);
    assert_eq!(a.folds.iter().map(|f| f.n_test).sum::<usize>(), 400);
    assert!(a.mean_auc > 0.9);
    let forest = LearnerKind::RandomForest.default_params();
    assert!(repeated_stratified_cv(&forest, x.view(), &y, 5, 0, 3).is_err());
}
