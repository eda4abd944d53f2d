use proptest::collection::vec;
use proptest::prelude::*;

use herdwatch::dataset::{stratified_split, SplitRatios};
use herdwatch::explain::{ks_statistic, shapley_exact, FnPredictor};
use herdwatch::features::{window_statistics, FeatureTable, RowMeta};
use herdwatch::models::{binary_auc, classification_metrics, minkowski_distance, stratified_kfold};
use herdwatch::signal::{dwt_decompose, dwt_reconstruct, savitzky_golay, shannon_entropy, signal_energy, Wavelet};

fn finite() -> impl Strategy<Value = f64> {
    -100.0..100.0f64
}

fn labelled_table(labels: &[usize]) -> FeatureTable {
    let rows = labels.iter().enumerate().map(|(i, _)| vec![i as f64]).collect();
    let meta = labels
        .iter()
        .enumerate()
        .map(|(i, l)| RowMeta {
            device_id: "d".into(),
            timestamp_max: i as i64,
            label: Some(["STN", "REL", "RUS", "ETC"][*l].to_string()),
            degenerate: false,
        })
        .collect();
    FeatureTable::new(vec!["x".into()], rows, meta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ks_is_symmetric_and_bounded(a in vec(finite(), 1..60), b in vec(finite(), 1..60)) {
        let d = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
        prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn ks_is_invariant_under_monotone_maps(a in vec(finite(), 1..40), b in vec(finite(), 1..40)) {
        let f = |v: &[f64]| v.iter().map(|x| 3.0 * x + 7.0).collect::<Vec<_>>();
        prop_assert_eq!(ks_statistic(&a, &b).unwrap(), ks_statistic(&f(&a), &f(&b)).unwrap());
    }

    #[test]
    fn dwt_round_trips(x in vec(finite(), 8..200), levels in 1usize..=3, db4 in any::<bool>()) {
        let w = if db4 { Wavelet::Db4 } else { Wavelet::Haar };
        let c = dwt_decompose(&x, levels, w).unwrap();
        let r = dwt_reconstruct(&c).unwrap();
        prop_assert_eq!(r.len(), x.len());
        for (a, b) in x.iter().zip(&r) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn savgol_is_linear(x in vec(finite(), 11..80), y_shift in finite(), k in -3.0..3.0f64) {
        let y: Vec<f64> = x.iter().map(|v| v * 0.5 + y_shift).collect();
        let sx = savitzky_golay(&x, 11, 3).unwrap();
        let sy = savitzky_golay(&y, 11, 3).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + k * b).collect();
        let sc = savitzky_golay(&combo, 11, 3).unwrap();
        for i in 0..x.len() {
            prop_assert!((sc[i] - (sx[i] + k * sy[i])).abs() <= 1e-8);
        }
    }

    #[test]
    fn entropy_bounded_by_log_bins(x in vec(finite(), 1..100), bins in 1usize..20) {
        let h = shannon_entropy(&x, bins).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (bins as f64).ln() + 1e-12);
    }

    #[test]
    fn energy_scales_quadratically(x in vec(finite(), 1..100), c in -5.0..5.0f64) {
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let e = signal_energy(&x).unwrap();
        prop_assert!((signal_energy(&scaled).unwrap() - c * c * e).abs() <= 1e-12 * (1.0 + c * c * e));
    }

    #[test]
    fn window_stats_are_ordered(x in vec(finite(), 2..100)) {
        let s = window_statistics(&x).unwrap();
        prop_assert!(s.min <= s.quan_25 && s.quan_25 <= s.median && s.median <= s.quan_75 && s.quan_75 <= s.max);
        prop_assert_eq!(s.median, s.quan_50);
        prop_assert!(s.var >= 0.0 && (s.std * s.std - s.var).abs() <= 1e-9 * (1.0 + s.var));
        prop_assert!(s.mad <= s.std + 1e-12);
    }

    #[test]
    fn minkowski_is_a_metric(a in vec(finite(), 5), b in vec(finite(), 5), c in vec(finite(), 5), p in 1.0..4.0f64) {
        let d = |x: &[f64], y: &[f64]| minkowski_distance(x, y, p);
        prop_assert_eq!(d(&a, &a), 0.0);
        prop_assert!((d(&a, &b) - d(&b, &a)).abs() <= 1e-12);
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
    }

    #[test]
    fn auc_flips_under_negation(scores in vec(0.0..1.0f64, 4..60), seed in any::<u64>()) {
        let pos: Vec<bool> = (0..scores.len()).map(|i| (seed >> (i % 64)) & 1 == 1 || i == 0).collect();
        prop_assume!(pos.iter().any(|p| !p));
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let a = binary_auc(&scores, &pos).unwrap();
        prop_assert!((a + binary_auc(&neg, &pos).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn metrics_are_probabilities(truth in vec(0usize..4, 1..80), pred in vec(0usize..4, 80)) {
        let pred = &pred[..truth.len()];
        let m = classification_metrics(&truth, pred, 4).unwrap();
        for v in [m.accuracy, m.precision_macro, m.recall_macro, m.f1_macro] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let total: usize = m.confusion.iter().flatten().sum();
        prop_assert_eq!(total, truth.len());
    }

    #[test]
    fn split_partitions_rows(labels in vec(0usize..4, 40..200), seed in any::<u64>()) {
        let mut labels = labels;
        for c in 0..4 {
            labels.extend(std::iter::repeat_n(c, 3));
        }
        let t = labelled_table(&labels);
        let s = stratified_split(&t, SplitRatios::default(), seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        prop_assert_eq!(s.clone(), stratified_split(&t, SplitRatios::default(), seed).unwrap());
    }

    #[test]
    fn kfold_covers_each_row_once(labels in vec(0usize..3, 30..120), k in 2usize..6, seed in any::<u64>()) {
        let mut labels = labels;
        for c in 0..3 {
            labels.extend(std::iter::repeat_n(c, k));
        }
        let folds = stratified_kfold(&labels, 3, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = vec![0; labels.len()];
        for f in &folds {
            for &i in f {
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn shapley_efficiency_on_random_linear_models(
        w in vec(-3.0..3.0f64, 5),
        x in vec(-2.0..2.0f64, 5),
        bg in vec(vec(-2.0..2.0f64, 5), 1..4),
    ) {
        let f = |r: &[f64]| r.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + (r[0] * r[1]).tanh();
        let m = FnPredictor { n_features: 5, f };
        let phi = shapley_exact(&m, &x, &bg, 0, 20).unwrap();
        prop_assert!((phi.total() - f(&x)).abs() <= 1e-9);
    }
}
