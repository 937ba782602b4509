mod common;

use citrusfx::classify::{
    knn_fit, logreg_train, nb_fit, rf_fit, ClassifierSpec, ForestParams, LogRegParams, SoftmaxObjective,
    TrainedClassifier,
};
use citrusfx::featurex::{FeatureMatrix, Rows};
use citrusfx::rng::SeededRng;
use common::*;
use proptest::prelude::*;

#[test]
fn knn_matches_exhaustive_search_on_200_points() {
    let mut rng = SeededRng::new(20);
    let x = random_matrix(&mut rng, 200, 20, 4);
    let queries = random_queries(&mut rng, 100, 20);
    for k in [1, 5, 17] {
        let model = knn_fit(&x, k).unwrap();
        let predicted = model.predict(Rows::new(&queries, 20).unwrap()).unwrap();
        for (q, p) in queries.chunks(20).zip(predicted) {
            assert_eq!(p, brute_force_knn(&x, k, q), "k = {k}");
        }
    }
}

#[test]
fn knn_with_duplicate_points_follows_tie_rules() {
    // Many exact distance ties: points on a small integer grid.
    let rows: Vec<Vec<f32>> = (0..40).map(|i| vec![(i % 4) as f32, (i / 4 % 3) as f32]).collect();
    let labels = (0..40).map(|i| (i * 7 % 3) as u32).collect();
    let x = FeatureMatrix::from_rows(&rows, labels, 3).unwrap();
    for k in 1..=12 {
        let model = knn_fit(&x, k).unwrap();
        for q in [[0.0f32, 0.0], [1.5, 1.0], [3.0, 2.0], [0.5, 0.5]] {
            assert_eq!(model.predict_row(&q), brute_force_knn(&x, k, &q), "k = {k}, q = {q:?}");
        }
    }
}

#[test]
fn knn_invariant_under_signed_permutation() {
    let mut rng = SeededRng::new(4);
    let x = random_matrix(&mut rng, 80, 6, 3);
    let queries = random_queries(&mut rng, 40, 6);
    let perm = [3usize, 0, 5, 1, 4, 2];
    let sign = [1.0f32, -1.0, 1.0, -1.0, -1.0, 1.0];
    let transform = |v: &[f32]| -> Vec<f32> {
        v.chunks(6)
            .flat_map(|r| (0..6).map(move |j| sign[j] * r[perm[j]]))
            .collect()
    };
    let xt = FeatureMatrix::new(6, 3, transform(x.values()), x.labels().to_vec(), "t").unwrap();
    let qt = transform(&queries);
    let a = knn_fit(&x, 5)
        .unwrap()
        .predict(Rows::new(&queries, 6).unwrap())
        .unwrap();
    let b = knn_fit(&xt, 5).unwrap().predict(Rows::new(&qt, 6).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn knn_k1_recovers_training_labels() {
    let mut rng = SeededRng::new(8);
    let x = random_matrix(&mut rng, 60, 4, 5);
    let model = knn_fit(&x, 1).unwrap();
    assert_eq!(model.predict(x.view()).unwrap(), x.labels());
}

#[test]
fn naive_bayes_matches_closed_form() {
    let mut rng = SeededRng::new(31);
    for trial in 0..5 {
        let x = random_matrix(&mut rng, 30 + trial * 7, 3 + trial, 3);
        let model = nb_fit(&x).unwrap();
        let queries = random_queries(&mut rng, 10, x.dim());
        let scores = model.log_posteriors(Rows::new(&queries, x.dim()).unwrap()).unwrap();
        for (q, row) in queries.chunks(x.dim()).zip(scores.chunks(3)) {
            for (got, want) in row.iter().zip(closed_form_nb(&x, q)) {
                assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
            }
        }
    }
}

#[test]
fn naive_bayes_one_dimensional_hand_example() {
    let x = FeatureMatrix::new(1, 2, vec![0.0, 0.0, 2.0, 2.0, 10.0, 10.0], vec![0, 0, 0, 0, 1, 1], "t").unwrap();
    let model = nb_fit(&x).unwrap();
    let q = [9.0f32];
    let scores = model.log_posteriors(Rows::new(&q, 1).unwrap()).unwrap();
    let oracle = closed_form_nb(&x, &q);
    for (a, b) in scores.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
    }
    // Class B's variance is only the smoothing term, so a point one unit from
    // its mean is essentially impossible under B.
    assert!(oracle[0] > oracle[1]);
    assert_eq!(model.predict(Rows::new(&q, 1).unwrap()).unwrap(), vec![0]);
    assert_eq!(model.predict(Rows::new(&[10.0], 1).unwrap()).unwrap(), vec![1]);
}

#[test]
fn naive_bayes_invariant_under_positive_feature_scaling() {
    let mut rng = SeededRng::new(12);
    let x = random_matrix(&mut rng, 45, 4, 3);
    let queries = random_queries(&mut rng, 30, 4);
    let scale = [0.5f32, 2.0, 8.0, 0.25];
    let rescale = |v: &[f32]| -> Vec<f32> { v.iter().enumerate().map(|(i, a)| a * scale[i % 4]).collect() };
    let xs = FeatureMatrix::new(4, 3, rescale(x.values()), x.labels().to_vec(), "s").unwrap();
    let a = nb_fit(&x).unwrap().predict(Rows::new(&queries, 4).unwrap()).unwrap();
    let b = nb_fit(&xs)
        .unwrap()
        .predict(Rows::new(&rescale(&queries), 4).unwrap())
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn logreg_gradient_matches_finite_differences() {
    let mut rng = SeededRng::new(5);
    for &(l2, standardize) in &[(0.0, false), (1e-3, false), (0.1, true)] {
        let x = random_matrix(&mut rng, 5, 8, 3);
        let standardizer = standardize.then(|| citrusfx::classify::Standardizer::fit(x.view()).unwrap());
        let obj = SoftmaxObjective::new(x.view(), x.labels(), 3, l2, standardizer.as_ref()).unwrap();
        let w: Vec<f64> = (0..24).map(|_| rng.normal() * 0.5).collect();
        let b: Vec<f64> = (0..3).map(|_| rng.normal() * 0.5).collect();
        let (_, gw, gb) = obj.loss_and_gradient(&w, &b);
        let params: Vec<f64> = w.iter().chain(&b).copied().collect();
        let analytic: Vec<f64> = gw.iter().chain(&gb).copied().collect();
        let err = max_gradient_error(&params, &analytic, 1e-5, |p| obj.loss(&p[..24], &p[24..]));
        assert!(err <= 1e-4, "relative gradient error {err}");
    }
}

#[test]
fn logreg_separable_and_monotone() {
    let x = FeatureMatrix::new(1, 2, vec![-2.0, -1.0, 1.0, 2.0], vec![0, 0, 1, 1], "t").unwrap();
    let (model, summary) = logreg_train(&x, &LogRegParams::default()).unwrap();
    assert_eq!(model.predict(x.view()).unwrap(), vec![0, 0, 1, 1]);
    assert!(summary.final_loss <= summary.initial_loss);
    assert!(summary.epochs <= 500);
    assert_eq!(model.predict(Rows::new(&[-3.0], 1).unwrap()).unwrap(), vec![0]);
}

#[test]
fn forest_prediction_equals_vote_recount() {
    let mut rng = SeededRng::new(50);
    let x = random_matrix(&mut rng, 120, 5, 3);
    let model = rf_fit(
        &x,
        &ForestParams {
            n_trees: 25,
            max_features: Some(2),
            min_samples_split: 2,
            seed: 9,
        },
    )
    .unwrap();
    let queries = random_queries(&mut rng, 50, 5);
    let predicted = model.predict(Rows::new(&queries, 5).unwrap()).unwrap();
    for (q, p) in queries.chunks(5).zip(predicted) {
        assert_eq!(p, recount_votes(model.trees(), 3, q));
    }
}

#[test]
fn forest_fits_xor_blobs() {
    let x = xor_blobs(50, 3);
    let model = rf_fit(
        &x,
        &ForestParams {
            seed: 1,
            ..ForestParams::default()
        },
    )
    .unwrap();
    let predicted = model.predict(x.view()).unwrap();
    let correct = predicted.iter().zip(x.labels()).filter(|(a, b)| a == b).count();
    assert!(correct as f64 / 200.0 >= 0.95, "{correct}/200");
    for (i, p) in predicted.iter().enumerate() {
        assert_eq!(*p, recount_votes(model.trees(), 2, x.row(i)));
    }
}

#[test]
fn every_classifier_returns_valid_labels() {
    let mut rng = SeededRng::new(77);
    let x = random_matrix(&mut rng, 40, 3, 4);
    let queries = random_queries(&mut rng, 17, 3);
    for spec in ClassifierSpec::defaults() {
        let model = TrainedClassifier::fit(&spec, &x, 0).unwrap();
        let out = model.predict(Rows::new(&queries, 3).unwrap()).unwrap();
        assert_eq!(out.len(), 17);
        assert!(out.iter().all(|&c| c < 4), "{spec}");
        assert!(model.predict(Rows::new(&[0.0; 4], 4).unwrap()).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn knn_agrees_with_brute_force(seed in any::<u64>(), n in 3usize..40, d in 1usize..6, k in 1usize..8) {
        let mut rng = SeededRng::new(seed);
        let x = random_matrix(&mut rng, n, d, 3);
        let k = k.min(n);
        let model = knn_fit(&x, k).unwrap();
        let q = random_queries(&mut rng, 5, d);
        for row in q.chunks(d) {
            prop_assert_eq!(model.predict_row(row), brute_force_knn(&x, k, row));
        }
    }

    #[test]
    fn forest_agrees_with_recount(seed in any::<u64>(), n in 6usize..50) {
        let mut rng = SeededRng::new(seed);
        let x = random_matrix(&mut rng, n, 3, 2);
        let model = rf_fit(&x, &ForestParams { n_trees: 7, max_features: None, min_samples_split: 2, seed }).unwrap();
        let q = random_queries(&mut rng, 8, 3);
        for row in q.chunks(3) {
            prop_assert_eq!(model.predict_row(row), recount_votes(model.trees(), 2, row));
        }
    }

    #[test]
    fn logreg_never_ends_above_its_start(seed in any::<u64>(), n in 3usize..30, lr in 0.01f64..50.0) {
        let mut rng = SeededRng::new(seed);
        let x = random_matrix(&mut rng, n, 3, 3);
        let params = LogRegParams { lr, max_epochs: 40, ..LogRegParams::default() };
        let (_, summary) = logreg_train(&x, &params).unwrap();
        prop_assert!(summary.final_loss <= summary.initial_loss);
    }
}
