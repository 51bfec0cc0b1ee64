use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use taplab_core::classify::{
    lopo_evaluate, nested_cv, permutation_importance, search_candidates, train, Family, ForestParams, Hyperparams,
    LogisticParams, Mode, ModelSpec, TrainingTable,
};
use taplab_core::linalg::Matrix;
use taplab_core::pca::{standardize, FeatureTable, RowKey, Standardizer};
use taplab_core::{Error, ErrorClass};

/// `patients` patients per class, `videos` rows each. Column 0 carries the label,
/// the rest is noise; `constant` appends a column of 7s.
fn cohort(patients: usize, videos: usize, noise_cols: usize, constant: bool, seed: u64) -> TrainingTable<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut keys = Vec::new();
    let mut labels = Vec::new();
    for class in 0..5u8 {
        for p in 0..patients {
            for v in 0..videos {
                let mut row = vec![f64::from(class) * 2.0 + rng.random_range(-0.3..0.3)];
                row.extend((0..noise_cols).map(|_| rng.random_range(-1.0..1.0)));
                if constant {
                    row.push(7.0);
                }
                rows.push(row);
                keys.push(RowKey::new(format!("c{class}-p{p}-v{v}"), format!("c{class}-p{p}")));
                labels.push(class);
            }
        }
    }
    let cols = rows[0].len();
    let table = FeatureTable::new(
        (0..cols).map(|c| format!("f{c}")).collect(),
        keys,
        Matrix::from_rows(&rows),
    )
    .unwrap();
    TrainingTable::new(table, labels).unwrap()
}

fn logistic(mode: Mode) -> ModelSpec {
    ModelSpec {
        mode,
        hyperparams: Hyperparams::Logistic(LogisticParams {
            l2: 1e-3,
            class_weight: true,
        }),
        seed: 3,
    }
}

fn forest(mode: Mode, d: usize) -> ModelSpec {
    ModelSpec {
        mode,
        hyperparams: Hyperparams::RandomForest(ForestParams {
            n_trees: 30,
            ..ForestParams::default_for(d)
        }),
        seed: 3,
    }
}

fn balanced(truth: &[u8], pred: &[u8]) -> f64 {
    let mut recall = 0.0;
    let mut present = 0.0;
    for c in 0..5u8 {
        let n = truth.iter().filter(|&&t| t == c).count();
        if n > 0 {
            let hit = truth.iter().zip(pred).filter(|(&t, &p)| t == c && p == c).count();
            recall += hit as f64 / n as f64;
            present += 1.0;
        }
    }
    recall / present
}

#[test]
fn informative_feature_ranks_first_and_constant_is_zero() {
    let t = cohort(3, 2, 3, true, 1);
    let model = train(&logistic(Mode::Multiclass), &t).unwrap();
    let imp = permutation_importance(&model, &t, 5, 9).unwrap();
    assert_eq!(imp.len(), 5);
    let top = (0..imp.len())
        .max_by(|&a, &b| imp[a].partial_cmp(&imp[b]).unwrap())
        .unwrap();
    assert_eq!(top, 0, "{imp:?}");
    assert_eq!(imp[4], 0.0);
    let err = permutation_importance(&model, &t, 0, 9).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Config);
}

#[test]
fn lopo_folds_hold_out_one_patient_each() {
    let t = cohort(2, 3, 2, false, 2);
    let r = lopo_evaluate(&t, &logistic(Mode::Ordinal)).unwrap();
    assert_eq!(r.folds.len(), 10);
    assert_eq!(r.predictions.len(), t.n_rows());
    let ids = t.patient_ids();
    for f in &r.folds {
        assert!(f.test_rows.iter().all(|&i| ids[i] == f.patient));
        assert_eq!(f.test_rows.len(), 3);
    }
}

#[test]
fn lopo_with_two_patients_gives_two_folds() {
    let keys = (0..6)
        .map(|i| RowKey::new(format!("v{i}"), if i < 3 { "A" } else { "B" }))
        .collect();
    let data = Matrix::from_rows(&[[0.0], [1.0], [2.0], [0.1], [1.1], [2.1]]);
    let t = TrainingTable::new(
        FeatureTable::new(vec!["x".into()], keys, data).unwrap(),
        vec![0, 1, 2, 0, 1, 2],
    )
    .unwrap();
    let r = lopo_evaluate(&t, &logistic(Mode::Multiclass)).unwrap();
    assert_eq!(r.folds.len(), 2);
    assert_eq!(r.folds[0].patient, "A");
    assert_eq!(r.folds[0].test_rows, vec![0, 1, 2]);
}

#[test]
fn every_configuration_separates_clean_cohort() {
    let t = cohort(3, 2, 0, false, 4);
    for spec in [
        logistic(Mode::Multiclass),
        logistic(Mode::Ordinal),
        forest(Mode::Multiclass, 1),
        forest(Mode::Ordinal, 1),
    ] {
        let r = lopo_evaluate(&t, &spec).unwrap();
        let pred: Vec<u8> = r.predictions.iter().map(|p| p.label).collect();
        let ba = balanced(&t.labels, &pred);
        assert!(ba >= 0.9, "{spec:?}: {ba}");
    }
}

#[test]
fn lopo_probabilities_match_reference_solver() {
    // Reference: scikit-learn LogisticRegression(C = 1 / (n_train * l2), class_weight="balanced")
    // on the same fold-standardized rows.
    let t = cohort(3, 2, 2, false, 4);
    let r = lopo_evaluate(&t, &logistic(Mode::Multiclass)).unwrap();
    let reference: [(usize, [f64; 5]); 4] = [
        (
            0,
            [
                0.4876425529544166,
                0.5098930070754554,
                0.0024642323154931817,
                2.0765458878607935e-07,
                4.606811824522988e-14,
            ],
        ),
        (
            1,
            [
                0.5884980877546035,
                0.40945090799667566,
                0.0020508250448255513,
                1.7920384938074266e-07,
                4.5873394777555076e-14,
            ],
        ),
        (
            18,
            [
                6.080187164086972e-08,
                0.0013550820422707133,
                0.1952509403438422,
                0.07822202497969995,
                0.7251718918323155,
            ],
        ),
        (
            19,
            [
                7.620391001512035e-08,
                0.0017131607577983176,
                0.3484738980420467,
                0.3441774866847321,
                0.30563537831151283,
            ],
        ),
    ];
    for (row, want) in reference {
        for (got, want) in r.predictions[row].probs.iter().zip(want) {
            assert!((got - want).abs() < 1e-4, "row {row}: {got} vs {want}");
        }
    }
}

#[test]
fn nested_cv_is_seeded_and_accurate() {
    let t = cohort(4, 1, 0, false, 5);
    let a = nested_cv(&t, Family::Logistic, Mode::Multiclass, 8, 11).unwrap();
    let b = nested_cv(&t, Family::Logistic, Mode::Multiclass, 8, 11).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.folds.len(), 5);
    let mut seen = vec![false; t.n_rows()];
    let mut hits = 0;
    for f in &a.folds {
        for (&i, p) in f.test_rows.iter().zip(&f.predictions) {
            assert!(!seen[i]);
            seen[i] = true;
            hits += usize::from(p.label == t.labels[i]);
        }
    }
    assert!(seen.iter().all(|&s| s));
    assert!(hits as f64 / t.n_rows() as f64 >= 0.9, "{hits} of {}", t.n_rows());
    assert_eq!(
        nested_cv(&t, Family::Logistic, Mode::Multiclass, 0, 11)
            .unwrap_err()
            .class(),
        ErrorClass::Config
    );
}

#[test]
fn budget_one_uses_the_single_draw() {
    let t = cohort(2, 1, 1, false, 6);
    let r = nested_cv(&t, Family::RandomForest, Mode::Multiclass, 1, 21).unwrap();
    for f in &r.folds {
        assert_eq!(f.hyperparams, r.best);
    }
    r.best.check_search_range(2).unwrap();
}

#[test]
fn search_draws_stay_in_range() {
    for family in [Family::Logistic, Family::RandomForest] {
        for h in search_candidates(family, 13, 200, 4) {
            h.check_search_range(13).unwrap();
        }
    }
}

#[test]
fn fold_standardizer_differs_from_global() {
    // One outlying patient shifts the global mean; the fold statistics must exclude it.
    let keys = (0..8)
        .map(|i| RowKey::new(format!("v{i}"), format!("p{}", i / 2)))
        .collect();
    let data = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [100.0], [101.0]]);
    let t = TrainingTable::new(
        FeatureTable::new(vec!["x".into()], keys, data).unwrap(),
        vec![0, 0, 1, 1, 2, 2, 3, 3],
    )
    .unwrap();
    let train_rows = t.select_rows(&[0, 1, 2, 3, 4, 5]);
    let fold = Standardizer::fit(&train_rows.features).unwrap();
    let global = standardize(&t.features).unwrap();
    let fold_z: f64 = fold.apply_row(&[100.0])[0];
    let global_z = global.data[(6, 0)];
    assert!((fold_z - global_z).abs() > 1.0, "fold {fold_z} vs global {global_z}");
    let model = train(&logistic(Mode::Multiclass), &train_rows).unwrap();
    assert_eq!(model.standardizer, Standardizer::fit_tolerant(&train_rows.features));
}

#[test]
fn degenerate_training_is_numerical() {
    let keys = (0..3).map(|i| RowKey::new(format!("v{i}"), "p")).collect();
    let table = FeatureTable::new(vec!["x".into()], keys, Matrix::from_rows(&[[0.0], [1.0], [2.0]])).unwrap();
    let err = TrainingTable::new(table, vec![2, 2, 2]).unwrap_err();
    assert!(matches!(err, Error::DegenerateTraining(_)), "{err:?}");
    assert_eq!(err.class(), ErrorClass::Numerical);
}
