use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    train, Family, ForestParams, Hyperparams, LogisticParams, Mode, Model, ModelSpec, Prediction, TrainingTable,
};
use super::{DEPTH_RANGE, L2_RANGE, MIN_LEAF_RANGE, TREES_RANGE};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, MetricSet, NUM_CLASSES};
use crate::scalar::Scalar;

pub const OUTER_FOLDS: usize = 5;
pub const INNER_FOLDS: usize = 5;
pub const DEFAULT_BUDGET: usize = 50;

/// Splits rows into `k` folds so that all rows of a patient share a fold. Patients
/// are shuffled with `seed` and assigned greedily to the fold with the fewest rows.
/// Returns the row indices of each fold in ascending order.
pub fn grouped_folds(patients: &[&str], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut ids: Vec<&str> = patients.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if k < 2 || ids.len() < k {
        return Err(Error::Config(format!("{} patients cannot fill {k} folds", ids.len())));
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for id in ids {
        let rows: Vec<usize> = (0..patients.len()).filter(|&i| patients[i] == id).collect();
        let target = (0..k).min_by_key(|&f| (folds[f].len(), f)).unwrap();
        folds[target].extend(rows);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn complement(n: usize, test: &[usize]) -> Vec<usize> {
    let mut is_test = vec![false; n];
    for &i in test {
        is_test[i] = true;
    }
    (0..n).filter(|&i| !is_test[i]).collect()
}

fn labels_of<T>(preds: &[Prediction<T>]) -> Vec<u8> {
    preds.iter().map(|p| p.label).collect()
}

fn accuracy<T: Scalar>(truth: &[u8], pred: &[u8]) -> T {
    let hits = truth.iter().zip(pred).filter(|(a, b)| a == b).count();
    T::from_count(hits) / T::from_count(truth.len().max(1))
}

fn draw<R: Rng>(family: Family, n_features: usize, rng: &mut R) -> Hyperparams {
    match family {
        Family::Logistic => {
            let (lo, hi) = (L2_RANGE.0.ln(), L2_RANGE.1.ln());
            Hyperparams::Logistic(LogisticParams {
                l2: rng.random_range(lo..=hi).exp(),
                class_weight: rng.random_bool(0.5),
            })
        }
        Family::RandomForest => Hyperparams::RandomForest(ForestParams {
            n_trees: rng.random_range(TREES_RANGE.0..=TREES_RANGE.1),
            max_depth: rng.random_range(DEPTH_RANGE.0..=DEPTH_RANGE.1),
            min_leaf: rng.random_range(MIN_LEAF_RANGE.0..=MIN_LEAF_RANGE.1),
            max_features: rng.random_range(1..=n_features.max(1)),
            bootstrap: true,
            class_weight: rng.random_bool(0.5),
        }),
    }
}

/// The `budget` hyperparameter draws of a seeded random search.
pub fn search_candidates(family: Family, n_features: usize, budget: usize, seed: u64) -> Vec<Hyperparams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..budget).map(|_| draw(family, n_features, &mut rng)).collect()
}

/// Mean accuracy of `spec` over patient-grouped inner folds of `t`.
fn inner_accuracy<T: Scalar>(t: &TrainingTable<T>, spec: &ModelSpec) -> Result<T> {
    let k = INNER_FOLDS.min(t.patients().len());
    let folds = grouped_folds(&t.patient_ids(), k, spec.seed)?;
    let mut total = T::zero();
    for test in &folds {
        let model = train(spec, &t.select_rows(&complement(t.n_rows(), test)))?;
        let held = t.select_rows(test);
        total = total + accuracy::<T>(&held.labels, &labels_of(&model.predict(&held.features)?));
    }
    Ok(total / T::from_count(folds.len()))
}

#[derive(Debug, Clone)]
pub struct OuterFold<T> {
    pub test_rows: Vec<usize>,
    pub hyperparams: Hyperparams,
    /// Inner-CV accuracy (fraction) of the selected hyperparameters.
    pub inner_accuracy: T,
    pub predictions: Vec<Prediction<T>>,
    pub metrics: MetricSet<T>,
}

#[derive(Debug, Clone)]
pub struct NestedCvResult<T> {
    /// Hyperparameters of the outer fold with the highest accuracy.
    pub best: Hyperparams,
    pub folds: Vec<OuterFold<T>>,
}

/// Patient-grouped nested cross-validation with a seeded random search of `budget`
/// draws scored by inner accuracy.
pub fn nested_cv<T: Scalar>(
    t: &TrainingTable<T>,
    family: Family,
    mode: Mode,
    budget: usize,
    seed: u64,
) -> Result<NestedCvResult<T>> {
    if budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    let outer = grouped_folds(&t.patient_ids(), OUTER_FOLDS, seed)?;
    let candidates = search_candidates(family, t.features.n_cols(), budget, derive_seed(seed, 1));
    let mut folds = Vec::with_capacity(outer.len());
    for (fi, test) in outer.iter().enumerate() {
        let train_t = t.select_rows(&complement(t.n_rows(), test));
        let fold_seed = derive_seed(seed, 100 + fi as u64);
        let scores: Vec<T> = candidates
            .par_iter()
            .map(|&hyperparams| {
                inner_accuracy(
                    &train_t,
                    &ModelSpec {
                        mode,
                        hyperparams,
                        seed: fold_seed,
                    },
                )
            })
            .collect::<Result<_>>()?;
        let mut pick = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[pick] {
                pick = i;
            }
        }
        let spec = ModelSpec {
            mode,
            hyperparams: candidates[pick],
            seed: fold_seed,
        };
        let model = train(&spec, &train_t)?;
        let held = t.select_rows(test);
        let predictions = model.predict(&held.features)?;
        let metrics = compute_metrics(&held.labels, &labels_of(&predictions), NUM_CLASSES)?;
        folds.push(OuterFold {
            test_rows: test.clone(),
            hyperparams: candidates[pick],
            inner_accuracy: scores[pick],
            predictions,
            metrics,
        });
    }
    let mut best = 0;
    for (i, f) in folds.iter().enumerate() {
        if f.metrics.accuracy > folds[best].metrics.accuracy {
            best = i;
        }
    }
    Ok(NestedCvResult {
        best: folds[best].hyperparams,
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LopoFold {
    pub patient: String,
    pub test_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct LopoResult<T> {
    /// One prediction per row of the input table, in row order.
    pub predictions: Vec<Prediction<T>>,
    pub folds: Vec<LopoFold>,
}

/// Leave-one-patient-out: one model per patient, trained on all other patients.
pub fn lopo_evaluate<T: Scalar>(t: &TrainingTable<T>, spec: &ModelSpec) -> Result<LopoResult<T>> {
    let patients = t.patients();
    if patients.len() < 2 {
        return Err(Error::Config(format!(
            "leave-one-patient-out needs at least 2 patients, got {}",
            patients.len()
        )));
    }
    let ids = t.patient_ids();
    let per_patient: Vec<(LopoFold, Vec<Prediction<T>>)> = patients
        .par_iter()
        .map(|p| {
            let test: Vec<usize> = (0..t.n_rows()).filter(|&i| ids[i] == p).collect();
            let model = train(spec, &t.select_rows(&complement(t.n_rows(), &test)))?;
            let preds = model.predict(&t.select_rows(&test).features)?;
            Ok((
                LopoFold {
                    patient: p.clone(),
                    test_rows: test,
                },
                preds,
            ))
        })
        .collect::<Result<_>>()?;
    let mut predictions = vec![None; t.n_rows()];
    let mut folds = Vec::with_capacity(per_patient.len());
    for (fold, preds) in per_patient {
        for (&r, p) in fold.test_rows.iter().zip(preds) {
            predictions[r] = Some(p);
        }
        folds.push(fold);
    }
    Ok(LopoResult {
        predictions: predictions
            .into_iter()
            .map(|p| p.expect("every row predicted once"))
            .collect(),
        folds,
    })
}

/// Mean drop in accuracy (fraction) when one feature column is shuffled, per feature.
pub fn permutation_importance<T: Scalar>(
    model: &Model<T>,
    t: &TrainingTable<T>,
    repeats: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if repeats == 0 {
        return Err(Error::Config("permutation importance needs at least 1 repeat".into()));
    }
    let base = accuracy::<T>(&t.labels, &labels_of(&model.predict(&t.features)?));
    (0..t.features.n_cols())
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, j as u64));
            let mut shuffled = t.features.clone();
            let column = t.features.data.col(j);
            let mut drop = T::zero();
            for _ in 0..repeats {
                let mut perm = column.clone();
                perm.shuffle(&mut rng);
                for (r, v) in perm.into_iter().enumerate() {
                    shuffled.data[(r, j)] = v;
                }
                let acc = accuracy::<T>(&t.labels, &labels_of(&model.predict(&shuffled)?));
                drop = drop + (base - acc);
            }
            Ok(drop / T::from_count(repeats))
        })
        .collect()
}
