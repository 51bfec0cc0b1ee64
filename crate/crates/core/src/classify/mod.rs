//! Multi-class and Frank–Hall ordinal severity classifiers, patient-grouped
//! cross-validation and permutation importance.

mod cv;
mod forest;
mod logistic;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use cv::{
    grouped_folds, lopo_evaluate, nested_cv, permutation_importance, search_candidates, LopoFold, LopoResult,
    NestedCvResult, OuterFold, DEFAULT_BUDGET, OUTER_FOLDS,
};
pub use forest::{Forest, ForestParams, Node, Tree};
pub use logistic::{Logistic, LogisticParams};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::metrics::NUM_CLASSES;
use crate::pca::{FeatureTable, Standardizer};
use crate::scalar::Scalar;

/// Number of cumulative binary problems in the ordinal decomposition.
pub const NUM_THRESHOLDS: usize = NUM_CLASSES - 1;

/// A feature table with a severity label per row. Patient ids come from the row keys.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTable<T> {
    pub features: FeatureTable<T>,
    pub labels: Vec<u8>,
}

impl<T: Scalar> TrainingTable<T> {
    pub fn new(features: FeatureTable<T>, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != features.n_rows() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} rows",
                labels.len(),
                features.n_rows()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| usize::from(l) >= NUM_CLASSES) {
            return Err(Error::InvalidInput(format!("label {l} outside 0..4")));
        }
        if let Some(k) = features.keys.iter().find(|k| k.patient_id.is_empty()) {
            return Err(Error::InvalidInput(format!("row `{}` has no patient id", k.video_id)));
        }
        let t = Self { features, labels };
        if t.class_counts().iter().filter(|&&c| c > 0).count() < 2 {
            return Err(Error::DegenerateTraining(
                "table needs at least 2 distinct labels".into(),
            ));
        }
        Ok(t)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn patient_ids(&self) -> Vec<&str> {
        self.features.keys.iter().map(|k| k.patient_id.as_str()).collect()
    }

    /// Distinct patient ids in sorted order.
    pub fn patients(&self) -> Vec<String> {
        let mut p: Vec<String> = self.features.keys.iter().map(|k| k.patient_id.clone()).collect();
        p.sort();
        p.dedup();
        p
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut c = [0; NUM_CLASSES];
        for &l in &self.labels {
            c[usize::from(l)] += 1;
        }
        c
    }

    /// Subset of rows; the result is not re-validated.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Logistic,
    RandomForest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Multiclass,
    Ordinal,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Self::Logistic),
            "random_forest" | "forest" => Ok(Self::RandomForest),
            _ => Err(Error::Config(format!("unknown classifier family `{s}`"))),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Logistic => "logistic",
            Self::RandomForest => "random_forest",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiclass" => Ok(Self::Multiclass),
            "ordinal" => Ok(Self::Ordinal),
            _ => Err(Error::Config(format!("unknown classification mode `{s}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Multiclass => "multiclass",
            Self::Ordinal => "ordinal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Hyperparams {
    Logistic(LogisticParams),
    RandomForest(ForestParams),
}

/// Random-search ranges.
pub const L2_RANGE: (f64, f64) = (1e-4, 10.0);
pub const TREES_RANGE: (usize, usize) = (20, 200);
pub const DEPTH_RANGE: (usize, usize) = (2, 12);
pub const MIN_LEAF_RANGE: (usize, usize) = (1, 10);

impl Hyperparams {
    pub fn family(&self) -> Family {
        match self {
            Self::Logistic(_) => Family::Logistic,
            Self::RandomForest(_) => Family::RandomForest,
        }
    }

    pub fn default_for(family: Family, n_features: usize) -> Self {
        match family {
            Family::Logistic => Self::Logistic(LogisticParams::default()),
            Family::RandomForest => Self::RandomForest(ForestParams::default_for(n_features)),
        }
    }

    /// Structural validity for training. Search ranges are only enforced by
    /// [`Hyperparams::check_search_range`].
    pub fn validate(&self, n_features: usize) -> Result<()> {
        match self {
            Self::Logistic(p) if !(p.l2 > 0.0 && p.l2.is_finite()) => {
                Err(Error::Config(format!("l2 must be positive, got {}", p.l2)))
            }
            Self::RandomForest(p) if p.n_trees == 0 || p.max_depth == 0 || p.min_leaf == 0 => Err(Error::Config(
                "tree count, depth and leaf size must be at least 1".into(),
            )),
            Self::RandomForest(p) if p.max_features == 0 || p.max_features > n_features => Err(Error::Config(format!(
                "max_features must be in 1..={n_features}, got {}",
                p.max_features
            ))),
            _ => Ok(()),
        }
    }

    pub fn check_search_range(&self, n_features: usize) -> Result<()> {
        self.validate(n_features)?;
        let within = |v: usize, (lo, hi): (usize, usize)| (lo..=hi).contains(&v);
        let ok = match self {
            Self::Logistic(p) => p.l2 >= L2_RANGE.0 && p.l2 <= L2_RANGE.1,
            Self::RandomForest(p) => {
                within(p.n_trees, TREES_RANGE) && within(p.max_depth, DEPTH_RANGE) && within(p.min_leaf, MIN_LEAF_RANGE)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "hyperparameters outside the search ranges: {self:?}"
            )))
        }
    }

    fn class_weight(&self) -> bool {
        match self {
            Self::Logistic(p) => p.class_weight,
            Self::RandomForest(p) => p.class_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub mode: Mode,
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        self.hyperparams.family()
    }
}

/// Class probabilities over severities 0..4 and their argmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction<T> {
    pub probs: [T; NUM_CLASSES],
    pub label: u8,
}

impl<T: Scalar> Prediction<T> {
    /// Argmax with ties going to the lower label.
    pub fn from_probs(probs: [T; NUM_CLASSES]) -> Self {
        let mut label = 0;
        for k in 1..NUM_CLASSES {
            if probs[k] > probs[label] {
                label = k;
            }
        }
        Self {
            probs,
            label: label as u8,
        }
    }
}

/// Combines cumulative probabilities `g[k] = P(y > k)` into class probabilities.
/// Negative masses from non-monotone `g` are clipped to zero and the rest renormalized.
pub fn ordinal_predict<T: Scalar>(g: [T; NUM_THRESHOLDS]) -> Prediction<T> {
    let mut p = [T::zero(); NUM_CLASSES];
    p[0] = T::one() - g[0];
    for k in 1..NUM_THRESHOLDS {
        p[k] = g[k - 1] - g[k];
    }
    p[NUM_CLASSES - 1] = g[NUM_THRESHOLDS - 1];
    if p.iter().any(|&v| v < T::zero()) {
        for v in p.iter_mut() {
            *v = v.max(T::zero());
        }
        let s: T = p.iter().copied().sum();
        if s > T::zero() {
            for v in p.iter_mut() {
                *v = *v / s;
            }
        } else {
            p = [T::one() / T::from_count(NUM_CLASSES); NUM_CLASSES];
        }
    }
    Prediction::from_probs(p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "snake_case")]
pub enum Estimator<T> {
    Constant,
    Logistic(Logistic<T>),
    Forest(Forest<T>),
}

/// An estimator over the labels in `classes` (sorted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Fitted<T> {
    pub classes: Vec<u8>,
    pub estimator: Estimator<T>,
}

impl<T: Scalar> Fitted<T> {
    fn fit(hp: &Hyperparams, x: &Matrix<T>, y: &[u8], seed: u64) -> Self {
        let mut classes = y.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Self {
                classes,
                estimator: Estimator::Constant,
            };
        }
        let idx: Vec<usize> = y.iter().map(|l| classes.binary_search(l).unwrap()).collect();
        let c = classes.len();
        let class_w: Vec<T> = if hp.class_weight() {
            let mut counts = vec![0usize; c];
            for &i in &idx {
                counts[i] += 1;
            }
            counts
                .iter()
                .map(|&n| T::from_count(y.len()) / (T::from_count(c) * T::from_count(n)))
                .collect()
        } else {
            vec![T::one(); c]
        };
        let estimator = match hp {
            Hyperparams::Logistic(p) => {
                let w: Vec<T> = idx.iter().map(|&i| class_w[i]).collect();
                Estimator::Logistic(Logistic::fit(x, &idx, &w, c, p))
            }
            Hyperparams::RandomForest(p) => Estimator::Forest(Forest::fit(x, &idx, &class_w, c, p, seed)),
        };
        Self { classes, estimator }
    }

    /// Probabilities aligned with `self.classes`.
    fn predict_proba(&self, row: &[T]) -> Vec<T> {
        match &self.estimator {
            Estimator::Constant => vec![T::one()],
            Estimator::Logistic(m) => m.predict_proba(row),
            Estimator::Forest(m) => m.predict_proba(row),
        }
    }

    fn prob_of(&self, label: u8, row: &[T]) -> T {
        match self.classes.binary_search(&label) {
            Ok(i) => self.predict_proba(row)[i],
            Err(_) => T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", rename_all = "snake_case")]
pub enum Head<T> {
    Multiclass(Fitted<T>),
    /// Binary estimators for `y > 0`, `y > 1`, `y > 2`, `y > 3`.
    Ordinal(Vec<Fitted<T>>),
}

/// A trained classifier. Inputs are standardized with the statistics of the
/// table it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Model<T> {
    pub spec: ModelSpec,
    pub features: Vec<String>,
    pub standardizer: Standardizer<T>,
    pub head: Head<T>,
}

pub const MODEL_FORMAT: &str = "taplab-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    spec: ModelSpec,
    features: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct Body<T> {
    standardizer: Standardizer<T>,
    head: Head<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelFile<T> {
    format: String,
    version: u32,
    header: Header,
    body: Body<T>,
}

impl<T: Scalar> Model<T> {
    pub fn predict_row(&self, row: &[T]) -> Prediction<T> {
        let z = self.standardizer.apply_row(row);
        match &self.head {
            Head::Multiclass(f) => {
                let mut probs = [T::zero(); NUM_CLASSES];
                for (&c, p) in f.classes.iter().zip(f.predict_proba(&z)) {
                    probs[usize::from(c)] = p;
                }
                Prediction::from_probs(probs)
            }
            Head::Ordinal(heads) => {
                let mut g = [T::zero(); NUM_THRESHOLDS];
                for (gk, h) in g.iter_mut().zip(heads) {
                    *gk = h.prob_of(1, &z);
                }
                ordinal_predict(g)
            }
        }
    }

    pub fn predict(&self, t: &FeatureTable<T>) -> Result<Vec<Prediction<T>>> {
        if t.columns != self.features {
            return Err(Error::InvalidInput(format!(
                "model expects columns {:?}, table has {:?}",
                self.features, t.columns
            )));
        }
        Ok((0..t.n_rows()).map(|r| self.predict_row(t.data.row(r))).collect())
    }

    /// Self-describing JSON: a format tag and version, a header with the spec and
    /// seed, and a body with the fitted parameters.
    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            header: Header {
                spec: self.spec,
                features: self.features.clone(),
            },
            body: Body {
                standardizer: self.standardizer.clone(),
                head: self.head.clone(),
            },
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile<T> = serde_json::from_str(s).map_err(|e| Error::parse("model", e))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::parse(
                "model",
                format!("unsupported model file `{}` version {}", file.format, file.version),
            ));
        }
        let d = file.header.features.len();
        if file.body.standardizer.mean.len() != d || file.body.standardizer.std.len() != d {
            return Err(Error::parse("model", "standardizer does not match the feature list"));
        }
        Ok(Self {
            spec: file.header.spec,
            features: file.header.features,
            standardizer: file.body.standardizer,
            head: file.body.head,
        })
    }
}

/// Fits a model. Features are standardized with statistics of `t` alone.
pub fn train<T: Scalar>(spec: &ModelSpec, t: &TrainingTable<T>) -> Result<Model<T>> {
    let present = t.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::DegenerateTraining(format!(
            "training table has {present} distinct label(s)"
        )));
    }
    spec.hyperparams.validate(t.features.n_cols())?;
    let standardizer = Standardizer::fit_tolerant(&t.features);
    let x = standardizer.apply(&t.features).data;
    let head = match spec.mode {
        Mode::Multiclass => Head::Multiclass(Fitted::fit(&spec.hyperparams, &x, &t.labels, spec.seed)),
        Mode::Ordinal => Head::Ordinal(
            (0..NUM_THRESHOLDS)
                .map(|k| {
                    let y: Vec<u8> = t.labels.iter().map(|&l| u8::from(usize::from(l) > k)).collect();
                    Fitted::fit(&spec.hyperparams, &x, &y, derive_seed(spec.seed, k as u64))
                })
                .collect(),
        ),
    };
    Ok(Model {
        spec: *spec,
        features: t.features.columns.clone(),
        standardizer,
        head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::RowKey;

    fn toy() -> TrainingTable<f64> {
        let rows = [
            [-2.0, 0.1],
            [-1.5, -0.3],
            [-1.0, 0.4],
            [1.0, 0.2],
            [1.4, -0.1],
            [2.2, 0.0],
        ];
        let keys = (0..6)
            .map(|i| RowKey::new(format!("v{i}"), format!("p{}", i / 2)))
            .collect();
        let ft = FeatureTable::new(vec!["a".into(), "b".into()], keys, Matrix::from_rows(&rows)).unwrap();
        TrainingTable::new(ft, vec![0, 0, 0, 3, 3, 3]).unwrap()
    }

    fn logistic_spec(mode: Mode) -> ModelSpec {
        ModelSpec {
            mode,
            hyperparams: Hyperparams::Logistic(LogisticParams {
                l2: 1e-3,
                class_weight: false,
            }),
            seed: 0,
        }
    }

    #[test]
    fn ordinal_examples() {
        assert_eq!(ordinal_predict([1.0_f64; 4]).label, 4);
        assert_eq!(ordinal_predict([0.0_f64; 4]).label, 0);
        let p = ordinal_predict([0.9_f64, 0.6, 0.2, 0.1]);
        let want = [0.1, 0.3, 0.4, 0.1, 0.1];
        for (a, b) in p.probs.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(p.label, 2);
    }

    #[test]
    fn non_monotone_is_clipped() {
        let p = ordinal_predict([0.2_f64, 0.6, 0.1, 0.3]);
        assert!(p.probs.iter().all(|&v| v >= 0.0));
        assert!((p.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(Prediction::from_probs([0.0_f64, 0.5, 0.5, 0.0, 0.0]).label, 1);
    }

    #[test]
    fn separable_logistic_fits_training_set() {
        let t = toy();
        for mode in [Mode::Multiclass, Mode::Ordinal] {
            let m = train(&logistic_spec(mode), &t).unwrap();
            let pred: Vec<u8> = m.predict(&t.features).unwrap().iter().map(|p| p.label).collect();
            assert_eq!(pred, t.labels, "{mode}");
        }
    }

    #[test]
    fn single_class_is_degenerate() {
        let t = toy();
        let one = t.select_rows(&[0, 1, 2]);
        assert!(matches!(
            train(&logistic_spec(Mode::Multiclass), &one),
            Err(Error::DegenerateTraining(_))
        ));
        assert!(TrainingTable::new(one.features, one.labels).is_err());
    }

    #[test]
    fn shifted_column_keeps_decisions() {
        let t = toy();
        let spec = logistic_spec(Mode::Multiclass);
        let before: Vec<u8> = train(&spec, &t)
            .unwrap()
            .predict(&t.features)
            .unwrap()
            .iter()
            .map(|p| p.label)
            .collect();
        let mut shifted = t.clone();
        for r in 0..shifted.n_rows() {
            shifted.features.data[(r, 0)] += 5.0;
        }
        let m = train(&spec, &shifted).unwrap();
        let after: Vec<u8> = m.predict(&shifted.features).unwrap().iter().map(|p| p.label).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn model_file_round_trip() {
        let t = toy();
        let spec = ModelSpec {
            mode: Mode::Ordinal,
            hyperparams: Hyperparams::RandomForest(ForestParams::default_for(2)),
            seed: 11,
        };
        let m = train(&spec, &t).unwrap();
        let back = Model::<f64>::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(Model::<f64>::from_json("{\"format\":\"other\"}").is_err());
    }

    #[test]
    fn invalid_hyperparams() {
        let bad = Hyperparams::RandomForest(ForestParams {
            max_features: 9,
            ..ForestParams::default_for(2)
        });
        assert!(matches!(bad.validate(2), Err(Error::Config(_))));
        let stump = Hyperparams::RandomForest(ForestParams {
            n_trees: 1,
            max_depth: 1,
            ..ForestParams::default_for(2)
        });
        assert!(stump.validate(2).is_ok());
        assert!(stump.check_search_range(2).is_err());
    }
}
