//! Feature tables, standardization, principal components and varimax rotation.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::scalar::Scalar;

/// Identifies the recording a table row came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey {
    pub video_id: String,
    pub patient_id: String,
}

impl RowKey {
    pub fn new(video_id: impl Into<String>, patient_id: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            patient_id: patient_id.into(),
        }
    }
}

/// Recordings by features, with named columns and keyed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable<T> {
    pub columns: Vec<String>,
    pub keys: Vec<RowKey>,
    pub data: Matrix<T>,
}

impl<T: Scalar> FeatureTable<T> {
    pub fn new(columns: Vec<String>, keys: Vec<RowKey>, data: Matrix<T>) -> Result<Self> {
        if data.cols() != columns.len() || data.rows() != keys.len() {
            return Err(Error::InvalidInput(format!(
                "table shape {:?} does not match {} columns and {} keys",
                data.shape(),
                columns.len(),
                keys.len()
            )));
        }
        if let Some(i) = data.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "missing or non-finite value in row {} column `{}`",
                i / columns.len(),
                columns[i % columns.len()]
            )));
        }
        Ok(Self { columns, keys, data })
    }

    pub fn n_rows(&self) -> usize {
        self.data.rows()
    }

    pub fn n_cols(&self) -> usize {
        self.data.cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            columns: self.columns.clone(),
            keys: idx.iter().map(|&i| self.keys[i].clone()).collect(),
            data: self.data.select_rows(idx),
        }
    }

    pub fn with_data(&self, data: Matrix<T>) -> Self {
        assert_eq!(data.shape(), self.data.shape());
        Self {
            columns: self.columns.clone(),
            keys: self.keys.clone(),
            data,
        }
    }
}

/// Column means and sample standard deviations fitted on one table and
/// applicable to others.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(t: &FeatureTable<T>) -> Result<Self> {
        let n = t.n_rows();
        if n < 2 {
            return Err(Error::InvalidInput("standardization needs at least 2 rows".into()));
        }
        let mut mean = Vec::with_capacity(t.n_cols());
        let mut std = Vec::with_capacity(t.n_cols());
        for c in 0..t.n_cols() {
            let col = t.data.col(c);
            let m = col.iter().copied().sum::<T>() / T::from_count(n);
            let ss: T = col.iter().map(|&x| (x - m) * (x - m)).sum();
            let s = (ss / T::from_count(n - 1)).sqrt();
            if s.is_nan() || s <= m.abs() * T::epsilon() * T::lit(16.0) {
                return Err(Error::ZeroVariance {
                    column: t.columns[c].clone(),
                });
            }
            mean.push(m);
            std.push(s);
        }
        Ok(Self { mean, std })
    }

    /// Like [`Standardizer::fit`], but constant columns get unit scale instead of an
    /// error, so they map to zero.
    pub fn fit_tolerant(t: &FeatureTable<T>) -> Self {
        let n = t.n_rows().max(1);
        let mut mean = Vec::with_capacity(t.n_cols());
        let mut std = Vec::with_capacity(t.n_cols());
        for c in 0..t.n_cols() {
            let col = t.data.col(c);
            let m = col.iter().copied().sum::<T>() / T::from_count(n);
            let ss: T = col.iter().map(|&x| (x - m) * (x - m)).sum();
            let s = (ss / T::from_count(n.saturating_sub(1).max(1))).sqrt();
            mean.push(m);
            std.push(if s > m.abs().max(T::one()) * T::epsilon() * T::lit(16.0) {
                s
            } else {
                T::one()
            });
        }
        Self { mean, std }
    }

    pub fn apply_row(&self, row: &[T]) -> Vec<T> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&x, (&m, &s))| (x - m) / s)
            .collect()
    }

    pub fn apply(&self, t: &FeatureTable<T>) -> FeatureTable<T> {
        let mut data = t.data.clone();
        for r in 0..data.rows() {
            let z = self.apply_row(t.data.row(r));
            data.row_mut(r).copy_from_slice(&z);
        }
        t.with_data(data)
    }
}

/// Z-scores every column (mean 0, sample standard deviation 1).
pub fn standardize<T: Scalar>(t: &FeatureTable<T>) -> Result<FeatureTable<T>> {
    Ok(Standardizer::fit(t)?.apply(t))
}

/// Principal axes of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingMatrix<T> {
    pub features: Vec<String>,
    /// Column means of the analysed table.
    pub mean: Vec<T>,
    /// Unit eigenvectors of the covariance, one per column, ordered by eigenvalue.
    pub components: Matrix<T>,
    /// Covariance eigenvalues, non-increasing.
    pub eigenvalues: Vec<T>,
    /// Eigenvectors scaled by the square root of their eigenvalue (features x k).
    pub loadings: Matrix<T>,
    pub explained_variance_ratio: Vec<T>,
    pub k: usize,
    /// Number of eigenvalues that are numerically non-zero.
    pub rank: usize,
}

impl<T: Scalar> LoadingMatrix<T> {
    /// Scores of each row on every component.
    pub fn project(&self, t: &FeatureTable<T>) -> Matrix<T> {
        let mut centred = t.data.clone();
        for r in 0..centred.rows() {
            for (v, &m) in centred.row_mut(r).iter_mut().zip(&self.mean) {
                *v = *v - m;
            }
        }
        centred.matmul(&self.components)
    }

    /// Maps component scores back to feature space.
    pub fn reconstruct(&self, scores: &Matrix<T>) -> Matrix<T> {
        let mut back = scores.matmul(&self.components.transpose());
        for r in 0..back.rows() {
            for (v, &m) in back.row_mut(r).iter_mut().zip(&self.mean) {
                *v = *v + m;
            }
        }
        back
    }

    pub fn cumulative_ratio(&self) -> Vec<T> {
        cumulative(&self.explained_variance_ratio)
    }
}

fn cumulative<T: Scalar>(xs: &[T]) -> Vec<T> {
    xs.iter()
        .scan(T::zero(), |acc, &x| {
            *acc = *acc + x;
            Some(*acc)
        })
        .collect()
}

/// Eigen-decomposition of the sample covariance of `t` (pass a standardized table
/// for a correlation-based analysis). Each component is signed so that its
/// largest-magnitude entry is positive.
pub fn principal_components<T: Scalar>(t: &FeatureTable<T>) -> Result<LoadingMatrix<T>> {
    let p = t.n_cols();
    if t.n_rows() < 2 || p == 0 {
        return Err(Error::InvalidInput("PCA needs at least 2 rows and 1 column".into()));
    }
    let cov = t.data.covariance();
    let (mut eigenvalues, mut components) = symmetric_eigen(&cov);
    for c in 0..p {
        let mut best = 0;
        for r in 1..p {
            if components[(r, c)].abs() > components[(best, c)].abs() {
                best = r;
            }
        }
        if components[(best, c)] < T::zero() {
            for r in 0..p {
                components[(r, c)] = -components[(r, c)];
            }
        }
    }
    let top = eigenvalues[0].max(T::zero());
    let cutoff = top * T::epsilon().sqrt();
    let rank = eigenvalues.iter().filter(|&&l| l > cutoff).count();
    for l in eigenvalues.iter_mut() {
        if *l < T::zero() {
            *l = T::zero();
        }
    }
    let total: T = eigenvalues.iter().copied().sum();
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|&l| if total > T::zero() { l / total } else { T::zero() })
        .collect();
    let mut loadings = components.clone();
    for c in 0..p {
        let s = eigenvalues[c].sqrt();
        for r in 0..p {
            loadings[(r, c)] = loadings[(r, c)] * s;
        }
    }
    let mean = (0..p)
        .map(|c| t.data.col(c).into_iter().sum::<T>() / T::from_count(t.n_rows()))
        .collect();
    Ok(LoadingMatrix {
        features: t.columns.clone(),
        mean,
        components,
        eigenvalues,
        loadings,
        explained_variance_ratio,
        k: p,
        rank,
    })
}

pub const VARIANCE_TARGET: f64 = 0.98;

/// Smallest number of leading components whose cumulative ratio reaches 98%.
pub fn select_components<T: Scalar>(evr: &[T]) -> usize {
    select_components_at(evr, T::lit(VARIANCE_TARGET))
}

pub fn select_components_at<T: Scalar>(evr: &[T], target: T) -> usize {
    let slack = T::epsilon() * T::lit(64.0);
    cumulative(evr)
        .iter()
        .position(|&c| c >= target - slack)
        .map_or(evr.len(), |i| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarimaxOptions {
    /// Convergence threshold on the per-sweep criterion gain.
    pub tol: f64,
    pub max_iter: usize,
    /// Kaiser row normalization before rotating (undone afterwards).
    pub normalize: bool,
}

impl Default for VarimaxOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarimaxResult<T> {
    /// Rotated loadings `L * Q`.
    pub loadings: Matrix<T>,
    /// Orthogonal rotation `Q` (k x k).
    pub rotation: Matrix<T>,
    /// Criterion before rotating and after every sweep; non-decreasing.
    pub criterion_history: Vec<T>,
    pub iterations: usize,
    /// `false` when `max_iter` sweeps ran out before the gain fell below `tol`.
    pub converged: bool,
}

fn row_norms<T: Scalar>(l: &Matrix<T>) -> Vec<T> {
    (0..l.rows())
        .map(|r| l.row(r).iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect()
}

fn normalized<T: Scalar>(l: &Matrix<T>) -> Matrix<T> {
    let h = row_norms(l);
    let mut x = l.clone();
    for (r, &hr) in h.iter().enumerate() {
        if hr > T::zero() {
            for v in x.row_mut(r) {
                *v = *v / hr;
            }
        }
    }
    x
}

fn column_criterion<T: Scalar>(x: &Matrix<T>, c: usize) -> T {
    let p = T::from_count(x.rows());
    let (mut s2, mut s4) = (T::zero(), T::zero());
    for r in 0..x.rows() {
        let sq = x[(r, c)] * x[(r, c)];
        s2 = s2 + sq;
        s4 = s4 + sq * sq;
    }
    s4 / p - (s2 / p) * (s2 / p)
}

/// Raw varimax criterion: summed per-column variance of squared loadings.
/// With `normalize`, rows are first scaled to unit length (the quantity Kaiser-normalized
/// varimax maximizes).
pub fn varimax_criterion<T: Scalar>(l: &Matrix<T>, normalize: bool) -> T {
    let x = if normalize { normalized(l) } else { l.clone() };
    (0..x.cols()).map(|c| column_criterion(&x, c)).sum()
}

fn rotate_columns<T: Scalar>(m: &mut Matrix<T>, j: usize, k: usize, cos: T, sin: T) {
    for r in 0..m.rows() {
        let a = m[(r, j)];
        let b = m[(r, k)];
        m[(r, j)] = cos * a + sin * b;
        m[(r, k)] = -sin * a + cos * b;
    }
}

/// Varimax rotation of an arbitrary loading matrix by successive pairwise
/// (Jacobi-style) planar rotations. A planar rotation is applied only when it
/// increases the criterion, so the criterion never decreases.
pub fn varimax_matrix<T: Scalar>(l: &Matrix<T>, opts: &VarimaxOptions) -> VarimaxResult<T> {
    let k = l.cols();
    let p = T::from_count(l.rows());
    let mut x = if opts.normalize { normalized(l) } else { l.clone() };
    let mut q = Matrix::identity(k);
    let crit = |x: &Matrix<T>| (0..k).map(|c| column_criterion(x, c)).sum::<T>();
    let mut history = vec![crit(&x)];
    let tol = T::lit(opts.tol);
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let mut iterations = 0;
    let mut converged = k < 2;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let current = *history.last().unwrap();
        let min_gain = T::epsilon() * T::lit(8.0) * current.abs().max(T::one());
        for j in 0..k {
            for m in j + 1..k {
                let (mut a, mut b, mut c, mut d) = (T::zero(), T::zero(), T::zero(), T::zero());
                for r in 0..x.rows() {
                    let (xj, xm) = (x[(r, j)], x[(r, m)]);
                    let u = xj * xj - xm * xm;
                    let v = two * xj * xm;
                    a = a + u;
                    b = b + v;
                    c = c + (u * u - v * v);
                    d = d + two * u * v;
                }
                let num = d - two * a * b / p;
                let den = c - (a * a - b * b) / p;
                let phi = num.atan2(den) / four;
                if phi == T::zero() {
                    continue;
                }
                let before = column_criterion(&x, j) + column_criterion(&x, m);
                let mut trial = x.clone();
                rotate_columns(&mut trial, j, m, phi.cos(), phi.sin());
                let after = column_criterion(&trial, j) + column_criterion(&trial, m);
                if after - before > min_gain {
                    x = trial;
                    rotate_columns(&mut q, j, m, phi.cos(), phi.sin());
                }
            }
        }
        let next = crit(&x);
        let gain = next - current;
        history.push(next);
        if gain < tol {
            converged = true;
        }
    }

    VarimaxResult {
        loadings: l.matmul(&q),
        rotation: q,
        criterion_history: history,
        iterations,
        converged,
    }
}

/// Rotates the first `k` columns of the loadings.
pub fn varimax<T: Scalar>(l: &LoadingMatrix<T>, k: usize, opts: &VarimaxOptions) -> Result<VarimaxResult<T>> {
    if k == 0 || k > l.loadings.cols() {
        return Err(Error::Config(format!(
            "cannot rotate {k} of {} components",
            l.loadings.cols()
        )));
    }
    let cols: Vec<usize> = (0..k).collect();
    Ok(varimax_matrix(&l.loadings.select_cols(&cols), opts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[f64]]) -> FeatureTable<f64> {
        let p = rows[0].len();
        FeatureTable::new(
            (0..p).map(|c| format!("f{c}")).collect(),
            (0..rows.len()).map(|i| RowKey::new(format!("v{i}"), "p")).collect(),
            Matrix::from_rows(rows),
        )
        .unwrap()
    }

    #[test]
    fn standardize_examples() {
        let t = table(&[&[1.0], &[2.0], &[3.0]]);
        let z = standardize(&t).unwrap();
        assert_eq!(z.data.col(0), vec![-1.0, 0.0, 1.0]);
        let again = standardize(&z).unwrap();
        assert!(again.data.max_abs_diff(&z.data) < 1e-9);
        let constant = table(&[&[1.0, 5.0], &[2.0, 5.0], &[3.0, 5.0]]);
        match standardize(&constant) {
            Err(Error::ZeroVariance { column }) => assert_eq!(column, "f1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn correlated_pair_is_rank_one() {
        let t = table(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0], &[5.0, 10.0]]);
        let l = principal_components(&standardize(&t).unwrap()).unwrap();
        assert!((l.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        assert_eq!(l.rank, 1);
    }

    #[test]
    fn select_component_examples() {
        assert_eq!(select_components(&[1.0_f64]), 1);
        assert_eq!(select_components(&[0.6_f64, 0.3, 0.08, 0.02]), 3);
        assert_eq!(select_components(&[0.5_f64, 0.3, 0.1, 0.1]), 4);
    }

    #[test]
    fn diagonal_loadings_are_a_fixed_point() {
        let l = Matrix::from_rows(&[[0.9_f64, 0.0], [0.0, 0.7], [0.0, 0.0]]);
        let r = varimax_matrix(&l, &VarimaxOptions::default());
        assert_eq!(r.loadings, l);
        assert!(r.converged);
    }

    #[test]
    fn sign_convention_is_deterministic() {
        let t = table(&[
            &[1.0, 0.3, 2.0],
            &[2.0, 0.1, 1.0],
            &[3.0, 0.7, 0.5],
            &[4.5, 0.2, 0.1],
            &[2.2, 0.9, 1.7],
        ]);
        let l = principal_components(&standardize(&t).unwrap()).unwrap();
        for c in 0..3 {
            let col = l.components.col(c);
            let best = col
                .iter()
                .copied()
                .fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(best > 0.0);
        }
        let again = principal_components(&standardize(&t).unwrap()).unwrap();
        assert_eq!(l, again);
    }

    #[test]
    fn varimax_rejects_bad_k() {
        let t = table(&[&[1.0, 0.3], &[2.0, 0.1], &[3.0, 0.7]]);
        let l = principal_components(&t).unwrap();
        assert!(matches!(
            varimax(&l, 3, &VarimaxOptions::default()),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            varimax(&l, 0, &VarimaxOptions::default()),
            Err(Error::Config(_))
        ));
    }
}
