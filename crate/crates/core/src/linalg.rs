//! Small dense row-major matrices and a symmetric eigensolver.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &c) in idx.iter().enumerate() {
                out[(r, j)] = self[(r, c)];
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Sample covariance of the columns (denominator `n - 1`).
    pub fn covariance(&self) -> Self {
        let n = self.rows;
        let p = self.cols;
        let means: Vec<T> = (0..p)
            .map(|c| self.col(c).into_iter().sum::<T>() / T::from_count(n))
            .collect();
        let mut cov = Self::zeros(p, p);
        for r in 0..n {
            let row = self.row(r);
            for i in 0..p {
                let di = row[i] - means[i];
                for j in i..p {
                    cov[(i, j)] = cov[(i, j)] + di * (row[j] - means[j]);
                }
            }
        }
        let denom = T::from_count(n.saturating_sub(1).max(1));
        for i in 0..p {
            for j in i..p {
                let v = cov[(i, j)] / denom;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        cov
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in non-increasing order and the matching unit eigenvectors
/// as columns.
pub fn symmetric_eigen<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    let n = a.rows();
    assert_eq!(n, a.cols(), "square matrix");
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let two = T::lit(2.0);

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum();
        let scale: T = (0..n).map(|i| m[(i, i)] * m[(i, i)]).sum::<T>() + off;
        if off <= T::epsilon() * T::epsilon() * scale || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).expect("finite").then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.select_cols(&order);
    (values, vectors)
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky factorisation.
/// Returns `None` when `a` is not numerically positive definite.
pub fn cholesky_solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum = sum - l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= T::zero() {
                    return None;
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    let mut y = vec![T::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum = sum - l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum = sum - l[(k, i)] * x[k];
        }
        x[i] = sum / l[(i, i)];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs() {
        let a = Matrix::from_rows(&[[4.0_f64, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 1.0]]);
        let (vals, vecs) = symmetric_eigen(&a);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let mut lambda = Matrix::zeros(3, 3);
        for i in 0..3 {
            lambda[(i, i)] = vals[i];
        }
        let back = vecs.matmul(&lambda).matmul(&vecs.transpose());
        assert!(back.max_abs_diff(&a) < 1e-12);
        let gram = vecs.transpose().matmul(&vecs);
        assert!(gram.max_abs_diff(&Matrix::identity(3)) < 1e-12);
        assert!((vals.iter().sum::<f64>() - a.trace()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_matches_direct() {
        let a = Matrix::from_rows(&[[4.0_f64, 2.0], [2.0, 3.0]]);
        let x = cholesky_solve(&a, &[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
        assert!(cholesky_solve(&Matrix::from_rows(&[[1.0_f64, 2.0], [2.0, 1.0]]), &[1.0, 1.0]).is_none());
    }

    #[test]
    fn covariance_sample_denominator() {
        let x = Matrix::from_rows(&[[1.0_f64, 2.0], [2.0, 4.0], [3.0, 6.0]]);
        let c = x.covariance();
        assert_eq!(c[(0, 0)], 1.0);
        assert_eq!(c[(0, 1)], 2.0);
        assert_eq!(c[(1, 1)], 4.0);
    }
}
