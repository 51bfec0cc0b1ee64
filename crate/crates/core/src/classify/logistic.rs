//! Multinomial logistic regression fitted by damped Newton iterations.

use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky_solve, Matrix};
use crate::scalar::Scalar;

pub const MAX_ITER: usize = 10_000;
pub const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// L2 penalty on the weights (intercepts are not penalised).
    pub l2: f64,
    /// Weight samples by inverse class frequency.
    pub class_weight: bool,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 0.1,
            class_weight: true,
        }
    }
}

/// Softmax model with one row of coefficients per class; the last column is the
/// intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Logistic<T> {
    pub coef: Matrix<T>,
    pub iterations: usize,
    pub grad_norm: T,
}

struct Problem<'a, T> {
    x: &'a Matrix<T>,
    y: &'a [usize],
    w: &'a [T],
    total_w: T,
    classes: usize,
    l2: T,
}

impl<T: Scalar> Problem<'_, T> {
    fn dim(&self) -> usize {
        self.x.cols() + 1
    }

    fn logits(&self, theta: &[T], row: &[T], out: &mut [T]) {
        let d = self.dim();
        for (k, o) in out.iter_mut().enumerate() {
            let c = &theta[k * d..(k + 1) * d];
            *o = row.iter().zip(c).map(|(&a, &b)| a * b).sum::<T>() + c[d - 1];
        }
    }

    fn objective(&self, theta: &[T]) -> T {
        let d = self.dim();
        let mut z = vec![T::zero(); self.classes];
        let mut loss = T::zero();
        for i in 0..self.x.rows() {
            self.logits(theta, self.x.row(i), &mut z);
            let m = z.iter().copied().fold(T::neg_infinity(), T::max);
            let lse = m + z.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
            loss = loss + self.w[i] * (lse - z[self.y[i]]);
        }
        let mut pen = T::zero();
        for k in 0..self.classes {
            for j in 0..d - 1 {
                pen = pen + theta[k * d + j] * theta[k * d + j];
            }
        }
        loss / self.total_w + self.l2 * pen / T::lit(2.0)
    }

    fn gradient_hessian(&self, theta: &[T]) -> (Vec<T>, Matrix<T>) {
        let d = self.dim();
        let c = self.classes;
        let n_par = c * d;
        let mut g = vec![T::zero(); n_par];
        let mut h = Matrix::zeros(n_par, n_par);
        let mut p = vec![T::zero(); c];
        let mut xt = vec![T::one(); d];
        for i in 0..self.x.rows() {
            xt[..d - 1].copy_from_slice(self.x.row(i));
            self.logits(theta, self.x.row(i), &mut p);
            softmax(&mut p);
            let wi = self.w[i] / self.total_w;
            for k in 0..c {
                let r = p[k] - if self.y[i] == k { T::one() } else { T::zero() };
                for j in 0..d {
                    g[k * d + j] = g[k * d + j] + wi * r * xt[j];
                }
                for l in k..c {
                    let s = if k == l { p[k] * (T::one() - p[k]) } else { -p[k] * p[l] } * wi;
                    if s == T::zero() {
                        continue;
                    }
                    for a in 0..d {
                        let sa = s * xt[a];
                        for b in 0..d {
                            h[(k * d + a, l * d + b)] = h[(k * d + a, l * d + b)] + sa * xt[b];
                        }
                    }
                }
            }
        }
        for k in 0..c {
            for l in 0..k {
                for a in 0..d {
                    for b in 0..d {
                        h[(k * d + a, l * d + b)] = h[(l * d + b, k * d + a)];
                    }
                }
            }
            for j in 0..d - 1 {
                let q = k * d + j;
                g[q] = g[q] + self.l2 * theta[q];
                h[(q, q)] = h[(q, q)] + self.l2;
            }
        }
        (g, h)
    }
}

pub(crate) fn softmax<T: Scalar>(z: &mut [T]) {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut s = T::zero();
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s = s + *v;
    }
    for v in z.iter_mut() {
        *v = *v / s;
    }
}

impl<T: Scalar> Logistic<T> {
    /// Fits on rows of `x` with class indices `y` in `0..classes` and sample weights `w`.
    pub fn fit(x: &Matrix<T>, y: &[usize], w: &[T], classes: usize, params: &LogisticParams) -> Self {
        let prob = Problem {
            x,
            y,
            w,
            total_w: w.iter().copied().sum(),
            classes,
            l2: T::lit(params.l2),
        };
        let n_par = classes * prob.dim();
        let mut theta = vec![T::zero(); n_par];
        let mut f = prob.objective(&theta);
        let mut grad_norm = T::infinity();
        let mut iterations = 0;
        let tol = T::lit(GRAD_TOL);
        while iterations < MAX_ITER {
            let (g, mut h) = prob.gradient_hessian(&theta);
            grad_norm = g.iter().map(|&v| v * v).sum::<T>().sqrt();
            if grad_norm < tol {
                break;
            }
            iterations += 1;
            let jitter = T::lit(1e-10) * (T::one() + h.trace() / T::from_count(n_par));
            for q in 0..n_par {
                h[(q, q)] = h[(q, q)] + jitter;
            }
            let dir: Vec<T> = match cholesky_solve(&h, &g) {
                Some(step) => step.into_iter().map(|v| -v).collect(),
                None => g.iter().map(|&v| -v).collect(),
            };
            let slope: T = g.iter().zip(&dir).map(|(&a, &b)| a * b).sum();
            let mut t = T::one();
            let mut accepted = false;
            while t > T::lit(1e-12) {
                let cand: Vec<T> = theta.iter().zip(&dir).map(|(&a, &b)| a + t * b).collect();
                let fc = prob.objective(&cand);
                if fc <= f + T::lit(1e-4) * t * slope {
                    theta = cand;
                    f = fc;
                    accepted = true;
                    break;
                }
                t = t / T::lit(2.0);
            }
            if !accepted {
                break;
            }
        }
        Self {
            coef: Matrix::from_vec(classes, prob.dim(), theta),
            iterations,
            grad_norm,
        }
    }

    pub fn predict_proba(&self, row: &[T]) -> Vec<T> {
        let d = self.coef.cols();
        let mut z: Vec<T> = (0..self.coef.rows())
            .map(|k| {
                let c = self.coef.row(k);
                row.iter().zip(c).map(|(&a, &b)| a * b).sum::<T>() + c[d - 1]
            })
            .collect();
        softmax(&mut z);
        z
    }
}
