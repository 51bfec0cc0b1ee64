//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar accepted by the signal, feature, PCA, classifier
/// and statistics routines. Implemented for [`f32`] and [`f64`].
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every finite `f64` is representable (possibly rounded).
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 literal")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Machine epsilon scaled for "effectively zero" comparisons.
    fn tiny() -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn tiny() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    #[inline]
    fn tiny() -> Self {
        1e-12
    }
}

pub(crate) fn mean<T: Scalar>(xs: &[T]) -> T {
    debug_assert!(!xs.is_empty());
    xs.iter().copied().sum::<T>() / T::from_count(xs.len())
}

/// Standard deviation with an explicit denominator offset (`ddof = 0` population, `1` sample).
pub(crate) fn std_dev<T: Scalar>(xs: &[T], ddof: usize) -> T {
    let m = mean(xs);
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    (ss / T::from_count(xs.len() - ddof)).sqrt()
}

/// Median of a slice (average of the two middle values for even lengths).
pub(crate) fn median<T: Scalar>(xs: &[T]) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Percentile with linear interpolation between closest ranks, `q` in [0, 1].
pub(crate) fn percentile<T: Scalar>(xs: &[T], q: T) -> T {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    percentile_sorted(&v, q)
}

pub(crate) fn percentile_sorted<T: Scalar>(sorted: &[T], q: T) -> T {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = q * T::from_count(n - 1);
    let lo = rank.floor();
    let lo_i = lo.to_usize().unwrap_or(0).min(n - 1);
    let hi_i = (lo_i + 1).min(n - 1);
    let frac = rank - lo;
    sorted[lo_i] + (sorted[hi_i] - sorted[lo_i]) * frac
}
