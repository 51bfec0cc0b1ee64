//! Classification metrics, baselines, confidence intervals and agreement statistics.

use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{mean, std_dev, Scalar};

pub const NUM_CLASSES: usize = 5;

/// z value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// Conventional significance level for the signed-rank test.
pub const ALPHA: f64 = 0.05;

pub const METRIC_NAMES: [&str; 5] = [
    "accuracy",
    "balanced_accuracy",
    "acceptable_accuracy",
    "macro_precision",
    "macro_f1",
];

/// All values are percentages in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet<T> {
    pub accuracy: T,
    pub balanced_accuracy: T,
    pub acceptable_accuracy: T,
    pub macro_precision: T,
    pub macro_f1: T,
}

impl<T: Scalar> MetricSet<T> {
    pub fn to_array(&self) -> [T; 5] {
        [
            self.accuracy,
            self.balanced_accuracy,
            self.acceptable_accuracy,
            self.macro_precision,
            self.macro_f1,
        ]
    }

    pub fn from_array(v: [T; 5]) -> Self {
        Self {
            accuracy: v[0],
            balanced_accuracy: v[1],
            acceptable_accuracy: v[2],
            macro_precision: v[3],
            macro_f1: v[4],
        }
    }
}

/// Confusion counts, truth by row and prediction by column. Counts may be
/// fractional (expected counts).
#[derive(Debug, Clone, PartialEq)]
pub struct Confusion<T> {
    pub counts: Matrix<T>,
}

impl<T: Scalar> Confusion<T> {
    pub fn from_labels(truth: &[u8], pred: &[u8], k: usize) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::InvalidInput("no predictions to score".into()));
        }
        if truth.len() != pred.len() {
            return Err(Error::InvalidInput(format!(
                "{} labels but {} predictions",
                truth.len(),
                pred.len()
            )));
        }
        let mut counts = Matrix::zeros(k, k);
        for (&t, &p) in truth.iter().zip(pred) {
            let (t, p) = (usize::from(t), usize::from(p));
            if t >= k || p >= k {
                return Err(Error::InvalidInput(format!("label outside 0..{k}")));
            }
            counts[(t, p)] = counts[(t, p)] + T::one();
        }
        Ok(Self { counts })
    }

    fn k(&self) -> usize {
        self.counts.rows()
    }

    fn truth_total(&self, i: usize) -> T {
        self.counts.row(i).iter().copied().sum()
    }

    fn pred_total(&self, j: usize) -> T {
        self.counts.col(j).into_iter().sum()
    }

    /// Per-class recall over classes present in the truth.
    fn recalls(&self) -> Vec<T> {
        (0..self.k())
            .filter(|&i| self.truth_total(i) > T::zero())
            .map(|i| self.counts[(i, i)] / self.truth_total(i))
            .collect()
    }

    /// Classes occurring in the truth or the predictions.
    fn active(&self) -> Vec<usize> {
        (0..self.k())
            .filter(|&i| self.truth_total(i) > T::zero() || self.pred_total(i) > T::zero())
            .collect()
    }

    fn precision(&self, i: usize) -> T {
        let p = self.pred_total(i);
        if p > T::zero() {
            self.counts[(i, i)] / p
        } else {
            T::zero()
        }
    }

    fn recall(&self, i: usize) -> T {
        let t = self.truth_total(i);
        if t > T::zero() {
            self.counts[(i, i)] / t
        } else {
            T::zero()
        }
    }

    /// Metrics as percentages. Precision and F1 are macro-averaged over the classes
    /// that occur in the truth or the predictions; a class that is never predicted
    /// contributes precision 0. Balanced accuracy averages recall over classes present
    /// in the truth.
    pub fn metrics(&self) -> MetricSet<T> {
        let k = self.k();
        let hundred = T::lit(100.0);
        let total: T = self.counts.as_slice().iter().copied().sum();
        let correct: T = (0..k).map(|i| self.counts[(i, i)]).sum();
        let mut near = T::zero();
        for i in 0..k {
            for j in i.saturating_sub(1)..(i + 2).min(k) {
                near = near + self.counts[(i, j)];
            }
        }
        let recalls = self.recalls();
        let active = self.active();
        let n_active = T::from_count(active.len());
        let macro_precision = active.iter().map(|&i| self.precision(i)).sum::<T>() / n_active;
        let macro_f1 = active
            .iter()
            .map(|&i| {
                let (p, r) = (self.precision(i), self.recall(i));
                if p + r > T::zero() {
                    T::lit(2.0) * p * r / (p + r)
                } else {
                    T::zero()
                }
            })
            .sum::<T>()
            / n_active;
        MetricSet {
            accuracy: hundred * correct / total,
            balanced_accuracy: hundred * mean(&recalls),
            acceptable_accuracy: hundred * near / total,
            macro_precision: hundred * macro_precision,
            macro_f1: hundred * macro_f1,
        }
    }
}

pub fn compute_metrics<T: Scalar>(truth: &[u8], pred: &[u8], k: usize) -> Result<MetricSet<T>> {
    Ok(Confusion::from_labels(truth, pred, k)?.metrics())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Uniformly random class assignment; metrics are closed-form expectations.
    RandomGuess,
    /// Always predicts the most frequent class (ties go to the lower class).
    Majority,
}

/// Reference metrics computed from a class distribution alone.
pub fn baseline_metrics<T: Scalar>(counts: &[usize], kind: BaselineKind) -> Result<MetricSet<T>> {
    let total: usize = counts.iter().sum();
    if counts.is_empty() || total == 0 {
        return Err(Error::InvalidInput("class counts are all zero".into()));
    }
    let k = counts.len();
    match kind {
        BaselineKind::Majority => {
            let mut majority = 0;
            for (i, &c) in counts.iter().enumerate() {
                if c > counts[majority] {
                    majority = i;
                }
            }
            let truth: Vec<u8> = counts
                .iter()
                .enumerate()
                .flat_map(|(i, &c)| std::iter::repeat_n(i as u8, c))
                .collect();
            let pred = vec![majority as u8; truth.len()];
            compute_metrics(&truth, &pred, k)
        }
        BaselineKind::RandomGuess => {
            let kk = T::from_count(k);
            let mut expected = Matrix::zeros(k, k);
            for (i, &c) in counts.iter().enumerate() {
                for j in 0..k {
                    expected[(i, j)] = T::from_count(c) / kk;
                }
            }
            let conf = Confusion { counts: expected };
            let mut m = conf.metrics();
            // Harmonic mean of the expected macro precision and macro recall.
            let (p, r) = (m.macro_precision, m.balanced_accuracy);
            m.macro_f1 = T::lit(2.0) * p * r / (p + r);
            Ok(m)
        }
    }
}

/// `mean -/+ 1.96 * s / sqrt(n)` with the sample standard deviation `s`.
pub fn confidence_interval<T: Scalar>(values: &[T]) -> Result<(T, T)> {
    if values.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "confidence interval needs at least 2 values, got {}",
            values.len()
        )));
    }
    let m = mean(values);
    let half = T::lit(Z_95) * std_dev(values, 1) / T::from_count(values.len()).sqrt();
    Ok((m - half, m + half))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult<T> {
    /// Sum of the ranks of the positive differences.
    pub statistic: T,
    pub p_value: T,
    /// Number of non-zero differences.
    pub n: usize,
    pub exact: bool,
}

/// Largest sample size for which the null distribution is enumerated exactly.
pub const WILCOXON_EXACT_MAX: usize = 20;
pub const WILCOXON_MIN_PAIRS: usize = 5;

/// Average ranks (1-based) of `xs`; tied values share the mean of their ranks.
pub fn average_ranks<T: Scalar>(xs: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite"));
    let mut ranks = vec![T::zero(); xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = T::from_count(i + j + 2) / T::lit(2.0);
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided paired signed-rank test. Zero differences are dropped; the null
/// distribution is enumerated exactly for up to 20 pairs, otherwise a normal
/// approximation with tie correction is used.
pub fn wilcoxon_signed_rank<T: Scalar>(a: &[T], b: &[T]) -> Result<WilcoxonResult<T>> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("paired samples differ in length".into()));
    }
    let diffs: Vec<T> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| x - y)
        .filter(|d| *d != T::zero())
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: T::zero(),
            p_value: T::one(),
            n,
            exact: true,
        });
    }
    if n < WILCOXON_MIN_PAIRS {
        return Err(Error::InvalidInput(format!(
            "signed-rank test needs at least {WILCOXON_MIN_PAIRS} non-zero differences, got {n}"
        )));
    }
    let abs: Vec<T> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: T = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > T::zero())
        .map(|(r, _)| *r)
        .sum();

    if n <= WILCOXON_EXACT_MAX {
        // Doubled ranks are integers even with ties.
        let doubled: Vec<usize> = ranks
            .iter()
            .map(|r| (*r * T::lit(2.0)).round().to_usize().unwrap())
            .collect();
        let max: usize = doubled.iter().sum();
        let mut ways = vec![0.0_f64; max + 1];
        ways[0] = 1.0;
        for &r in &doubled {
            for s in (r..=max).rev() {
                ways[s] += ways[s - r];
            }
        }
        let total = 2f64.powi(n as i32);
        let w2 = (w_plus * T::lit(2.0)).round().to_usize().unwrap();
        let lower: f64 = ways[..=w2].iter().sum::<f64>() / total;
        let upper: f64 = ways[w2..].iter().sum::<f64>() / total;
        let p = (2.0 * lower.min(upper)).min(1.0);
        return Ok(WilcoxonResult {
            statistic: w_plus,
            p_value: T::lit(p),
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mut tie_term = 0.0;
    let mut sorted: Vec<f64> = ranks.iter().map(|r| r.as_f64()).collect();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let mu = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus.as_f64() - mu) / var.sqrt();
    let p = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(WilcoxonResult {
        statistic: w_plus,
        p_value: T::lit(p),
        n,
        exact: false,
    })
}

/// Krippendorff's alpha with the ordinal difference metric.
///
/// `ratings[r][u]` is rater `r`'s score for item `u`, or `None` when that rater
/// did not score the item. Items with fewer than two ratings are ignored.
pub fn krippendorff_alpha<T: Scalar>(ratings: &[Vec<Option<u8>>]) -> Result<T> {
    let n_items = ratings.iter().map(Vec::len).max().unwrap_or(0);
    let units: Vec<Vec<u8>> = (0..n_items)
        .map(|u| {
            ratings
                .iter()
                .filter_map(|r| r.get(u).copied().flatten())
                .collect::<Vec<u8>>()
        })
        .filter(|v| v.len() >= 2)
        .collect();
    if units.is_empty() {
        return Err(Error::UndefinedAlpha("no item has two or more ratings".into()));
    }
    let mut values: Vec<u8> = units.iter().flatten().copied().collect();
    values.sort_unstable();
    values.dedup();
    let v = values.len();
    let pos = |x: u8| values.binary_search(&x).unwrap();

    let mut coincidence = Matrix::<T>::zeros(v, v);
    for unit in &units {
        let w = T::one() / T::from_count(unit.len() - 1);
        for (i, &a) in unit.iter().enumerate() {
            for (j, &b) in unit.iter().enumerate() {
                if i != j {
                    let (c, k) = (pos(a), pos(b));
                    coincidence[(c, k)] = coincidence[(c, k)] + w;
                }
            }
        }
    }
    let marginals: Vec<T> = (0..v).map(|c| coincidence.row(c).iter().copied().sum()).collect();
    let n: T = marginals.iter().copied().sum();

    let two = T::lit(2.0);
    let delta2 = |c: usize, k: usize| -> T {
        let (lo, hi) = if c <= k { (c, k) } else { (k, c) };
        let span: T = marginals[lo..=hi].iter().copied().sum();
        let d = span - (marginals[c] + marginals[k]) / two;
        d * d
    };
    let mut observed = T::zero();
    let mut expected = T::zero();
    for c in 0..v {
        for k in 0..v {
            let d = delta2(c, k);
            observed = observed + coincidence[(c, k)] * d;
            expected = expected + marginals[c] * marginals[k] * d;
        }
    }
    if observed == T::zero() {
        return Ok(T::one());
    }
    Ok(T::one() - (n - T::one()) * observed / expected)
}
