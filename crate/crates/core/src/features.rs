//! The 13 tapping features, grouped by the motor characteristic they describe.

use crate::error::{Error, Result};
use crate::scalar::{mean, median, std_dev, Scalar};
use crate::signal::{detect_cycles, CycleSeries, PeakParams, TapSignal};

pub const NUM_FEATURES: usize = 13;

/// Canonical feature order; also the CSV column order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "amp_max",
    "amp_avg",
    "ti_avg",
    "cas_avg",
    "cms_avg",
    "amp_slope",
    "ti_slope",
    "speed_slope",
    "cov_amp",
    "cov_ti",
    "cov_cms",
    "cov_cas",
    "n_interruptions",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector<T> {
    // hypokinesia
    pub amp_max: T,
    pub amp_avg: T,
    // bradykinesia, seconds
    pub ti_avg: T,
    // combined hypo-/bradykinesia, 1/s
    pub cas_avg: T,
    pub cms_avg: T,
    // sequence effect, per cycle
    pub amp_slope: T,
    pub ti_slope: T,
    pub speed_slope: T,
    // hesitation-halts
    pub cov_amp: T,
    pub cov_ti: T,
    pub cov_cms: T,
    pub cov_cas: T,
    pub n_interruptions: usize,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn to_array(&self) -> [T; NUM_FEATURES] {
        [
            self.amp_max,
            self.amp_avg,
            self.ti_avg,
            self.cas_avg,
            self.cms_avg,
            self.amp_slope,
            self.ti_slope,
            self.speed_slope,
            self.cov_amp,
            self.cov_ti,
            self.cov_cms,
            self.cov_cas,
            T::from_count(self.n_interruptions),
        ]
    }

    pub fn from_array(v: &[T; NUM_FEATURES]) -> Self {
        Self {
            amp_max: v[0],
            amp_avg: v[1],
            ti_avg: v[2],
            cas_avg: v[3],
            cms_avg: v[4],
            amp_slope: v[5],
            ti_slope: v[6],
            speed_slope: v[7],
            cov_amp: v[8],
            cov_ti: v[9],
            cov_cms: v[10],
            cov_cas: v[11],
            n_interruptions: v[12].round().to_usize().unwrap_or(0),
        }
    }
}

fn require(found: usize, needed: usize) -> Result<()> {
    if found < needed {
        Err(Error::InsufficientCycles { found, needed })
    } else {
        Ok(())
    }
}

/// Least-squares slope of `ys` against their index `0, 1, 2, ...`.
///
/// Terms are paired symmetrically around the centre index, so reversing `ys`
/// negates the result exactly.
pub fn index_slope<T: Scalar>(ys: &[T]) -> T {
    let n = ys.len();
    if n < 2 {
        return T::zero();
    }
    let centre = T::from_count(n - 1) / T::lit(2.0);
    let mut num = T::zero();
    let mut den = T::zero();
    for i in 0..n / 2 {
        let c = T::from_count(i) - centre;
        num = num + c * (ys[i] - ys[n - 1 - i]);
        den = den + c * c * T::lit(2.0);
    }
    num / den
}

fn cov<T: Scalar>(xs: &[T], what: &'static str) -> Result<T> {
    let m = mean(xs);
    if m == T::zero() {
        return Err(Error::DegenerateCycles(what));
    }
    Ok(std_dev(xs, 0) / m)
}

/// `(amp_max, amp_avg)`.
pub fn hypokinesia<T: Scalar>(c: &CycleSeries<T>) -> Result<(T, T)> {
    require(c.amplitudes.len(), 3)?;
    let max = c.amplitudes.iter().copied().fold(T::neg_infinity(), T::max);
    Ok((max, mean(&c.amplitudes)))
}

/// Mean inter-peak interval in seconds.
pub fn bradykinesia<T: Scalar>(c: &CycleSeries<T>) -> Result<T> {
    require(c.intervals.len(), 2)?;
    Ok(mean(&c.intervals))
}

/// `(cas_avg, cms_avg)`: means of the per-cycle average and 95th-percentile speeds.
pub fn combined_speed<T: Scalar>(c: &CycleSeries<T>) -> Result<(T, T)> {
    require(c.cycle_avg_speed.len(), 2)?;
    Ok((mean(&c.cycle_avg_speed), mean(&c.cycle_max_speed)))
}

/// `(amp_slope, ti_slope, speed_slope)` per cycle.
pub fn sequence_effect<T: Scalar>(c: &CycleSeries<T>) -> Result<(T, T, T)> {
    require(c.amplitudes.len().min(c.cycle_avg_speed.len()), 3)?;
    Ok((
        index_slope(&c.amplitudes),
        index_slope(&c.intervals),
        index_slope(&c.cycle_avg_speed),
    ))
}

/// Number of intervals strictly longer than twice the median interval.
pub fn count_interruptions<T: Scalar>(intervals: &[T]) -> usize {
    if intervals.is_empty() {
        return 0;
    }
    let threshold = median(intervals) * T::lit(2.0);
    intervals.iter().filter(|&&ti| ti > threshold).count()
}

/// `(cov_amp, cov_ti, cov_cms, cov_cas, n_interruptions)`.
///
/// Each standard deviation divides by its own number of terms.
pub fn hesitation_halts<T: Scalar>(c: &CycleSeries<T>) -> Result<(T, T, T, T, usize)> {
    require(c.amplitudes.len().min(c.cycle_avg_speed.len()), 3)?;
    Ok((
        cov(&c.amplitudes, "amplitude")?,
        cov(&c.intervals, "tapping interval")?,
        cov(&c.cycle_max_speed, "cycle maximum speed")?,
        cov(&c.cycle_avg_speed, "cycle average speed")?,
        count_interruptions(&c.intervals),
    ))
}

pub fn features_from_cycles<T: Scalar>(c: &CycleSeries<T>) -> Result<FeatureVector<T>> {
    let (amp_max, amp_avg) = hypokinesia(c)?;
    let ti_avg = bradykinesia(c)?;
    let (cas_avg, cms_avg) = combined_speed(c)?;
    let (amp_slope, ti_slope, speed_slope) = sequence_effect(c)?;
    let (cov_amp, cov_ti, cov_cms, cov_cas, n_interruptions) = hesitation_halts(c)?;
    Ok(FeatureVector {
        amp_max,
        amp_avg,
        ti_avg,
        cas_avg,
        cms_avg,
        amp_slope,
        ti_slope,
        speed_slope,
        cov_amp,
        cov_ti,
        cov_cms,
        cov_cas,
        n_interruptions,
    })
}

pub fn extract_features<T: Scalar>(s: &TapSignal<T>) -> Result<FeatureVector<T>> {
    extract_features_with(s, &PeakParams::default())
}

pub fn extract_features_with<T: Scalar>(s: &TapSignal<T>, params: &PeakParams) -> Result<FeatureVector<T>> {
    features_from_cycles(&detect_cycles(s, params)?)
}
