//! Per-frame tapping signals and tapping-cycle detection.
//!
//! The distance signal is the thumb-tip to index-tip distance divided by the
//! wrist to index-MCP distance, which removes the dependence on camera distance.
//! The angle signal is the angle at the wrist between the thumb tip and the index tip.

use std::fmt;

use crate::error::{Error, Result};
use crate::ingest::{Point, Recording, INDEX_MCP, INDEX_TIP, NUM_LANDMARKS, THUMB_TIP, WRIST};
use crate::scalar::{percentile, percentile_sorted, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SignalKind {
    #[default]
    Distance,
    Angle,
}

impl SignalKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalKind::Distance => "distance",
            SignalKind::Angle => "angle",
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(SignalKind::Distance),
            "angle" => Ok(SignalKind::Angle),
            other => Err(Error::Config(format!("unknown signal kind `{other}`"))),
        }
    }
}

/// One sample per frame, dimensionless for distance signals and radians for angles.
#[derive(Debug, Clone, PartialEq)]
pub struct TapSignal<T> {
    pub samples: Vec<T>,
    pub fps: T,
    pub kind: SignalKind,
    /// Samples filled in by gap interpolation.
    pub interpolated: Vec<bool>,
}

impl<T: Scalar> TapSignal<T> {
    pub fn new(samples: Vec<T>, fps: T, kind: SignalKind) -> Result<Self> {
        let n = samples.len();
        Self::with_interpolation(samples, fps, kind, vec![false; n])
    }

    pub fn with_interpolation(samples: Vec<T>, fps: T, kind: SignalKind, interpolated: Vec<bool>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "signal needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if interpolated.len() != samples.len() {
            return Err(Error::InvalidInput("interpolation mask length mismatch".into()));
        }
        if !(fps.is_finite() && fps > T::zero()) {
            return Err(Error::InvalidInput("fps must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at {i}")));
        }
        if kind == SignalKind::Distance {
            if let Some(i) = samples.iter().position(|&v| v < T::zero()) {
                return Err(Error::InvalidInput(format!("negative distance at {i}")));
            }
        }
        Ok(Self {
            samples,
            fps,
            kind,
            interpolated,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            samples: self.samples.iter().map(|&v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Time in seconds of sample `i`.
    pub fn time(&self, i: usize) -> T {
        T::from_count(i) / self.fps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedSignal<T> {
    /// `speed[k] = |s[k+1] - s[k]| * fps`, units of 1/s.
    pub samples: Vec<T>,
    pub fps: T,
    /// A transition is flagged when either endpoint was interpolated.
    pub interpolated: Vec<bool>,
}

/// Detected tapping cycles with the per-cycle quantities derived from them.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSeries<T> {
    pub peak_indices: Vec<usize>,
    pub trough_indices: Vec<usize>,
    /// Peak timestamps in seconds.
    pub peak_times: Vec<T>,
    /// Peak minus the trough preceding it.
    pub amplitudes: Vec<T>,
    /// Time between consecutive peaks in seconds.
    pub intervals: Vec<T>,
    /// Mean speed over each peak-to-peak cycle.
    pub cycle_avg_speed: Vec<T>,
    /// 95th percentile speed over each peak-to-peak cycle.
    pub cycle_max_speed: Vec<T>,
}

impl<T: Scalar> CycleSeries<T> {
    /// The same cycles played backwards.
    pub fn reversed(&self) -> Self {
        let last_t = self.peak_times.last().copied().unwrap_or_else(T::zero);
        let last_i = self.peak_indices.last().copied().unwrap_or(0);
        let rev = |v: &[T]| v.iter().rev().copied().collect::<Vec<_>>();
        Self {
            peak_indices: self.peak_indices.iter().rev().map(|&i| last_i - i).collect(),
            trough_indices: self
                .trough_indices
                .iter()
                .rev()
                .filter(|&&i| i <= last_i)
                .map(|&i| last_i - i)
                .collect(),
            peak_times: self.peak_times.iter().rev().map(|&t| last_t - t).collect(),
            amplitudes: rev(&self.amplitudes),
            intervals: rev(&self.intervals),
            cycle_avg_speed: rev(&self.cycle_avg_speed),
            cycle_max_speed: rev(&self.cycle_max_speed),
        }
    }
}

/// Peak-detection settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakParams {
    /// Minimum prominence as a fraction of the 5th-95th percentile range of the signal.
    pub prominence_frac: f64,
    /// Minimum distance between two peaks, in seconds.
    pub min_separation_s: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        Self {
            prominence_frac: 0.15,
            min_separation_s: 0.1,
        }
    }
}

pub const MIN_PEAKS: usize = 3;

fn to_point<T: Scalar>(p: &Point) -> [T; 2] {
    [T::lit(p[0]), T::lit(p[1])]
}

fn norm<T: Scalar>(a: [T; 2], b: [T; 2]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx.hypot(dy)
}

/// Evaluates `f` on every valid frame and linearly interpolates over missing ones.
/// Missing frames before the first or after the last valid frame take the nearest value.
fn per_frame<T, F>(r: &Recording, kind: SignalKind, f: F) -> Result<TapSignal<T>>
where
    T: Scalar,
    F: Fn(&[Point; NUM_LANDMARKS], usize) -> Result<T>,
{
    let first = r.frames.iter().map(|f| f.index).min().unwrap_or(0);
    let last = r.frames.iter().map(|f| f.index).max().unwrap_or(0);
    let n = last - first + 1;
    let mut values: Vec<Option<T>> = vec![None; n];
    for frame in &r.frames {
        if let Some(pts) = &frame.points {
            values[frame.index - first] = Some(f(pts, frame.index)?);
        }
    }
    let known: Vec<usize> = (0..n).filter(|&i| values[i].is_some()).collect();
    if known.is_empty() {
        return Err(Error::InvalidRecording("no frame has landmarks".into()));
    }
    let mut samples = vec![T::zero(); n];
    let mut interpolated = vec![false; n];
    for &i in &known {
        samples[i] = values[i].unwrap();
    }
    for i in 0..known[0] {
        samples[i] = samples[known[0]];
        interpolated[i] = true;
    }
    let end = *known.last().unwrap();
    for i in end + 1..n {
        samples[i] = samples[end];
        interpolated[i] = true;
    }
    for w in known.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = T::from_count(b - a);
        for i in a + 1..b {
            let t = T::from_count(i - a) / span;
            samples[i] = samples[a] + (samples[b] - samples[a]) * t;
            interpolated[i] = true;
        }
    }
    TapSignal::with_interpolation(samples, T::lit(r.fps), kind, interpolated)
}

/// Scaled thumb-index distance per frame.
pub fn distance_signal<T: Scalar>(r: &Recording) -> Result<TapSignal<T>> {
    per_frame(r, SignalKind::Distance, |pts, frame| {
        let d1 = norm::<T>(to_point(&pts[THUMB_TIP]), to_point(&pts[INDEX_TIP]));
        let d2 = norm::<T>(to_point(&pts[WRIST]), to_point(&pts[INDEX_MCP]));
        if d2 == T::zero() {
            return Err(Error::DegenerateGeometry {
                frame,
                message: "wrist and index MCP coincide".into(),
            });
        }
        Ok(d1 / d2)
    })
}

/// Angle at the wrist between the thumb tip and the index tip, in `[0, pi]`.
pub fn angle_signal<T: Scalar>(r: &Recording) -> Result<TapSignal<T>> {
    per_frame(r, SignalKind::Angle, |pts, frame| {
        let w = to_point::<T>(&pts[WRIST]);
        let th = to_point::<T>(&pts[THUMB_TIP]);
        let ix = to_point::<T>(&pts[INDEX_TIP]);
        let a = [th[0] - w[0], th[1] - w[1]];
        let b = [ix[0] - w[0], ix[1] - w[1]];
        if (a[0] == T::zero() && a[1] == T::zero()) || (b[0] == T::zero() && b[1] == T::zero()) {
            return Err(Error::DegenerateGeometry {
                frame,
                message: "fingertip coincides with the wrist".into(),
            });
        }
        let cross = a[0] * b[1] - a[1] * b[0];
        let dot = a[0] * b[0] + a[1] * b[1];
        Ok(cross.abs().atan2(dot))
    })
}

/// Builds either signal kind.
pub fn build_signal<T: Scalar>(r: &Recording, kind: SignalKind) -> Result<TapSignal<T>> {
    match kind {
        SignalKind::Distance => distance_signal(r),
        SignalKind::Angle => angle_signal(r),
    }
}

pub fn speed_signal<T: Scalar>(s: &TapSignal<T>) -> SpeedSignal<T> {
    let samples = s.samples.windows(2).map(|w| (w[1] - w[0]).abs() * s.fps).collect();
    let interpolated = s.interpolated.windows(2).map(|w| w[0] || w[1]).collect();
    SpeedSignal {
        samples,
        fps: s.fps,
        interpolated,
    }
}

/// Indices of local maxima; flat tops report their (lower) midpoint.
fn local_maxima<T: Scalar>(x: &[T]) -> Vec<usize> {
    let mut peaks = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                peaks.push((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        i += 1;
    }
    peaks
}

/// Keeps the highest peaks, discarding any closer than `distance` samples to a kept one.
fn select_by_distance<T: Scalar>(x: &[T], peaks: &[usize], distance: usize) -> Vec<usize> {
    if distance <= 1 || peaks.len() < 2 {
        return peaks.to_vec();
    }
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| x[peaks[b]].partial_cmp(&x[peaks[a]]).expect("finite").then(a.cmp(&b)));
    let mut keep = vec![true; peaks.len()];
    for &i in &order {
        if !keep[i] {
            continue;
        }
        let mut j = i;
        while j > 0 && peaks[i] - peaks[j - 1] < distance {
            keep[j - 1] = false;
            j -= 1;
        }
        let mut j = i + 1;
        while j < peaks.len() && peaks[j] - peaks[i] < distance {
            keep[j] = false;
            j += 1;
        }
    }
    peaks.iter().zip(keep).filter(|(_, k)| *k).map(|(&p, _)| p).collect()
}

/// Topographic prominence of each peak: height above the higher of the two
/// lowest points reached before meeting a higher sample on either side.
fn prominences<T: Scalar>(x: &[T], peaks: &[usize]) -> Vec<T> {
    peaks
        .iter()
        .map(|&p| {
            let h = x[p];
            let mut left_min = h;
            for j in (0..p).rev() {
                if x[j] > h {
                    break;
                }
                left_min = left_min.min(x[j]);
            }
            let mut right_min = h;
            for &v in &x[p + 1..] {
                if v > h {
                    break;
                }
                right_min = right_min.min(v);
            }
            h - left_min.max(right_min)
        })
        .collect()
}

/// Local maxima separated by at least `min_distance` samples with prominence at least `min_prominence`.
pub fn find_peaks<T: Scalar>(x: &[T], min_distance: usize, min_prominence: T) -> Vec<usize> {
    let peaks = select_by_distance(x, &local_maxima(x), min_distance);
    let prom = prominences(x, &peaks);
    peaks
        .into_iter()
        .zip(prom)
        .filter(|(_, p)| *p >= min_prominence)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Extremum {
    Peak,
    Trough,
}

/// Merges peaks and troughs into a strictly alternating sequence in which every
/// trough lies below its neighbouring peaks.
fn alternate<T: Scalar>(x: &[T], peaks: &[usize], troughs: &[usize]) -> Vec<(usize, Extremum)> {
    let mut events: Vec<(usize, Extremum)> = peaks
        .iter()
        .map(|&i| (i, Extremum::Peak))
        .chain(troughs.iter().map(|&i| (i, Extremum::Trough)))
        .collect();
    events.sort_by_key(|&(i, _)| i);
    let mut seq: Vec<(usize, Extremum)> = Vec::with_capacity(events.len());
    for (i, kind) in events {
        match seq.last().copied() {
            None => seq.push((i, kind)),
            Some((j, prev)) if prev == kind => {
                let replace = match kind {
                    Extremum::Peak => x[i] > x[j],
                    Extremum::Trough => x[i] < x[j],
                };
                if replace {
                    *seq.last_mut().unwrap() = (i, kind);
                }
            }
            Some((j, _)) => {
                let valid = match kind {
                    Extremum::Peak => x[i] > x[j],
                    Extremum::Trough => x[i] < x[j],
                };
                if valid {
                    seq.push((i, kind));
                }
            }
        }
    }
    seq
}

/// Detects tapping cycles and derives amplitudes, intervals and per-cycle speeds.
pub fn detect_cycles<T: Scalar>(s: &TapSignal<T>, params: &PeakParams) -> Result<CycleSeries<T>> {
    let x = &s.samples;
    let range = percentile(x, T::lit(0.95)) - percentile(x, T::lit(0.05));
    let min_prominence = T::lit(params.prominence_frac) * range;
    let min_distance = (params.min_separation_s * s.fps.as_f64()).ceil().max(1.0) as usize;

    let peaks = find_peaks(x, min_distance, min_prominence);
    let negated: Vec<T> = x.iter().map(|&v| -v).collect();
    let troughs = find_peaks(&negated, min_distance, min_prominence);

    let mut seq = alternate(x, &peaks, &troughs);
    while matches!(seq.last(), Some((_, Extremum::Trough))) {
        seq.pop();
    }
    let peak_indices: Vec<usize> = seq
        .iter()
        .filter(|(_, k)| *k == Extremum::Peak)
        .map(|&(i, _)| i)
        .collect();
    if peak_indices.len() < MIN_PEAKS {
        return Err(Error::InsufficientCycles {
            found: peak_indices.len(),
            needed: MIN_PEAKS,
        });
    }
    let trough_indices: Vec<usize> = seq
        .iter()
        .filter(|(_, k)| *k == Extremum::Trough)
        .map(|&(i, _)| i)
        .collect();
    let amplitudes: Vec<T> = seq
        .windows(2)
        .filter(|w| w[0].1 == Extremum::Trough)
        .map(|w| x[w[1].0] - x[w[0].0])
        .collect();

    let speed = speed_signal(s);
    let peak_times = peak_indices.iter().map(|&i| s.time(i)).collect();
    let mut intervals = Vec::with_capacity(peak_indices.len() - 1);
    let mut cas = Vec::with_capacity(peak_indices.len() - 1);
    let mut cms = Vec::with_capacity(peak_indices.len() - 1);
    for w in peak_indices.windows(2) {
        let (a, b) = (w[0], w[1]);
        intervals.push(T::from_count(b - a) / s.fps);
        let pool = &speed.samples[a..b];
        cas.push(pool.iter().copied().sum::<T>() / T::from_count(pool.len()));
        let mut measured: Vec<T> = pool
            .iter()
            .zip(&speed.interpolated[a..b])
            .filter(|(_, &interp)| !interp)
            .map(|(&v, _)| v)
            .collect();
        if measured.is_empty() {
            measured = pool.to_vec();
        }
        measured.sort_by(|p, q| p.partial_cmp(q).expect("finite"));
        cms.push(percentile_sorted(&measured, T::lit(0.95)));
    }

    Ok(CycleSeries {
        peak_indices,
        trough_indices,
        peak_times,
        amplitudes,
        intervals,
        cycle_avg_speed: cas,
        cycle_max_speed: cms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{LandmarkFrame, MedState};

    fn frame_with(i: usize, thumb: Point, index: Point, wrist: Point, mcp: Point) -> LandmarkFrame {
        let mut pts = [[50.0, 50.0]; NUM_LANDMARKS];
        pts[THUMB_TIP] = thumb;
        pts[INDEX_TIP] = index;
        pts[WRIST] = wrist;
        pts[INDEX_MCP] = mcp;
        LandmarkFrame::new(i, pts, None).unwrap()
    }

    fn rec(frames: Vec<LandmarkFrame>) -> Recording {
        Recording::new(frames, 25.0, "p", "v", MedState::Unknown, vec![]).unwrap()
    }

    #[test]
    fn three_four_five_triangle() {
        let f = |i| frame_with(i, [0.0, 0.0], [3.0, 4.0], [0.0, 0.0], [0.0, 5.0]);
        let s = distance_signal::<f64>(&rec(vec![f(0), f(1)])).unwrap();
        assert_eq!(s.samples, vec![1.0, 1.0]);
    }

    #[test]
    fn closed_hand_is_zero() {
        let f = |i| frame_with(i, [7.0, 3.0], [7.0, 3.0], [0.0, 0.0], [0.0, 5.0]);
        let s = distance_signal::<f64>(&rec(vec![f(0), f(1)])).unwrap();
        assert_eq!(s.samples, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_palm_is_degenerate() {
        let ok = frame_with(0, [0.0, 0.0], [3.0, 4.0], [0.0, 0.0], [0.0, 5.0]);
        let bad = frame_with(1, [0.0, 0.0], [3.0, 4.0], [2.0, 2.0], [2.0, 2.0]);
        match distance_signal::<f64>(&rec(vec![ok, bad])) {
            Err(Error::DegenerateGeometry { frame, .. }) => assert_eq!(frame, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn angle_examples() {
        let orth = |i| frame_with(i, [1.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 5.0]);
        let s = angle_signal::<f64>(&rec(vec![orth(0), orth(1)])).unwrap();
        assert!((s.samples[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

        let opp = |i| frame_with(i, [1.0, 0.0], [-1.0, 0.0], [0.0, 0.0], [0.0, 5.0]);
        let s = angle_signal::<f64>(&rec(vec![opp(0), opp(1)])).unwrap();
        assert!((s.samples[0] - std::f64::consts::PI).abs() < 1e-15);

        let collinear = |i| frame_with(i, [2.0, 2.0], [5.0, 5.0], [0.0, 0.0], [0.0, 5.0]);
        let s = angle_signal::<f64>(&rec(vec![collinear(0), collinear(1)])).unwrap();
        assert!(s.samples[0].abs() < 1e-12);

        let degenerate = |i| frame_with(i, [0.0, 0.0], [5.0, 5.0], [0.0, 0.0], [0.0, 5.0]);
        assert!(matches!(
            angle_signal::<f64>(&rec(vec![degenerate(0), degenerate(1)])),
            Err(Error::DegenerateGeometry { .. })
        ));
    }

    #[test]
    fn gaps_are_interpolated() {
        let f = |i: usize, d: f64| frame_with(i, [0.0, 0.0], [d, 0.0], [0.0, 0.0], [0.0, 1.0]);
        let mut frames = vec![f(0, 1.0), f(1, 2.0)];
        frames.push(LandmarkFrame::missing(2));
        frames.push(f(4, 5.0));
        let s = distance_signal::<f64>(&rec(frames)).unwrap();
        assert_eq!(s.samples, vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.interpolated, vec![false, false, true, true, false]);
    }

    #[test]
    fn speed_examples() {
        let c = TapSignal::new(vec![0.3_f64; 5], 25.0, SignalKind::Distance).unwrap();
        assert!(speed_signal(&c).samples.iter().all(|&v| v == 0.0));
        let s = TapSignal::new(vec![0.0_f64, 0.5], 25.0, SignalKind::Distance).unwrap();
        assert_eq!(speed_signal(&s).samples, vec![12.5]);
    }

    #[test]
    fn triangle_wave_plateau_speed() {
        // triangle wave of half-range A (0..2A), period P: |slope| = 2A / (P/2)
        let (a, p, fps) = (1.0_f64, 0.8, 25.0);
        let samples: Vec<f64> = (0..250)
            .map(|i| {
                let ph = (i as f64 / fps / p).fract();
                if ph < 0.5 {
                    4.0 * a * ph
                } else {
                    4.0 * a * (1.0 - ph)
                }
            })
            .collect();
        let s = TapSignal::new(samples, fps, SignalKind::Distance).unwrap();
        let speed = speed_signal(&s);
        let plateau = 2.0 * a * 2.0 / p;
        let mut sorted = speed.samples.clone();
        sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let median = sorted[sorted.len() / 2];
        assert!((median - plateau).abs() <= 2.0 / fps, "{median} vs {plateau}");
    }

    #[test]
    fn sinusoid_cycles() {
        let fps = 25.0_f64;
        let samples: Vec<f64> = (0..250)
            .map(|i| 0.6 + 0.5 * (2.0 * std::f64::consts::PI * 2.0 * i as f64 / fps).sin())
            .collect();
        let s = TapSignal::new(samples, fps, SignalKind::Distance).unwrap();
        let c = detect_cycles(&s, &PeakParams::default()).unwrap();
        assert!((19..=21).contains(&c.peak_indices.len()), "{}", c.peak_indices.len());
        for ti in &c.intervals {
            assert!((ti - 0.5).abs() <= 0.04 + 1e-12, "{ti}");
        }
        assert_eq!(c.amplitudes.len(), c.peak_indices.len().min(c.trough_indices.len()));
        assert_eq!(c.intervals.len(), c.peak_indices.len() - 1);
        assert!(c.amplitudes.iter().all(|&a| a > 0.0));
        for (cas, cms) in c.cycle_avg_speed.iter().zip(&c.cycle_max_speed) {
            assert!(cms + 1e-12 >= *cas);
        }
    }

    #[test]
    fn ramp_has_no_cycles() {
        let s = TapSignal::new((0..100).map(|i| i as f64 * 0.01).collect(), 25.0, SignalKind::Distance).unwrap();
        assert!(matches!(
            detect_cycles(&s, &PeakParams::default()),
            Err(Error::InsufficientCycles { .. })
        ));
    }

    #[test]
    fn plateau_peak_midpoint() {
        let x = [0.0_f64, 1.0, 2.0, 2.0, 2.0, 1.0, 0.0];
        assert_eq!(local_maxima(&x), vec![3]);
        let x = [0.0_f64, 2.0, 2.0, 0.0];
        assert_eq!(local_maxima(&x), vec![1]);
        // a plateau running into the edge is not a peak
        let x = [0.0_f64, 2.0, 2.0];
        assert!(local_maxima(&x).is_empty());
    }

    #[test]
    fn distance_filter_keeps_highest() {
        let x = [0.0_f64, 1.0, 0.0, 3.0, 0.0, 2.0, 0.0, 0.0, 0.0, 1.5, 0.0];
        assert_eq!(select_by_distance(&x, &local_maxima(&x), 3), vec![3, 9]);
    }

    #[test]
    fn prominence_of_nested_peaks() {
        let x = [0.0_f64, 3.0, 1.0, 2.0, 0.5, 4.0, 0.0];
        let p = local_maxima(&x);
        assert_eq!(p, vec![1, 3, 5]);
        assert_eq!(prominences(&x, &p), vec![2.5, 1.0, 4.0]);
    }

    #[test]
    fn f32_signal_works() {
        let fps = 25.0_f32;
        let samples: Vec<f32> = (0..250)
            .map(|i| 0.6 + 0.5 * (2.0 * std::f32::consts::PI * 2.0 * i as f32 / fps).sin())
            .collect();
        let s = TapSignal::new(samples, fps, SignalKind::Distance).unwrap();
        let c = detect_cycles(&s, &PeakParams::default()).unwrap();
        assert!(c.peak_indices.len() >= 19);
    }
}
