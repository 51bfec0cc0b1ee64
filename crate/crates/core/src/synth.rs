//! Deterministic synthetic tapping signals, landmark recordings and labelled cohorts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classify::TrainingTable;
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::{extract_features, FEATURE_NAMES, NUM_FEATURES};
use crate::ingest::{LandmarkFrame, MedState, Point, Recording, INDEX_MCP, INDEX_TIP, NUM_LANDMARKS, THUMB_TIP, WRIST};
use crate::linalg::Matrix;
use crate::pca::{FeatureTable, RowKey};
use crate::scalar::Scalar;
use crate::signal::{SignalKind, TapSignal};

/// Distance-signal level of the closed hand.
pub const REST_DISTANCE: f64 = 0.1;

/// Wrist-to-index-MCP length of the template hand in pixels.
pub const HAND_SIZE_PX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    pub base_amplitude: f64,
    /// Taps per second at the first cycle.
    pub tap_rate: f64,
    /// Fractional amplitude loss per cycle.
    pub amp_decay: f64,
    /// Fractional tap-rate loss per cycle.
    pub rate_decay: f64,
    pub amp_jitter_cov: f64,
    pub interval_jitter_cov: f64,
    /// Probability of a pause after each cycle.
    pub pause_prob: f64,
    pub pause_duration_s: f64,
    pub duration_s: f64,
    pub fps: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            base_amplitude: 1.0,
            tap_rate: 2.0,
            amp_decay: 0.0,
            rate_decay: 0.0,
            amp_jitter_cov: 0.0,
            interval_jitter_cov: 0.0,
            pause_prob: 0.0,
            pause_duration_s: 0.0,
            duration_s: 10.0,
            fps: 30.0,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (
                self.base_amplitude > 0.0 && self.base_amplitude.is_finite(),
                "base_amplitude must be positive",
            ),
            (
                self.tap_rate > 0.0 && self.tap_rate.is_finite(),
                "tap_rate must be positive",
            ),
            ((0.0..=0.2).contains(&self.amp_decay), "amp_decay must be in [0, 0.2]"),
            ((0.0..=0.2).contains(&self.rate_decay), "rate_decay must be in [0, 0.2]"),
            (
                (0.0..=1.0).contains(&self.amp_jitter_cov),
                "amp_jitter_cov must be in [0, 1]",
            ),
            (
                (0.0..=1.0).contains(&self.interval_jitter_cov),
                "interval_jitter_cov must be in [0, 1]",
            ),
            ((0.0..=1.0).contains(&self.pause_prob), "pause_prob must be in [0, 1]"),
            (
                self.pause_duration_s >= 0.0 && self.pause_duration_s.is_finite(),
                "pause_duration_s must be non-negative",
            ),
            (
                self.duration_s > 0.0 && self.duration_s.is_finite(),
                "duration_s must be positive",
            ),
            (self.fps > 0.0 && self.fps.is_finite(), "fps must be positive"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }
}

/// One programmed tap: the peak time and height above rest, the interval to the
/// next peak, and the pause held at rest before the next opening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthCycle {
    pub peak_s: f64,
    pub amplitude: f64,
    pub interval_s: f64,
    pub pause_after_s: f64,
}

/// Lognormal factor with mean 1 and the given coefficient of variation.
fn lognormal_factor(cov: f64, z: f64) -> f64 {
    if cov == 0.0 {
        return 1.0;
    }
    let s2 = (1.0 + cov * cov).ln();
    (-s2 / 2.0 + s2.sqrt() * z).exp()
}

/// Programmed cycles whose closing half fits in the recording.
pub fn program_cycles(p: &SynthParams) -> Result<Vec<SynthCycle>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut cycles = Vec::new();
    let mut peak = f64::NAN;
    for j in 0.. {
        let za: f64 = rng.sample(StandardNormal);
        let zi: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let amplitude = p.base_amplitude * (1.0 - p.amp_decay).powi(j) * lognormal_factor(p.amp_jitter_cov, za);
        let interval = (1.0 / p.tap_rate) / (1.0 - p.rate_decay).powi(j) * lognormal_factor(p.interval_jitter_cov, zi);
        let pause = if u < p.pause_prob { p.pause_duration_s } else { 0.0 };
        if j == 0 {
            peak = interval / 2.0;
        }
        if peak + interval / 2.0 > p.duration_s + 1e-9 {
            break;
        }
        cycles.push(SynthCycle {
            peak_s: peak,
            amplitude,
            interval_s: interval,
            pause_after_s: pause,
        });
        peak += interval + pause;
    }
    if cycles.is_empty() {
        return Err(Error::Config(format!(
            "{} s is too short for one cycle at {} Hz",
            p.duration_s, p.tap_rate
        )));
    }
    Ok(cycles)
}

fn raised(a: f64, phase: f64) -> f64 {
    a * (1.0 - (std::f64::consts::PI * phase).cos()) / 2.0
}

/// Distance-signal value at time `t` for the programmed cycles.
fn waveform(cycles: &[SynthCycle], t: f64) -> f64 {
    let first = &cycles[0];
    if t <= first.peak_s {
        return REST_DISTANCE + raised(first.amplitude, t / first.peak_s);
    }
    let j = cycles.partition_point(|c| c.peak_s <= t) - 1;
    let c = &cycles[j];
    let half = c.interval_s / 2.0;
    let tau = t - c.peak_s;
    if tau <= half {
        return REST_DISTANCE + raised(c.amplitude, 1.0 - tau / half);
    }
    let Some(next) = cycles.get(j + 1) else {
        return REST_DISTANCE;
    };
    let rise = tau - half - c.pause_after_s;
    if rise <= 0.0 {
        REST_DISTANCE
    } else {
        REST_DISTANCE + raised(next.amplitude, (rise / half).min(1.0))
    }
}

/// Raised-cosine open/close waveform sampled at `fps`, with its programmed cycles.
pub fn generate_signal<T: Scalar>(p: &SynthParams) -> Result<(TapSignal<T>, Vec<SynthCycle>)> {
    let cycles = program_cycles(p)?;
    let n = (p.duration_s * p.fps).round() as usize;
    let samples = (0..n).map(|i| T::lit(waveform(&cycles, i as f64 / p.fps))).collect();
    Ok((TapSignal::new(samples, T::lit(p.fps), SignalKind::Distance)?, cycles))
}

/// Placement of the synthetic hand in the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandPose {
    pub scale: f64,
    pub rotation_deg: f64,
    pub offset: Point,
    /// Direction of finger opening relative to the wrist-to-fingertips direction.
    /// 90 degrees is a front view; values near 0 make wrist, thumb and index
    /// nearly collinear.
    pub opening_axis_deg: f64,
}

impl HandPose {
    pub fn front() -> Self {
        Self {
            scale: 1.0,
            rotation_deg: 0.0,
            offset: [320.0, 400.0],
            opening_axis_deg: 90.0,
        }
    }

    pub fn lateral() -> Self {
        Self {
            opening_axis_deg: 3.0,
            ..Self::front()
        }
    }
}

/// Template landmark positions in hand units (wrist at the origin, index MCP at
/// `(0, -1)`, image y pointing down).
const TEMPLATE: [Point; NUM_LANDMARKS] = [
    [0.0, 0.0],
    [-0.35, -0.25],
    [-0.6, -0.55],
    [-0.75, -0.85],
    [0.0, 0.0],
    [0.0, -1.0],
    [0.0, -1.4],
    [0.0, -1.7],
    [0.0, 0.0],
    [0.25, -0.95],
    [0.27, -1.45],
    [0.28, -1.8],
    [0.29, -2.05],
    [0.48, -0.85],
    [0.52, -1.3],
    [0.55, -1.6],
    [0.57, -1.85],
    [0.68, -0.7],
    [0.74, -1.05],
    [0.77, -1.3],
    [0.79, -1.5],
];

/// Midpoint between thumb and index tips in hand units.
const TIP_MIDPOINT: Point = [-0.4, -1.5];

fn hand_points(s: f64, pose: &HandPose) -> [Point; NUM_LANDMARKS] {
    let radial = {
        let n = TIP_MIDPOINT[0].hypot(TIP_MIDPOINT[1]);
        [TIP_MIDPOINT[0] / n, TIP_MIDPOINT[1] / n]
    };
    let (sa, ca) = pose.opening_axis_deg.to_radians().sin_cos();
    let u = [ca * radial[0] - sa * radial[1], sa * radial[0] + ca * radial[1]];
    let mut pts = TEMPLATE;
    pts[THUMB_TIP] = [TIP_MIDPOINT[0] - s / 2.0 * u[0], TIP_MIDPOINT[1] - s / 2.0 * u[1]];
    pts[INDEX_TIP] = [TIP_MIDPOINT[0] + s / 2.0 * u[0], TIP_MIDPOINT[1] + s / 2.0 * u[1]];
    let (sr, cr) = pose.rotation_deg.to_radians().sin_cos();
    let k = HAND_SIZE_PX * pose.scale;
    pts.map(|[x, y]| {
        [
            pose.offset[0] + k * (cr * x - sr * y),
            pose.offset[1] + k * (sr * x + cr * y),
        ]
    })
}

/// Landmark recording whose distance signal reproduces [`generate_signal`].
pub fn generate_landmarks(p: &SynthParams) -> Result<Recording> {
    generate_landmarks_with(p, &HandPose::front())
}

pub fn generate_landmarks_with(p: &SynthParams, pose: &HandPose) -> Result<Recording> {
    let (signal, _) = generate_signal::<f64>(p)?;
    debug_assert_eq!(TEMPLATE[WRIST], [0.0, 0.0]);
    debug_assert_eq!(TEMPLATE[INDEX_MCP], [0.0, -1.0]);
    let frames = signal
        .samples
        .iter()
        .enumerate()
        .map(|(i, &s)| LandmarkFrame::new(i, hand_points(s, pose), Some(1.0)))
        .collect::<Result<Vec<_>>>()?;
    Recording::new(
        frames,
        p.fps,
        "synth",
        format!("synth-{}", p.seed),
        MedState::Unknown,
        Vec::new(),
    )
}

/// Anchor tapping intervals of the mildest and most severe profiles, in seconds.
pub const HEALTHY_TI_S: f64 = 0.28;
pub const SEVERE_TI_S: f64 = 0.56;

/// Base interval such that the mean peak-to-peak interval over the cycles that fit
/// in `duration_s` equals `target_ti` when jitter averages out.
fn calibrated_interval(target_ti: f64, rate_decay: f64, pause_prob: f64, pause_s: f64, duration_s: f64) -> f64 {
    let pause = pause_prob * pause_s;
    let mut base = target_ti - pause;
    for _ in 0..100 {
        let mut growth = Vec::new();
        let mut t = base / 2.0;
        for j in 0.. {
            let g = (1.0 - rate_decay).powi(-j);
            if t + base * g / 2.0 > duration_s {
                break;
            }
            growth.push(g);
            t += base * g + pause;
        }
        growth.pop();
        let mean_g = growth.iter().sum::<f64>() / growth.len().max(1) as f64;
        let next = (target_ti - pause) / mean_g;
        if (next - base).abs() < 1e-12 {
            break;
        }
        base = next;
    }
    base
}

/// Five severity profiles (levels 0..4). Tapping intervals interpolate
/// geometrically between the healthy and severe anchors; amplitude shrinks and
/// decay, jitter and pauses grow with severity.
pub fn severity_profiles() -> [SynthParams; 5] {
    const AMPLITUDE: [f64; 5] = [1.2, 1.0, 0.82, 0.66, 0.5];
    const AMP_DECAY: [f64; 5] = [0.0, 0.005, 0.01, 0.015, 0.02];
    const RATE_DECAY: [f64; 5] = [0.0, 0.0025, 0.005, 0.0075, 0.01];
    const JITTER: [f64; 5] = [0.03, 0.06, 0.1, 0.15, 0.2];
    const PAUSE_PROB: [f64; 5] = [0.0, 0.0, 0.0, 0.04, 0.08];
    const PAUSE_S: f64 = 0.7;
    const DURATION_S: f64 = 12.0;
    std::array::from_fn(|k| {
        let target = HEALTHY_TI_S * (SEVERE_TI_S / HEALTHY_TI_S).powf(k as f64 / 4.0);
        let base = calibrated_interval(target, RATE_DECAY[k], PAUSE_PROB[k], PAUSE_S, DURATION_S);
        SynthParams {
            base_amplitude: AMPLITUDE[k],
            tap_rate: 1.0 / base,
            amp_decay: AMP_DECAY[k],
            rate_decay: RATE_DECAY[k],
            amp_jitter_cov: JITTER[k],
            interval_jitter_cov: JITTER[k],
            pause_prob: PAUSE_PROB[k],
            pause_duration_s: PAUSE_S,
            duration_s: DURATION_S,
            fps: 30.0,
            seed: 0,
        }
    })
}

/// Coefficient of variation of the per-patient parameter perturbations.
pub const PATIENT_COV: f64 = 0.06;

/// Perturbed parameters for every video of the cohort, with labels and row keys.
fn cohort_plan(
    profiles: &[SynthParams],
    patients: usize,
    videos_per_patient: usize,
    seed: u64,
) -> Result<Vec<(SynthParams, u8, RowKey)>> {
    if patients == 0 || videos_per_patient == 0 || profiles.is_empty() {
        return Err(Error::Config(
            "cohort needs at least one profile, patient and video".into(),
        ));
    }
    if profiles.len() > 5 {
        return Err(Error::Config(format!(
            "{} profiles for 5 severity levels",
            profiles.len()
        )));
    }
    let mut plan = Vec::new();
    for (level, base) in profiles.iter().enumerate() {
        base.validate()?;
        for pi in 0..patients {
            let patient_seed = derive_seed(seed, (level * 1_000_003 + pi) as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(patient_seed);
            let za: f64 = rng.sample(StandardNormal);
            let zr: f64 = rng.sample(StandardNormal);
            let patient = format!("L{level}-P{pi:03}");
            for v in 0..videos_per_patient {
                let p = SynthParams {
                    base_amplitude: base.base_amplitude * lognormal_factor(PATIENT_COV, za),
                    tap_rate: base.tap_rate * lognormal_factor(PATIENT_COV, zr),
                    seed: derive_seed(patient_seed, v as u64 + 1),
                    ..*base
                };
                plan.push((p, level as u8, RowKey::new(format!("{patient}-V{v}"), patient.clone())));
            }
        }
    }
    Ok(plan)
}

/// Labelled feature table with `patients` patients per profile; the label is the
/// profile index.
pub fn generate_cohort<T: Scalar>(
    profiles: &[SynthParams],
    patients: usize,
    videos_per_patient: usize,
    seed: u64,
) -> Result<TrainingTable<T>> {
    use rayon::prelude::*;
    let plan = cohort_plan(profiles, patients, videos_per_patient, seed)?;
    let rows: Vec<[T; NUM_FEATURES]> = plan
        .par_iter()
        .map(|(p, _, _)| {
            let (s, _) = generate_signal::<T>(p)?;
            Ok(extract_features(&s)?.to_array())
        })
        .collect::<Result<_>>()?;
    let columns = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let keys = plan.iter().map(|(_, _, k)| k.clone()).collect();
    let labels = plan.iter().map(|(_, l, _)| *l).collect();
    TrainingTable::new(FeatureTable::new(columns, keys, Matrix::from_rows(&rows))?, labels)
}

/// The cohort of [`generate_cohort`] as landmark recordings, each carrying its
/// label as a single rater score.
pub fn generate_cohort_recordings(
    profiles: &[SynthParams],
    patients: usize,
    videos_per_patient: usize,
    seed: u64,
    pose: &HandPose,
) -> Result<Vec<Recording>> {
    use rayon::prelude::*;
    cohort_plan(profiles, patients, videos_per_patient, seed)?
        .into_par_iter()
        .map(|(p, label, key)| {
            let mut r = generate_landmarks_with(&p, pose)?;
            r.patient_id = key.patient_id;
            r.video_id = key.video_id;
            r.rater_scores = vec![label];
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::distance_signal;

    #[test]
    fn two_hertz_ten_seconds() {
        let (s, cycles) = generate_signal::<f64>(&SynthParams::default()).unwrap();
        assert_eq!(cycles.len(), 20);
        assert!(cycles.iter().all(|c| (c.interval_s - 0.5).abs() < 1e-12));
        assert_eq!(s.len(), 300);
    }

    #[test]
    fn amplitude_decay_is_exact() {
        let p = SynthParams {
            amp_decay: 0.015,
            ..SynthParams::default()
        };
        let (_, cycles) = generate_signal::<f64>(&p).unwrap();
        for (j, c) in cycles.iter().enumerate() {
            assert_eq!(c.amplitude, (1.0 - 0.015f64).powi(j as i32));
        }
    }

    #[test]
    fn seeded_output_is_identical() {
        let p = SynthParams {
            amp_jitter_cov: 0.2,
            interval_jitter_cov: 0.2,
            pause_prob: 0.1,
            pause_duration_s: 0.5,
            seed: 9,
            ..SynthParams::default()
        };
        assert_eq!(generate_signal::<f64>(&p).unwrap(), generate_signal::<f64>(&p).unwrap());
    }

    #[test]
    fn too_short_for_a_cycle() {
        let p = SynthParams {
            duration_s: 0.2,
            ..SynthParams::default()
        };
        assert!(matches!(generate_signal::<f64>(&p), Err(Error::Config(_))));
        assert!(SynthParams { amp_decay: 0.5, ..p }.validate().is_err());
    }

    #[test]
    fn landmarks_reproduce_signal() {
        let p = SynthParams {
            amp_jitter_cov: 0.1,
            interval_jitter_cov: 0.1,
            seed: 4,
            ..SynthParams::default()
        };
        let (s, _) = generate_signal::<f64>(&p).unwrap();
        for pose in [
            HandPose::front(),
            HandPose {
                scale: 3.0,
                ..HandPose::front()
            },
            HandPose {
                rotation_deg: 30.0,
                ..HandPose::front()
            },
        ] {
            let r = generate_landmarks_with(&p, &pose).unwrap();
            let back = distance_signal::<f64>(&r).unwrap();
            let err = back
                .samples
                .iter()
                .zip(&s.samples)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "{err}");
        }
    }

    #[test]
    fn cohort_shape() {
        let t = generate_cohort::<f64>(&severity_profiles(), 10, 2, 1).unwrap();
        assert_eq!(t.n_rows(), 100);
        assert_eq!(t.class_counts(), [20; 5]);
        assert_eq!(t.patients().len(), 50);
    }
}
