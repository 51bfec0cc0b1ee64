use taplab_core::features::extract_features;
use taplab_core::signal::{detect_cycles, PeakParams};
use taplab_core::synth::{generate_signal, program_cycles, severity_profiles, SynthParams};

fn ols_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let num: f64 = ys.iter().enumerate().map(|(i, y)| (i as f64 - xbar) * (y - ybar)).sum();
    let den: f64 = (0..ys.len()).map(|i| (i as f64 - xbar).powi(2)).sum();
    num / den
}

fn direction(xs: &[f64]) -> f64 {
    let up = xs.windows(2).all(|w| w[1] > w[0]);
    let down = xs.windows(2).all(|w| w[1] < w[0]);
    if up {
        1.0
    } else if down {
        -1.0
    } else {
        0.0
    }
}

#[test]
fn clean_signal_recovers_peaks_and_intervals() {
    for rate in [1.5, 2.0, 3.0, 4.0] {
        let p = SynthParams {
            tap_rate: rate,
            ..SynthParams::default()
        };
        let (s, prog) = generate_signal::<f64>(&p).unwrap();
        let c = detect_cycles(&s, &PeakParams::default()).unwrap();
        assert_eq!(c.peak_indices.len(), prog.len(), "rate {rate}");
        let frame = 1.0 / p.fps;
        for (got, want) in c.intervals.iter().zip(&prog) {
            assert!(
                (got - want.interval_s).abs() <= frame + 1e-12,
                "rate {rate}: {got} vs {}",
                want.interval_s
            );
        }
    }
}

#[test]
fn features_match_programmed_values() {
    let p = SynthParams {
        tap_rate: 2.5,
        base_amplitude: 0.8,
        amp_decay: 0.02,
        duration_s: 12.0,
        ..SynthParams::default()
    };
    let (s, prog) = generate_signal::<f64>(&p).unwrap();
    let f = extract_features(&s).unwrap();
    // the first peak has no trough before it, so its amplitude is never measured
    let amps: Vec<f64> = prog[1..].iter().map(|c| c.amplitude).collect();
    let mean_amp = amps.iter().sum::<f64>() / amps.len() as f64;
    assert!((f.ti_avg - 1.0 / p.tap_rate).abs() <= 1.0 / p.fps);
    assert!(
        (f.amp_avg - mean_amp).abs() <= 0.02 * mean_amp,
        "{} vs {mean_amp}",
        f.amp_avg
    );
    let slope = ols_slope(&amps);
    assert!(
        (f.amp_slope - slope).abs() <= 0.1 * slope.abs(),
        "{} vs {slope}",
        f.amp_slope
    );
    assert_eq!(f.n_interruptions, 0);
}

#[test]
fn fast_tapping_amplitude_loss_is_bounded_by_frame_quantization() {
    for rate in [3.25, 3.57, 4.0, 5.0] {
        let p = SynthParams {
            tap_rate: rate,
            base_amplitude: 0.6,
            duration_s: 12.0,
            ..SynthParams::default()
        };
        let (s, _) = generate_signal::<f64>(&p).unwrap();
        let f = extract_features(&s).unwrap();
        // peak and trough can each sit half a frame off the raised-cosine extremum
        let bound = 1.0 - (std::f64::consts::PI * rate / p.fps).cos();
        let rel = (p.base_amplitude - f.amp_avg) / p.base_amplitude;
        assert!(rel > -1e-12 && rel <= bound, "rate {rate}: loss {rel} vs bound {bound}");
    }
}

#[test]
fn interval_jitter_is_recovered_over_many_cycles() {
    for (cov, seed) in [(0.05, 1), (0.1, 2), (0.2, 3)] {
        let p = SynthParams {
            interval_jitter_cov: cov,
            duration_s: 70.0,
            seed,
            ..SynthParams::default()
        };
        let (s, prog) = generate_signal::<f64>(&p).unwrap();
        assert!(prog.len() >= 100);
        let f = extract_features(&s).unwrap();
        assert!(
            (f.cov_ti - cov).abs() <= 0.05,
            "programmed {cov}, estimated {}",
            f.cov_ti
        );
    }
}

#[test]
fn inserted_pauses_are_counted() {
    for seed in 0..8 {
        let p = SynthParams {
            pause_prob: 0.15,
            pause_duration_s: 0.7,
            duration_s: 15.0,
            seed,
            ..SynthParams::default()
        };
        let prog = program_cycles(&p).unwrap();
        // a pause after the final peak never produces an interval
        let inserted = prog[..prog.len() - 1].iter().filter(|c| c.pause_after_s > 0.0).count();
        let (s, _) = generate_signal::<f64>(&p).unwrap();
        assert_eq!(extract_features(&s).unwrap().n_interruptions, inserted, "seed {seed}");
    }
}

#[test]
fn severity_sweep_orders_features() {
    let mut rows = Vec::new();
    for profile in severity_profiles() {
        let mut acc = [0.0; 7];
        let seeds = 6;
        for seed in 0..seeds {
            let p = SynthParams { seed, ..profile };
            let f = extract_features(&generate_signal::<f64>(&p).unwrap().0).unwrap();
            for (a, v) in acc.iter_mut().zip([
                f.amp_avg, f.cas_avg, f.cms_avg, f.ti_avg, f.cov_amp, f.cov_ti, f.cov_cas,
            ]) {
                *a += v / seeds as f64;
            }
        }
        rows.push(acc);
    }
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    for j in 0..3 {
        assert_eq!(direction(&col(j)), -1.0, "feature {j}: {:?}", col(j));
    }
    for j in 3..7 {
        assert_eq!(direction(&col(j)), 1.0, "feature {j}: {:?}", col(j));
    }
}
