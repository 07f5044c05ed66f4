mod common;

use std::f64::consts::TAU;

use common::{brute_force_ls_power, dft_power, gaussian, rng};
use gapband_core::corruption::point_removal;
use gapband_core::spectral::{normalize_by_retention, periodogram, power_at, FrequencyGrid};
use gapband_core::synth::{generate_mixture, MixtureSpec};
use gapband_core::TimeStampedSeries;
use proptest::prelude::*;
use rand::Rng;

fn random_gappy(seed: u64) -> TimeStampedSeries {
    let mut r = rng(seed);
    let n = r.random_range(40..400);
    let rate = 250.0;
    let keep = r.random_range(0.2..1.0);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for i in 0..n {
        if r.random::<f64>() < keep {
            let t = i as f64 / rate;
            times.push(t);
            values.push(gaussian(&mut r) + 2.0 * (TAU * 11.0 * t).sin());
        }
    }
    TimeStampedSeries::new(times, values).unwrap()
}

#[test]
fn least_squares_power_matches_brute_force_fit() {
    for seed in 0..200 {
        let s = random_gappy(seed);
        if s.len() < 8 {
            continue;
        }
        for f in [1.5, 8.0, 11.0, 23.7, 60.0] {
            let got = power_at(&s, TAU * f).unwrap();
            let want = brute_force_ls_power(s.times(), s.values(), TAU * f);
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(got.abs()),
                "seed {seed} f {f}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn uniform_grid_matches_dft() {
    let mut r = rng(7);
    let n = 250;
    let values: Vec<f64> = (0..n).map(|_| gaussian(&mut r)).collect();
    let s = TimeStampedSeries::uniform(250.0, values.clone()).unwrap();
    for k in 1..n / 2 {
        let got = power_at(&s, TAU * k as f64).unwrap();
        let want = dft_power(&values, k);
        assert!((got - want).abs() <= 1e-9 * want, "bin {k}: {got} vs {want}");
    }
}

#[test]
fn mixture_ratio_with_half_the_points_removed() {
    let spec = MixtureSpec::default();
    let s = generate_mixture(&spec, 3).unwrap();
    let mask = point_removal(s.len(), 0.5, 4).unwrap();
    let g = s.retain(mask.kept()).unwrap();
    let ratio = power_at(&g, TAU * 3.0).unwrap() / power_at(&g, TAU * 6.0).unwrap();
    assert!((ratio / 2.25 - 1.0).abs() < 0.10, "ratio {ratio}");
}

#[test]
fn six_hz_peak_survives_heavy_removal() {
    let s =
        TimeStampedSeries::uniform(250.0, (0..1000).map(|i| (TAU * 6.0 * i as f64 / 250.0).cos()).collect()).unwrap();
    let grid = FrequencyGrid::linear(1.0, 10.0, 1.0).unwrap();
    assert_eq!(periodogram(&s, &grid).unwrap().argmax(), Some(6.0));
    for seed in 0..10 {
        let g = s.retain(point_removal(1000, 0.8, seed).unwrap().kept()).unwrap();
        assert_eq!(periodogram(&g, &grid).unwrap().argmax(), Some(6.0));
    }
}

#[test]
fn off_peak_leakage_is_small() {
    let spec = MixtureSpec::default();
    let grid = FrequencyGrid::mixture_default();
    for (i, p) in [0.0, 0.2, 0.5, 0.8].into_iter().enumerate() {
        let s = generate_mixture(&spec, i as u64).unwrap();
        let g = s
            .retain(point_removal(s.len(), p, 10 + i as u64).unwrap().kept())
            .unwrap();
        let spectrum = periodogram(&g, &grid).unwrap();
        let max = spectrum.valid().map(|x| x.1).fold(0.0, f64::max);
        for (f, power) in spectrum.valid() {
            if f != 3.0 && f != 6.0 {
                // Oracle: the explicit fit gives the same off-peak values.
                let brute = brute_force_ls_power(g.times(), g.values(), TAU * f);
                assert!((brute - power).abs() <= 1e-9 * max);
                assert!(power < 0.05 * max, "p {p}, f {f}: {power} vs {max}");
            }
        }
    }
}

#[test]
fn doubling_a_tone_quadruples_its_power() {
    let make = |amp: f64| {
        let spec = MixtureSpec {
            tones: vec![(5.0, amp)],
            duration: 4.0,
            sample_rate: 250.0,
            noise_std: 0.0,
        };
        let s = generate_mixture(&spec, 1).unwrap();
        let spectrum = periodogram(&s, &FrequencyGrid::mixture_default()).unwrap();
        assert_eq!(spectrum.argmax(), Some(5.0));
        power_at(&s, TAU * 5.0).unwrap()
    };
    let (single, double) = (make(0.7), make(1.4));
    assert!((double / single - 4.0).abs() < 1e-12);
    // Least-squares power of a sinusoid with amplitude a on whole periods is a²/2.
    assert!((single - 0.49 / 2.0).abs() < 1e-12);
}

#[test]
fn normalization_factor_for_thirty_percent() {
    let grid = FrequencyGrid::new(vec![4.0]).unwrap();
    let spectrum = gapband_core::spectral::PowerSpectrum::from_parts(grid, vec![Some(0.7)], 70).unwrap();
    let n = normalize_by_retention(&spectrum, 0.3).unwrap();
    assert!((n.powers()[0].unwrap() - 1.0).abs() < 1e-15);
}

proptest! {
    #[test]
    fn power_is_non_negative(seed in 0u64..10_000, f in 0.1f64..120.0) {
        let s = random_gappy(seed);
        prop_assume!(s.len() >= 8);
        if let Ok(p) = power_at(&s, TAU * f) {
            prop_assert!(p >= 0.0);
        }
    }

    #[test]
    fn scaling_values_scales_power_quadratically(seed in 0u64..10_000, c in -5.0f64..5.0) {
        prop_assume!(c.abs() > 1e-3);
        let s = random_gappy(seed);
        prop_assume!(s.len() >= 8);
        let grid = FrequencyGrid::band_power_default();
        let base = periodogram(&s, &grid).unwrap();
        let scaled = periodogram(&s.scaled(c), &grid).unwrap();
        for (a, b) in base.valid().zip(scaled.valid()) {
            prop_assert!((b.1 - c * c * a.1).abs() <= 1e-12 * b.1.abs().max(1e-300));
        }
        prop_assert_eq!(base.argmax(), scaled.argmax());
    }

    #[test]
    fn periodogram_is_deterministic(seed in 0u64..10_000) {
        let s = random_gappy(seed);
        prop_assume!(s.len() >= 8);
        let grid = FrequencyGrid::band_power_default();
        prop_assert_eq!(periodogram(&s, &grid).unwrap(), periodogram(&s, &grid).unwrap());
    }
}
