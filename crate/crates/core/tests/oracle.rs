mod common;

use std::f64::consts::TAU;

use m2m_channel::density::joint_cell_masses;
use m2m_channel::oracle::{
    empirical_surface, estimate_ph, estimate_rl, l1_distance, pearson, sample_scatterers, synthesize_channel,
    synthesize_from_scatterers, transfer_function, weighted_histogram, ChannelSpec, Histogram, LagAxis, ScattererSample,
    Weighting,
};
use m2m_channel::{DelayRange, Error, GridSpec, PlaneCoeffs, Scenario, Vec3};
use num_complex::Complex64;

use common::*;

/// Cells of `n` equal widths spanning `[lo, hi]`, as a grid of centers.
fn cells(lo: f64, hi: f64, n: usize, fd: bool) -> GridSpec {
    let h = (hi - lo) / n as f64;
    if fd {
        GridSpec::fd(lo + 0.5 * h, hi - 0.5 * h, n).unwrap()
    } else {
        GridSpec::xi(lo + 0.5 * h, hi - 0.5 * h, n).unwrap()
    }
}

fn hist_grids() -> (GridSpec, GridSpec) {
    (cells(XI_MIN, XI_MAX, 41, false), cells(-244.0, 244.0, 33, true))
}

fn joint_l1(n: usize, seed: u64) -> f64 {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let (hx, hf) = hist_grids();
    let h = weighted_histogram(&sc, &r, n, seed, &hx, &hf, Weighting::PathLoss).unwrap();
    let exact = joint_cell_masses(&sc, &r, &hx.cell_edges(), &hf.cell_edges()).unwrap();
    l1_distance(&exact, &h.probabilities())
}

#[test]
fn sampling_is_deterministic_and_in_range() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let a = sample_scatterers(&sc, &r, 70_000, 3).unwrap();
    let b = sample_scatterers(&sc, &r, 70_000, 3).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_scatterers(&sc, &r, 70_000, 4).unwrap());
    assert!(a.iter().all(|s| s.xi >= XI_MIN && s.xi <= XI_MAX && s.weight > 0.0));
    // A prefix of a longer run is the shorter run.
    let c = sample_scatterers(&sc, &r, 1000, 3).unwrap();
    assert_eq!(&a[..1000], &c[..]);
    assert!(sample_scatterers(&sc, &r, 0, 3).is_err());
}

#[test]
fn static_scene_has_no_doppler() {
    let sc = aircraft().with_velocities(Vec3::zeros(), Vec3::zeros()).unwrap();
    let r = aircraft_range(&sc);
    assert!(sample_scatterers(&sc, &r, 5000, 1).unwrap().iter().all(|s| s.fd == 0.0));
}

#[test]
fn thin_region_is_degenerate() {
    // A plane grazing the outer ellipsoid leaves almost nothing inside the box.
    let plane = PlaneCoeffs::new(0.0, 0.0, 1.0, 0.0).unwrap();
    let sc = Scenario::new(100.0, plane, Vec3::new(1.0, 0.0, 0.0), Vec3::zeros(), 1e9).unwrap();
    let r = DelayRange::new(1000.0, 1000.0 + 1e-6, sc.plane()).unwrap();
    assert!(matches!(sample_scatterers(&sc, &r, 10, 1), Err(Error::DegenerateRegion { .. })));
}

#[test]
fn empirical_surface_basics() {
    let (hx, hf) = hist_grids();
    let one = ScattererSample { position: [0.0, 0.0], xi: 5.0, fd: 12.0, weight: 0.3 };
    let s = empirical_surface(&[one], &hx, &hf, Weighting::PathLoss).unwrap();
    let area = hx.step() * hf.step();
    assert_eq!(s.real().iter().filter(|v| **v != 0.0).count(), 1);
    assert!((s.real().iter().sum::<f64>() * area - 1.0).abs() < 1e-12);

    let sc = aircraft();
    let samples = sample_scatterers(&sc, &aircraft_range(&sc), 20_000, 9).unwrap();
    for w in [Weighting::PathLoss, Weighting::Uniform] {
        let s = empirical_surface(&samples, &hx, &hf, w).unwrap();
        assert!((s.real().iter().sum::<f64>() * area - 1.0).abs() < 1e-12);
    }
    assert!(empirical_surface(&[], &hx, &hf, Weighting::Uniform).is_err());
}

#[test]
fn streaming_histogram_matches_stored_samples() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let (hx, hf) = hist_grids();
    let streamed = weighted_histogram(&sc, &r, 100_000, 11, &hx, &hf, Weighting::PathLoss).unwrap();
    let mut stored = Histogram::new(&hx, &hf);
    sample_scatterers(&sc, &r, 100_000, 11).unwrap().iter().for_each(|s| stored.add(s, Weighting::PathLoss));
    // Chunked summation only changes the rounding.
    assert_eq!(streamed.count, stored.count);
    assert!(streamed.cells.iter().zip(&stored.cells).all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs()));
    assert!((streamed.total_weight - stored.total_weight).abs() <= 1e-12 * stored.total_weight);
}

#[test]
fn histogram_converges_to_the_joint_density() {
    let coarse = joint_l1(100_000, 1);
    let fine = joint_l1(10_000_000, 1);
    assert!(fine < coarse, "{fine} vs {coarse}");
    assert!(fine < 0.02, "{fine}");

    // Four times the samples roughly halves the distance.
    let a = (joint_l1(250_000, 2) + joint_l1(250_000, 3)) / 2.0;
    let b = (joint_l1(1_000_000, 2) + joint_l1(1_000_000, 3)) / 2.0;
    assert!(b / a > 0.35 && b / a < 0.65, "{a} {b}");
}

#[test]
fn seeds_give_consistent_histograms() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let (hx, hf) = hist_grids();
    let h = |seed| weighted_histogram(&sc, &r, 500_000, seed, &hx, &hf, Weighting::PathLoss).unwrap().probabilities();
    let (a, b) = (h(5), h(6));
    let noise = (joint_l1(500_000, 5) + joint_l1(500_000, 6)) / 2.0;
    assert!(l1_distance(&a, &b) < 3.0 * 2f64.sqrt() * noise);
}

fn spec(duration: f64, step: f64) -> ChannelSpec {
    ChannelSpec {
        scatterers: 1,
        duration_s: duration,
        time_step_s: step,
        delay_step_xi: 0.024,
        delay_bins: 0,
        seed: 1,
        phase_seed: 2,
    }
}

#[test]
fn single_static_scatterer_is_a_constant_tap() {
    let sc = aircraft().with_velocities(Vec3::zeros(), Vec3::zeros()).unwrap();
    let s = ScattererSample { position: [0.0, 0.0], xi: 4.0, fd: 0.0, weight: 0.25 };
    let real = synthesize_from_scatterers(&sc, &[s], &spec(0.1, 1e-3)).unwrap();
    assert_eq!(real.n_time, 101);
    let b = (0..real.n_delay).find(|&b| real.tap(0, b).norm() > 0.0).unwrap();
    for i in 0..real.n_time {
        assert_eq!(real.tap(i, b), real.tap(0, b));
        assert!((real.tap(i, b).norm() - 0.5).abs() < 1e-15);
    }
    let lags = LagAxis::new(10, 3).unwrap();
    let rl = estimate_rl(&real, &lags, &[0.0, 1.0, 2.0]).unwrap();
    assert_eq!(rl.get(0, 0), Complex64::new(1.0, 0.0));
    assert!(rl.values().iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
}

#[test]
fn moving_scatterer_rotates_at_its_doppler() {
    let sc = aircraft();
    let fd = 37.5;
    let s = ScattererSample { position: [0.0, 0.0], xi: 4.0, fd, weight: 1.0 };
    let real = synthesize_from_scatterers(&sc, &[s], &spec(0.05, 2.5e-4)).unwrap();
    let b = real.tap_counts.iter().position(|&c| c == 1).unwrap();
    assert!((0..real.n_time).all(|i| real.tap(i, b).norm() > 0.0), "tap left its bin");
    for i in 1..real.n_time {
        let turn = real.tap(i, b) * real.tap(i - 1, b).conj();
        assert!((turn.arg() - TAU * fd * real.time_step_s).abs() < 1e-9);
    }
    let ph = estimate_ph(&real, &LagAxis::new(8, 2).unwrap()).unwrap();
    for p in 0..8 {
        let want = Complex64::from_polar(1.0, TAU * fd * (2 * p) as f64 * real.time_step_s);
        assert!((ph.surface.get(b, p) - want).norm() < 1e-12);
    }
    assert_eq!(ph.occupancy[b], 1);
    assert!((0..real.n_delay).filter(|&k| k != b).all(|k| ph.surface.get(k, 0).norm() == 0.0));
}

#[test]
fn estimators_reject_long_lags() {
    let sc = aircraft();
    let s = ScattererSample { position: [0.0, 0.0], xi: 4.0, fd: 10.0, weight: 1.0 };
    let real = synthesize_from_scatterers(&sc, &[s], &spec(0.01, 1e-3)).unwrap();
    let lags = LagAxis::new(12, 1).unwrap();
    assert!(matches!(estimate_ph(&real, &lags), Err(Error::LagBeyondRecord { .. })));
    assert!(matches!(estimate_rl(&real, &lags, &[0.0, 1.0]), Err(Error::LagBeyondRecord { .. })));
    assert!(LagAxis::new(0, 1).is_err());
    let mut empty = spec(0.01, 1e-3);
    empty.scatterers = 0;
    assert!(synthesize_channel(&sc, &aircraft_range(&sc), &empty).is_err());
}

#[test]
fn rl_is_the_band_averaged_transfer_correlation() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let mut sp = spec(0.2, 1e-3);
    sp.scatterers = 300;
    let real = synthesize_channel(&sc, &r, &sp).unwrap();
    let n = real.n_delay.next_power_of_two() * 2;
    let h = transfer_function(&real, n).unwrap();
    let lags = LagAxis::new(6, 7).unwrap();
    let ms = [0usize, 1, 3, 10];
    let dfs: Vec<f64> = ms.iter().map(|&m| m as f64 / (n as f64 * real.delay_step_xi)).collect();
    let rl = estimate_rl(&real, &lags, &dfs).unwrap();

    let corr = |m: usize, lag: usize| {
        let count = real.n_time - lag;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..count {
            for f in 0..n {
                acc += h[(i + lag) * n + (f + m) % n] * h[i * n + f].conj();
            }
        }
        acc / (count * n) as f64
    };
    let norm = corr(0, 0);
    for (a, (&m, &df)) in ms.iter().zip(&dfs).enumerate() {
        // Bin 0 sits at xi0, not at zero delay.
        let shift = Complex64::from_polar(1.0, -TAU * df * real.xi0);
        for p in 0..lags.count {
            let brute = corr(m, p * lags.stride) / norm * shift;
            assert!((rl.get(a, p) - brute).norm() < 1e-10, "{m} {p}");
        }
    }
}

#[test]
fn rl_is_phase_invariant() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let sp = ChannelSpec {
        scatterers: 10_000,
        duration_s: 2.0,
        time_step_s: 5e-4,
        delay_step_xi: 0.024,
        delay_bins: 0,
        seed: 3,
        phase_seed: 4,
    };
    let samples = sample_scatterers(&sc, &r, sp.scatterers, sp.seed).unwrap();
    let lags = LagAxis::new(32, 1).unwrap();
    let dfs: Vec<f64> = (0..32).map(|q| q as f64 / (2048.0 * sp.delay_step_xi)).collect();
    let rs: Vec<_> = (4..8)
        .map(|phase_seed| {
            let real = synthesize_from_scatterers(&sc, &samples, &ChannelSpec { phase_seed, ..sp.clone() }).unwrap();
            estimate_rl(&real, &lags, &dfs).unwrap()
        })
        .collect();
    // Deviation of each realization from the phase average, corrected for
    // the average containing that realization.
    let m = rs.len() as f64;
    let mean: Vec<Complex64> = (0..rs[0].values().len()).map(|k| rs.iter().map(|s| s.values()[k]).sum::<Complex64>() / m).collect();
    for s in &rs {
        assert_eq!(s.get(0, 0), Complex64::new(1.0, 0.0));
        let dev = s.values().iter().zip(&mean).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) * (m / (m - 1.0)).sqrt();
        assert!(dev < 0.03, "{dev}");
    }
}

#[test]
fn pearson_basics() {
    assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
    assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
    assert!(pearson(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    assert!(pearson(&[1.0], &[1.0]).is_err());
}
