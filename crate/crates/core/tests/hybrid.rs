mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use m2m_channel::density::{complementary_ring_mass, delay_pdf, doppler_marginal, joint_pdf, weighted_area};
use m2m_channel::doppler::complementary_frequencies;
use m2m_channel::hybrid::{
    conditional_normalize, fd_transform, hybrid_freq_doppler, hybrid_time_delay, hybrid_time_delay_complementary,
    joint_char, joint_char_at, joint_char_points, ring_characteristic, rho_surface, xi_transform,
};
use m2m_channel::quadrature::integrate_adaptive;
use m2m_channel::{DelayRange, Error, GridSpec, PlaneCoeffs, Scenario, Vec3};
use num_complex::Complex64;
use proptest::prelude::*;

use common::*;

/// A plane perpendicular to the link, flown over with crossing velocities.
fn overpass() -> (Scenario, DelayRange) {
    let plane = PlaneCoeffs::new(0.0, 0.0, 1.0, 1.6).unwrap();
    let sc = Scenario::new(200.0, plane, Vec3::new(40.0, 10.0, 5.0), Vec3::new(-15.0, 30.0, -8.0), 2e9).unwrap();
    let r = DelayRange::new(1.7, 9.0, sc.plane()).unwrap();
    (sc, r)
}

/// `p(xi) int p(f | xi) exp(j 2 pi f dt) df` with the arcsine density
/// integrated after `f = f_o + f_l sin u`.
fn arcsine_rho(sc: &Scenario, r: &DelayRange, xi: f64, dt: f64) -> Complex64 {
    let (f_o, f_l) = complementary_frequencies(sc, xi).unwrap();
    let phase = |u: f64| TAU * dt * (f_o + f_l * u.sin());
    let (re, _) = integrate_adaptive(|u| phase(u).cos(), -FRAC_PI_2, FRAC_PI_2, 1e-13, 1e-12).unwrap();
    let (im, _) = integrate_adaptive(|u| phase(u).sin(), -FRAC_PI_2, FRAC_PI_2, 1e-13, 1e-12).unwrap();
    let p = complementary_ring_mass(sc, xi) / weighted_area(sc, r).unwrap();
    Complex64::new(re, im) * (p / PI)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn complementary_closed_form_matches_arcsine_quadrature(u in 0.0..1.0f64, dt in -0.05..0.05f64) {
        let (sc, r) = overpass();
        let xi = r.xi_min() + u * (r.xi_max() - r.xi_min());
        let p = complementary_ring_mass(&sc, xi) / weighted_area(&sc, &r).unwrap();
        let closed = ring_characteristic(&sc, xi, &[dt]).unwrap()[0] * p;
        prop_assert!((closed - arcsine_rho(&sc, &r, xi, dt)).norm() < 1e-8);
    }
}

#[test]
fn complementary_surface_uses_the_closed_form() {
    let (sc, r) = overpass();
    let gx = GridSpec::xi(1.8, 8.8, 15).unwrap();
    let gt = GridSpec::dt(-0.02, 0.02, 9).unwrap();
    let s = hybrid_time_delay_complementary(&sc, &r, &gx, &gt).unwrap();
    for (i, xi) in gx.nodes().into_iter().enumerate() {
        for (j, dt) in gt.nodes().into_iter().enumerate() {
            assert!((s.get(i, j) - arcsine_rho(&sc, &r, xi, dt)).norm() < 1e-8);
        }
    }
    assert!(matches!(hybrid_time_delay(&sc, &r, &gx, &gt), Err(Error::CaseMismatch { .. })));
}

#[test]
fn rho_at_zero_lag_is_the_delay_density() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let gx = GridSpec::xi(XI_MIN, XI_MAX, 425).unwrap();
    let gt = GridSpec::dt(-0.03, 0.03, 241).unwrap();
    let rho = rho_surface(&sc, &r, &gx, &gt).unwrap();
    let p = delay_pdf(&sc, &r, &gx).unwrap().real();
    let zero = gt.find_node(0.0).unwrap();
    for (i, pi) in p.iter().enumerate() {
        assert!((rho.get(i, zero) - pi).norm() < 1e-6);
    }
    // |rho(xi, dt)| <= p(xi) and the conditional version is 1 at dt = 0.
    for (i, pi) in p.iter().enumerate() {
        assert!(rho.row(i).iter().all(|v| v.norm() <= pi * (1.0 + 1e-9) + 1e-15));
    }
    let cond = conditional_normalize(&rho, 1).unwrap();
    assert!((0..gx.n).all(|i| cond.get(i, zero) == Complex64::new(1.0, 0.0)));
}

#[test]
fn varrho_at_zero_lag_is_the_doppler_density() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let gx = GridSpec::xi(XI_MIN, XI_MAX, 425).unwrap();
    let gf = GridSpec::fd(-244.0, 244.0, 977).unwrap();
    let gd = GridSpec::dftilde(-20.92, 20.92, 511).unwrap();
    let varrho = hybrid_freq_doppler(&sc, &r, &gx, &gd, &gf).unwrap();
    let m = doppler_marginal(&joint_pdf(&sc, &r, &gx, &gf).unwrap()).unwrap().real();
    let zero = gd.find_node(0.0).unwrap();
    let peak = m.iter().cloned().fold(0.0, f64::max);
    for (j, mj) in m.iter().enumerate() {
        assert!((varrho.get(zero, j) - mj).norm() < 1e-6 * peak.max(1.0));
    }
    let fine = GridSpec::dftilde(-30.0, 30.0, 11).unwrap();
    assert!(matches!(hybrid_freq_doppler(&sc, &r, &gx, &fine, &gf), Err(Error::GridTooCoarse { .. })));
}

#[test]
fn joint_char_is_one_at_the_origin() {
    for sc in [aircraft(), overpass().0] {
        let r = DelayRange::new(sc.xi_sr() + 0.01, sc.xi_sr() + 8.0, sc.plane()).unwrap();
        let v = joint_char_at(&sc, &r, 0.0, 0.0).unwrap();
        assert!((v - 1.0).norm() < 1e-6, "{v}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn joint_char_is_hermitian_and_bounded(df in -20.0..20.0f64, dt in -0.03..0.03f64) {
        let sc = aircraft();
        let r = aircraft_range(&sc);
        let v = joint_char_points(&sc, &r, &[df, -df], &[dt, -dt]).unwrap();
        prop_assert!(v[0].norm() <= 1.0 + 1e-9);
        prop_assert!((v[0] - v[3].conj()).norm() < 1e-10);
        prop_assert!((v[1] - v[2].conj()).norm() < 1e-10);
    }
}

#[test]
fn transform_paths_commute() {
    let sc = aircraft();
    let r = aircraft_range(&sc);
    let gx = GridSpec::xi(XI_MIN, XI_MAX, 2027).unwrap();
    let gf = GridSpec::fd(-122.0, 122.0, 4881).unwrap();
    let gd = GridSpec::dftilde(-2.0, 2.0, 21).unwrap();
    let gt = GridSpec::dt(-0.004, 0.004, 21).unwrap();
    let direct = joint_char(&sc, &r, &gd, &gt).unwrap();
    let via_rho = xi_transform(&hybrid_time_delay(&sc, &r, &gx, &gt).unwrap(), &gd, "r").unwrap();
    let via_varrho = fd_transform(&hybrid_freq_doppler(&sc, &r, &gx, &gd, &gf).unwrap(), &gt, "r").unwrap();
    let a = direct.sup_distance(&via_rho).unwrap();
    let b = direct.sup_distance(&via_varrho).unwrap();
    assert!(a < 1e-5 && b < 1e-5, "{a:e} {b:e}");
}
