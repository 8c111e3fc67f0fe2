//! Delay and Doppler moments, asymptotic limits and coherence metrics.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{check_xi_grid, delay_pdf, meta};
use crate::doppler::limiting_frequency_inf;
use crate::error::{Error, Result};
use crate::geometry::{DelayRange, Scenario};
use crate::hybrid::ring_characteristic;
use crate::quadrature::brent_root;
use crate::ring::Ring;
use crate::special::bessel_j0;
use crate::surface::{axis, trapezoid, ComplexSurface, GridSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub mu_xi: f64,
    pub sigma_xi: f64,
    pub xi: Vec<f64>,
    pub mu_fd_given_xi: Vec<f64>,
    pub sigma_fd_given_xi: Vec<f64>,
}

/// Mean and spread of a 1-D delay density by trapezoid quadrature.
pub fn delay_moments(p_xi: &ComplexSurface) -> Result<(f64, f64)> {
    if p_xi.is_2d() {
        return Err(Error::invalid("delay moments need a 1-D density"));
    }
    let g = p_xi.axis(0);
    let xs = g.nodes();
    let p = p_xi.real();
    let h = g.step();
    let norm = trapezoid(&p, h);
    // Loose enough for coarse grids, where the steep lower edge costs the
    // trapezoid rule a few parts in 1e3.
    if (norm - 1.0).abs() > 1e-2 {
        return Err(Error::NotNormalized { integral: norm });
    }
    let m1 = trapezoid(&xs.iter().zip(&p).map(|(x, v)| x * v).collect::<Vec<_>>(), h) / norm;
    let m2 = trapezoid(&xs.iter().zip(&p).map(|(x, v)| x * x * v).collect::<Vec<_>>(), h) / norm;
    Ok((m1, (m2 - m1 * m1).max(0.0).sqrt()))
}

/// Conditional Doppler mean and spread at one delay by direct integration
/// over the ring.
fn direct_moments(sc: &Scenario, xi: f64) -> Result<(f64, f64)> {
    let ring = Ring::new(sc, xi)?;
    let mut n = 64;
    let eval = |n: usize| {
        let h = TAU / n as f64;
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for j in 0..n {
            let phi = j as f64 * h;
            let w = ring.weight(phi);
            let f = ring.doppler(phi);
            m0 += w;
            m1 += w * f;
            m2 += w * f * f;
        }
        (m1 / m0, m2 / m0)
    };
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        let scale = cur.1.abs().max(f64::MIN_POSITIVE);
        if (cur.1 - prev.1).abs() <= 1e-13 * scale && (cur.0 - prev.0).abs() <= 1e-13 * scale.sqrt() {
            let var = (cur.1 - cur.0 * cur.0).max(0.0);
            return Ok((cur.0, var.sqrt()));
        }
        if n >= crate::ring::MAX_PERIODIC_NODES {
            return Err(Error::QuadratureNotConverged { value: cur.1, error_estimate: (cur.1 - prev.1).abs() });
        }
        prev = cur;
    }
}

/// Mean and spread from 5-point central differences of the conditional
/// characteristic function at zero lag.
fn cf_moments(sc: &Scenario, xi: f64, h: f64) -> Result<(f64, f64)> {
    let rho = ring_characteristic(sc, xi, &[-2.0 * h, -h, 0.0, h, 2.0 * h])?;
    let d1 = (rho[0] - 8.0 * rho[1] + 8.0 * rho[3] - rho[4]) / (12.0 * h);
    let d2 = (-rho[0] + 16.0 * rho[1] - 30.0 * rho[2] + 16.0 * rho[3] - rho[4]) / (12.0 * h * h);
    let mu = (d1 / Complex64::new(0.0, TAU)).re;
    let var = ((d1 * d1 - d2) / (4.0 * PI * PI)).re;
    Ok((mu, var.max(0.0).sqrt()))
}

/// Conditional Doppler mean and spread at one delay, cross-checked against
/// the characteristic-function derivatives.
pub fn conditional_doppler_moments_at(sc: &Scenario, xi: f64) -> Result<(f64, f64)> {
    if sc.is_static() {
        Ring::new(sc, xi)?;
        return Ok((0.0, 0.0));
    }
    let (mu, sigma) = direct_moments(sc, xi)?;
    let f_l = limiting_frequency_inf(sc);
    let scale = if f_l > 0.0 { f_l } else { sigma.max(mu.abs()) };
    if scale == 0.0 {
        return Ok((mu, sigma));
    }
    let (mu_b, sigma_b) = cf_moments(sc, xi, 1e-3 / scale)?;
    let tol = 1e-3 * sigma.max(mu.abs()).max(1e-9 * scale);
    if (mu - mu_b).abs() > tol {
        return Err(Error::MomentCrossCheck { xi, direct: mu, derived: mu_b });
    }
    if (sigma - sigma_b).abs() > tol {
        return Err(Error::MomentCrossCheck { xi, direct: sigma, derived: sigma_b });
    }
    Ok((mu, sigma))
}

/// Per-node conditional Doppler moments over the grid nodes inside the
/// delay range.
pub fn conditional_doppler_moments(sc: &Scenario, r: &DelayRange, xi_grid: &GridSpec) -> Result<Vec<(f64, f64)>> {
    check_xi_grid(sc, xi_grid)?;
    xi_grid
        .nodes()
        .into_par_iter()
        .filter(|&xi| r.contains(xi))
        .map(|xi| conditional_doppler_moments_at(sc, xi))
        .collect()
}

pub fn moment_report(sc: &Scenario, r: &DelayRange, xi_grid: &GridSpec) -> Result<MomentReport> {
    let p = delay_pdf(sc, r, xi_grid)?;
    let (mu_xi, sigma_xi) = delay_moments(&p)?;
    let xi: Vec<f64> = xi_grid.nodes().into_iter().filter(|&x| r.contains(x)).collect();
    let (mu_fd_given_xi, sigma_fd_given_xi) = conditional_doppler_moments(sc, r, xi_grid)?.into_iter().unzip();
    Ok(MomentReport { mu_xi, sigma_xi, xi, mu_fd_given_xi, sigma_fd_given_xi })
}

/// Asymptotic arcsine density `1 / (pi f_l sqrt(1 - (f / f_l)^2))`.
pub fn jakes_density(f_l: f64, f: f64) -> f64 {
    let u = f / f_l;
    if u.abs() >= 1.0 {
        0.0
    } else {
        1.0 / (PI * f_l * ((1.0 - u) * (1.0 + u)).sqrt())
    }
}

/// Large-delay limit of the conditional Doppler density. Zero at and
/// beyond the band edges.
pub fn jakes_limit_pdf(sc: &Scenario, fd_grid: &GridSpec) -> Result<ComplexSurface> {
    let f_l = limiting_frequency_inf(sc);
    if f_l == 0.0 {
        return Err(Error::DegenerateSpectralLine);
    }
    let values = fd_grid.nodes().iter().map(|&f| jakes_density(f_l, f)).collect();
    ComplexSurface::from_real(vec![fd_grid.clone()], values, meta(sc, "jakes_limit"))
}

/// Large-delay limit of the conditional characteristic function.
pub fn bessel_limit_cf(sc: &Scenario, dt_grid: &GridSpec) -> Result<ComplexSurface> {
    let f_l = limiting_frequency_inf(sc);
    let values = dt_grid.nodes().iter().map(|&dt| Complex64::new(bessel_j0(TAU * f_l * dt), 0.0)).collect();
    ComplexSurface::new(vec![dt_grid.clone()], values, meta(sc, "bessel_limit"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceMetrics {
    /// Normalized coherence bandwidth (in units of 1 / tau_los).
    pub bandwidth: f64,
    pub bandwidth_hz: f64,
    pub time_s: f64,
}

/// First crossing of `Re r = 1/2` walking outward from the zero node along
/// the positive side of one axis, by linear interpolation.
fn half_crossing(r: &ComplexSurface, along: usize) -> Result<(f64, f64, f64)> {
    let (ga, gb) = (r.axis(0), r.axis(1));
    let missing = |g: &GridSpec| Error::NoCrossing { axis: g.name.clone() };
    let i0 = ga.find_node(0.0).ok_or_else(|| missing(ga))?;
    let j0 = gb.find_node(0.0).ok_or_else(|| missing(gb))?;
    let (g, start) = if along == 0 { (ga, i0) } else { (gb, j0) };
    let val = |k: usize| if along == 0 { r.get(k, j0).re } else { r.get(i0, k).re };
    for k in start + 1..g.n {
        let (a, b) = (val(k - 1), val(k));
        if a > 0.5 && b <= 0.5 {
            let (xa, xb) = (g.node(k - 1), g.node(k));
            let x = xa + (a - 0.5) / (a - b) * (xb - xa);
            return Ok((x, xa, xb));
        }
    }
    Err(missing(g))
}

/// Coherence bandwidth from the `dftilde` axis at zero time lag and
/// coherence time from the `dt` axis at zero frequency lag.
pub fn coherence_metrics(r: &ComplexSurface, tau_los: f64) -> Result<CoherenceMetrics> {
    check_r_axes(r)?;
    let (b, _, _) = half_crossing(r, 0)?;
    let (t, _, _) = half_crossing(r, 1)?;
    Ok(CoherenceMetrics { bandwidth: b, bandwidth_hz: b / tau_los, time_s: t })
}

fn check_r_axes(r: &ComplexSurface) -> Result<()> {
    if !r.is_2d() || r.axis(0).name != axis::DFTILDE || r.axis(1).name != axis::DT {
        return Err(Error::invalid("expected a (dftilde, dt) surface"));
    }
    Ok(())
}

/// Like [`coherence_metrics`], but each crossing is refined by root finding
/// on re-evaluated `Re r` when the grid step exceeds 1% of the crossing.
pub fn coherence_metrics_refined<B, T>(r: &ComplexSurface, tau_los: f64, re_r_freq: B, re_r_time: T) -> Result<CoherenceMetrics>
where
    B: Fn(f64) -> Result<f64>,
    T: Fn(f64) -> Result<f64>,
{
    check_r_axes(r)?;
    let refine = |along: usize, f: &dyn Fn(f64) -> Result<f64>| -> Result<f64> {
        let (x, lo, hi) = half_crossing(r, along)?;
        if hi - lo <= 0.01 * x {
            return Ok(x);
        }
        refine_half_crossing(f, lo, hi)
    };
    let b = refine(0, &re_r_freq)?;
    let t = refine(1, &re_r_time)?;
    Ok(CoherenceMetrics { bandwidth: b, bandwidth_hz: b / tau_los, time_s: t })
}

/// Root of `f(x) = 1/2` bracketed by `[lo, hi]`.
pub fn refine_half_crossing(f: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<f64> {
    let mut failure = None;
    let x = brent_root(
        |x| match f(x) {
            Ok(v) => v - 0.5,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        lo,
        hi,
        1e-12 * hi.abs().max(lo.abs()),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(x),
    }
}
