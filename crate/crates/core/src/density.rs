//! Path-loss weighting, weighted plane areas and the joint delay-Doppler
//! density.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DelayRange, Scenario};
use crate::quadrature::{integrate_adaptive, GaussLegendre};
use crate::ring::{Profile, Ring};
use crate::surface::{axis, ComplexSurface, GridSpec, SurfaceMeta};

pub const DEFAULT_QUAD_TOL: f64 = 1e-8;

/// Tolerance used when an area only serves as a normalizer.
pub(crate) const NORMALIZER_TOL: f64 = 1e-11;

/// Radar-equation path-loss weight `1 / (xi^2 - eta^2)^2`.
pub fn weight(xi: f64, eta: f64) -> Result<f64> {
    if !(xi > 1.0 && eta.abs() <= 1.0) {
        return Err(Error::invalid(format!("weight needs xi > 1 and |eta| <= 1, got ({xi}, {eta})")));
    }
    let q = (xi - eta) * (xi + eta);
    if q == 0.0 {
        return Err(Error::invalid("weight undefined on the focal line xi = |eta|"));
    }
    Ok(1.0 / (q * q))
}

/// Weighted area of the plane region between the delay bounds, general case.
pub fn weighted_area_general(sc: &Scenario, r: &DelayRange, quad_tol: f64) -> Result<f64> {
    if sc.plane().is_complementary() {
        return Err(Error::CaseMismatch { expected: "general" });
    }
    area_by_rings(sc, r, quad_tol)
}

/// Closed-form ring mass per unit xi for a plane perpendicular to the axis.
pub fn complementary_ring_mass(sc: &Scenario, xi: f64) -> f64 {
    let p = sc.plane();
    let (c, d) = (p.c(), p.d());
    let l2 = sc.l() * sc.l();
    let eta = d / (c * xi);
    let q = (xi - eta) * (xi + eta);
    TAU * l2 * (xi - d * d / (c * c * xi * xi * xi)) / (q * q)
}

/// Weighted area for a plane perpendicular to the focal axis.
pub fn weighted_area_complementary(sc: &Scenario, r: &DelayRange) -> Result<f64> {
    if !sc.plane().is_complementary() {
        return Err(Error::CaseMismatch { expected: "complementary" });
    }
    let (v, _) = integrate_adaptive(|xi| complementary_ring_mass(sc, xi), r.xi_min(), r.xi_max(), 1e-12, 0.0)?;
    Ok(v)
}

/// Weighted area for either plane case.
pub fn weighted_area(sc: &Scenario, r: &DelayRange) -> Result<f64> {
    if sc.plane().is_complementary() {
        weighted_area_complementary(sc, r)
    } else {
        area_by_rings(sc, r, NORMALIZER_TOL)
    }
}

fn area_by_rings(sc: &Scenario, r: &DelayRange, tol: f64) -> Result<f64> {
    let mut failure = None;
    let (v, _) = integrate_adaptive(
        |xi| match Ring::new(sc, xi).and_then(|ring| ring.mass()) {
            Ok(m) => m,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        r.xi_min(),
        r.xi_max(),
        tol,
        0.0,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// Weighted area per unit xi at one delay (unnormalized delay density).
pub fn ring_mass(sc: &Scenario, xi: f64) -> Result<f64> {
    Ring::new(sc, xi)?.mass()
}

pub(crate) fn check_xi_grid(sc: &Scenario, g: &GridSpec) -> Result<()> {
    if g.min <= sc.xi_sr() {
        return Err(Error::invalid(format!("xi grid starts at {} which is not above xi_sr = {}", g.min, sc.xi_sr())));
    }
    Ok(())
}

pub(crate) fn meta(sc: &Scenario, function: &str) -> SurfaceMeta {
    SurfaceMeta { function: function.to_string(), scenario: sc.fingerprint() }
}

/// Delay density p(xi) on the grid; zero outside the delay range.
pub fn delay_pdf(sc: &Scenario, r: &DelayRange, xi_grid: &GridSpec) -> Result<ComplexSurface> {
    check_xi_grid(sc, xi_grid)?;
    let area = weighted_area(sc, r)?;
    let values = xi_grid
        .nodes()
        .par_iter()
        .map(|&xi| if r.contains(xi) { ring_mass(sc, xi).map(|m| m / area) } else { Ok(0.0) })
        .collect::<Result<Vec<f64>>>()?;
    ComplexSurface::from_real(vec![xi_grid.clone()], values, meta(sc, "delay_pdf"))
}

/// Doppler support `[f_min, f_max]` of the ring at `xi`.
pub fn doppler_support(sc: &Scenario, xi: f64) -> Result<(f64, f64)> {
    let prof = Profile::new(Ring::new(sc, xi)?)?;
    Ok((prof.f_min, prof.f_max))
}

/// Pointwise conditional Doppler density p(f_d | xi). Infinite at the band
/// edges, where an error is returned.
pub fn conditional_doppler_pdf(sc: &Scenario, xi: f64, fd: f64) -> Result<f64> {
    let prof = Profile::new(Ring::new(sc, xi)?)?;
    Ok(prof.density_at(fd)? / prof.ring.mass()?)
}

/// Conditional Doppler density averaged over the cells centered on the
/// nodes of `fd_grid`.
pub fn conditional_doppler_cells(sc: &Scenario, xi: f64, fd_grid: &GridSpec) -> Result<Vec<f64>> {
    let prof = Profile::new(Ring::new(sc, xi)?)?;
    let total = prof.ring.mass()?;
    let h = fd_grid.step();
    Ok(prof.cell_masses(&fd_grid.cell_edges())?.into_iter().map(|m| m / (total * h)).collect())
}

/// Joint delay-Doppler density on the grids.
///
/// Every node carries the density averaged over its Doppler cell
/// `[f - df/2, f + df/2]`, which keeps the grid sum exact next to the
/// integrable band-edge singularities. The Doppler cells must cover the
/// support at every delay node.
pub fn joint_pdf(sc: &Scenario, r: &DelayRange, xi_grid: &GridSpec, fd_grid: &GridSpec) -> Result<ComplexSurface> {
    check_xi_grid(sc, xi_grid)?;
    if sc.is_static() {
        return Err(Error::ZeroDopplerSpread);
    }
    let area = weighted_area(sc, r)?;
    let nodes = xi_grid.nodes();
    let edges = fd_grid.cell_edges();
    let h = fd_grid.step();
    let rows = nodes
        .par_iter()
        .map(|&xi| -> Result<Option<(Vec<f64>, f64, f64)>> {
            if !r.contains(xi) {
                return Ok(None);
            }
            let prof = Profile::new(Ring::new(sc, xi)?)?;
            let masses = prof.cell_masses(&edges)?;
            Ok(Some((masses, prof.f_min, prof.f_max)))
        })
        .collect::<Result<Vec<_>>>()?;

    let lo = rows.iter().flatten().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let hi = rows.iter().flatten().map(|r| r.2).fold(f64::NEG_INFINITY, f64::max);
    if lo < edges[0] || hi > edges[edges.len() - 1] {
        return Err(Error::DopplerGridTooNarrow {
            grid_min: fd_grid.min,
            grid_max: fd_grid.max,
            required_min: lo + 0.5 * h,
            required_max: hi - 0.5 * h,
        });
    }
    let mut values = Vec::with_capacity(xi_grid.n * fd_grid.n);
    for row in rows {
        match row {
            Some((masses, _, _)) => values.extend(masses.into_iter().map(|m| m / (area * h))),
            None => values.extend(std::iter::repeat_n(0.0, fd_grid.n)),
        }
    }
    ComplexSurface::from_real(vec![xi_grid.clone(), fd_grid.clone()], values, meta(sc, "joint_pdf"))
}

/// Probability of each (xi cell, f_d cell) with the given edges, row-major.
/// Cells are clipped to the delay range.
pub fn joint_cell_masses(sc: &Scenario, r: &DelayRange, xi_edges: &[f64], fd_edges: &[f64]) -> Result<Vec<f64>> {
    let area = weighted_area(sc, r)?;
    let nf = fd_edges.len() - 1;
    let rule = GaussLegendre::cached(16);
    let rows = xi_edges
        .par_windows(2)
        .map(|w| -> Result<Vec<f64>> {
            let a = w[0].max(r.xi_min());
            let b = w[1].min(r.xi_max());
            let mut acc = vec![0.0; nf];
            if b <= a {
                return Ok(acc);
            }
            for (xi, wt) in rule.mapped(a, b) {
                let prof = Profile::new(Ring::new(sc, xi)?)?;
                for (s, m) in acc.iter_mut().zip(prof.cell_masses(fd_edges)?) {
                    *s += wt * m / area;
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.concat())
}

/// Probability of each xi cell.
pub fn delay_cell_masses(sc: &Scenario, r: &DelayRange, xi_edges: &[f64]) -> Result<Vec<f64>> {
    let area = weighted_area(sc, r)?;
    let rule = GaussLegendre::cached(16);
    xi_edges
        .par_windows(2)
        .map(|w| {
            let a = w[0].max(r.xi_min());
            let b = w[1].min(r.xi_max());
            if b <= a {
                return Ok(0.0);
            }
            let mut acc = 0.0;
            for (xi, wt) in rule.mapped(a, b) {
                acc += wt * ring_mass(sc, xi)?;
            }
            Ok(acc / area)
        })
        .collect()
}

/// Doppler marginal p(f_d) of a joint surface, by trapezoid over xi.
pub fn doppler_marginal(joint: &ComplexSurface) -> Result<ComplexSurface> {
    if !joint.is_2d() || joint.axis(0).name != axis::XI || joint.axis(1).name != axis::FD {
        return Err(Error::invalid("expected a (xi, fd) surface"));
    }
    let h = joint.axis(0).step();
    let values = (0..joint.cols())
        .map(|j| crate::surface::trapezoid(&joint.column(j).iter().map(|v| v.re).collect::<Vec<_>>(), h))
        .collect();
    ComplexSurface::from_real(
        vec![joint.axis(1).clone()],
        values,
        SurfaceMeta { function: "doppler_pdf".into(), scenario: joint.meta().scenario.clone() },
    )
}
