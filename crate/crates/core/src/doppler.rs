//! Doppler shift of a single-bounce path through a scatterer on the plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eta_bounds, PlaneCoeffs, PscPoint, Scenario, Vec3};

/// Sign branch of the two-valued Doppler map over the intersection ellipse.
/// `Plus` takes the `+` sign of the square root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DopplerBranch {
    Plus,
    Minus,
}

impl DopplerBranch {
    pub const BOTH: [DopplerBranch; 2] = [DopplerBranch::Plus, DopplerBranch::Minus];

    pub fn index(self) -> u8 {
        match self {
            DopplerBranch::Plus => 1,
            DopplerBranch::Minus => 2,
        }
    }

    fn sign(self) -> f64 {
        match self {
            DopplerBranch::Plus => 1.0,
            DopplerBranch::Minus => -1.0,
        }
    }
}

/// Doppler shift at a PSC point.
pub fn doppler_at(sc: &Scenario, p: &PscPoint) -> Result<f64> {
    let (xi, eta, th) = (p.xi(), p.eta(), p.theta());
    let sp = xi + eta;
    let sm = xi - eta;
    if sp <= 0.0 || sm <= 0.0 {
        return Err(Error::Focus);
    }
    let vt = sc.v_t();
    let vr = sc.v_r();
    let r = ((xi - 1.0) * (xi + 1.0) * (1.0 - eta) * (1.0 + eta)).sqrt();
    let (s, c) = th.sin_cos();
    let transverse_t = (vt.x * c + vt.y * s) * r / sp;
    let transverse_r = (vr.x * c + vr.y * s) * r / sm;
    let axial_t = vt.z * (xi * eta + 1.0) / sp;
    let axial_r = vr.z * (xi * eta - 1.0) / sm;
    Ok(sc.f_c() / sc.c() * (transverse_t + transverse_r + axial_t + axial_r))
}

/// Doppler shift of the path through the local Cartesian point `s`.
pub fn doppler_cartesian(sc: &Scenario, s: &Vec3) -> f64 {
    let ut = s - sc.tx_position();
    let ur = s - sc.rx_position();
    sc.f_c() / sc.c() * (sc.v_t().dot(&ut) / ut.norm() + sc.v_r().dot(&ur) / ur.norm())
}

struct BranchTerms {
    num: f64,
    den: f64,
    dnum: f64,
    dden: f64,
    q: f64,
}

fn branch_terms(sc: &Scenario, xi: f64, eta: f64, branch: DopplerBranch) -> BranchTerms {
    let p = sc.plane();
    let (a, b, c, d) = (p.a(), p.b(), p.c(), p.d());
    let vt = sc.v_t();
    let vr = sc.v_r();
    let k2 = a * a + b * b;
    let sp = xi + eta;
    let sm = xi - eta;
    let sx = vr.x * sp + vt.x * sm;
    let sy = vr.y * sp + vt.y * sm;
    let dsx = vr.x - vt.x;
    let dsy = vr.y - vt.y;

    let g = d - c * xi * eta;
    let dg = -c * xi;
    let lin = a * sx + b * sy;
    let t1 = g * lin;
    let dt1 = dg * lin + g * (a * dsx + b * dsy);

    let x = b * sx - a * sy;
    let dx = b * dsx - a * dsy;
    let q = ((xi - 1.0) * (xi + 1.0) * (1.0 - eta) * (1.0 + eta) * k2 - g * g).max(0.0);
    let dq = -2.0 * eta * (xi - 1.0) * (xi + 1.0) * k2 - 2.0 * g * dg;
    let sq = q.sqrt();
    let sgn = branch.sign();
    let t2 = sgn * sq * x.abs();
    let dt2 = if sq > 0.0 { sgn * (dq / (2.0 * sq) * x.abs() + sq * x.signum() * dx) } else { f64::INFINITY };

    let z = k2 * (vr.z * (xi * eta - 1.0) * sp + vt.z * (xi * eta + 1.0) * sm);
    let dz = k2 * (vr.z * (xi * sp + xi * eta - 1.0) + vt.z * (xi * sm - xi * eta - 1.0));

    BranchTerms {
        num: t1 + t2 + z,
        den: k2 * (xi * xi - eta * eta),
        dnum: dt1 + dt2 + dz,
        dden: -2.0 * k2 * eta,
        q,
    }
}

fn check_on_intersection(plane: &PlaneCoeffs, xi: f64, eta: f64) -> Result<(f64, f64)> {
    let (e1, e2) = eta_bounds(plane, xi)?;
    let tol = 1e-12;
    if eta < e1 - tol || eta > e2 + tol {
        return Err(Error::OffIntersection { xi, eta, eta1: e1, eta2: e2 });
    }
    Ok((e1, e2))
}

/// Branch-resolved Doppler shift as a function of (xi, eta) on the
/// plane-ellipsoid intersection. General plane case only.
pub fn branch_doppler(sc: &Scenario, xi: f64, eta: f64, branch: DopplerBranch) -> Result<f64> {
    check_on_intersection(sc.plane(), xi, eta)?;
    let t = branch_terms(sc, xi, eta, branch);
    Ok(sc.f_c() / sc.c() * t.num / t.den)
}

/// Derivative of [`branch_doppler`] with respect to eta.
pub fn branch_doppler_deriv(sc: &Scenario, xi: f64, eta: f64, branch: DopplerBranch) -> Result<f64> {
    let (e1, e2) = check_on_intersection(sc.plane(), xi, eta)?;
    if eta <= e1 || eta >= e2 {
        return Err(Error::SingularDerivative { xi, eta });
    }
    let t = branch_terms(sc, xi, eta, branch);
    let scale = (xi * xi).max(1.0) * sc.plane().transverse().powi(2);
    if t.q <= 1e-14 * scale {
        return Err(Error::SingularDerivative { xi, eta });
    }
    Ok(sc.f_c() / sc.c() * (t.dnum * t.den - t.num * t.dden) / (t.den * t.den))
}

/// Offset and limiting frequency `(f_o, f_l)` on the circle at delay `xi`
/// when the plane is perpendicular to the focal axis. The Doppler shift
/// sweeps `f_o + f_l cos(theta - theta_0)`.
pub fn complementary_frequencies(sc: &Scenario, xi: f64) -> Result<(f64, f64)> {
    let p = sc.plane();
    if !p.is_complementary() {
        return Err(Error::CaseMismatch { expected: "complementary" });
    }
    let sr = sc.xi_sr();
    if xi <= sr {
        return Err(Error::NoIntersection { xi, xi_sr: sr });
    }
    let eta = p.d() / (p.c() * xi);
    let vt = sc.v_t();
    let vr = sc.v_r();
    let k = sc.f_c() / sc.c();
    let sp = xi + eta;
    let sm = xi - eta;
    let f_o = k * (vt.z * (xi * eta + 1.0) / sp + vr.z * (xi * eta - 1.0) / sm);
    let r = ((xi - 1.0) * (xi + 1.0) * (1.0 - eta) * (1.0 + eta)).sqrt();
    let gx = vt.x / sp + vr.x / sm;
    let gy = vt.y / sp + vr.y / sm;
    let f_l = k * r * gx.hypot(gy);
    Ok((f_o, f_l))
}

/// Component of `v` parallel to the plane.
pub fn parallel_projection(v: &Vec3, plane: &PlaneCoeffs) -> Vec3 {
    let n = plane.normal();
    v - n * (v.dot(&n) / n.norm_squared())
}

/// Limiting Doppler frequency as `xi -> infinity`.
pub fn limiting_frequency_inf(sc: &Scenario) -> f64 {
    let vt = parallel_projection(&sc.v_t(), sc.plane());
    let vr = parallel_projection(&sc.v_r(), sc.plane());
    (vt + vr).norm() * sc.f_c() / sc.c()
}
