//! Prolate spheroidal coordinates, the scattering plane and the local
//! scenario frame.
//!
//! The local frame puts the transmitter at `(0, 0, -l)` and the receiver at
//! `(0, 0, +l)`. A point `(xi, eta, theta)` then has distances
//! `d_t = l (xi + eta)` to the transmitter and `d_r = l (xi - eta)` to the
//! receiver, so `xi` is the bistatic path length over the LOS length.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative size below which the transverse part of a plane normal is
/// treated as zero, making the plane perpendicular to the focal axis.
const TRANSVERSE_EPS: f64 = 1e-12;

/// Scattering plane `A x + B y + C z = l D` in the local frame.
///
/// Stored with `A^2 + B^2 + C^2 = 1` and `D >= 0`. All downstream formulas are
/// homogeneous of degree zero in the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneCoeffs {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl PlaneCoeffs {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("plane coefficients must be finite"));
        }
        let norm = (a * a + b * b + c * c).sqrt();
        if norm == 0.0 {
            return Err(Error::invalid("plane normal (A, B, C) must be nonzero"));
        }
        let mut s = 1.0 / norm;
        // Canonical sign: D >= 0, and for D = 0 the first nonzero of A, B, C positive.
        let lead = if d != 0.0 {
            d
        } else {
            *[a, b, c].iter().find(|v| **v != 0.0).unwrap()
        };
        if lead < 0.0 {
            s = -s;
        }
        let fix = |v: f64| if v == 0.0 { 0.0 } else { v * s };
        Ok(PlaneCoeffs { a: fix(a), b: fix(b), c: fix(c), d: fix(d) })
    }

    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c(&self) -> f64 {
        self.c
    }
    pub fn d(&self) -> f64 {
        self.d
    }

    /// Unit normal (A, B, C).
    pub fn normal(&self) -> Vec3 {
        Vec3::new(self.a, self.b, self.c)
    }

    /// sqrt(A^2 + B^2), the normal component across the focal axis.
    pub fn transverse(&self) -> f64 {
        self.a.hypot(self.b)
    }

    /// Plane perpendicular to the focal axis (A = B = 0).
    pub fn is_complementary(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }
}

/// Point in prolate spheroidal coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PscPoint {
    xi: f64,
    eta: f64,
    theta: f64,
}

impl PscPoint {
    /// `theta` is wrapped into [0, 2 pi).
    pub fn new(xi: f64, eta: f64, theta: f64) -> Result<Self> {
        if !(xi.is_finite() && eta.is_finite() && theta.is_finite()) {
            return Err(Error::invalid("PSC coordinates must be finite"));
        }
        if xi < 1.0 {
            return Err(Error::invalid(format!("xi = {xi} < 1")));
        }
        if eta.abs() > 1.0 {
            return Err(Error::invalid(format!("eta = {eta} outside [-1, 1]")));
        }
        let mut theta = theta.rem_euclid(TAU);
        if theta >= TAU {
            theta = 0.0;
        }
        Ok(PscPoint { xi, eta, theta })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

pub fn to_cartesian(p: &PscPoint, l: f64) -> Vec3 {
    let r = l * ((p.xi - 1.0) * (p.xi + 1.0) * (1.0 - p.eta) * (1.0 + p.eta)).sqrt();
    Vec3::new(r * p.theta.cos(), r * p.theta.sin(), l * p.xi * p.eta)
}

/// Inverse of [`to_cartesian`]. On the focal axis `theta` is 0.
pub fn from_cartesian(v: &Vec3, l: f64) -> PscPoint {
    let rho2 = v.x * v.x + v.y * v.y;
    let d_minus = (rho2 + (v.z + l) * (v.z + l)).sqrt();
    let d_plus = (rho2 + (v.z - l) * (v.z - l)).sqrt();
    let xi = ((d_minus + d_plus) / (2.0 * l)).max(1.0);
    let eta = ((d_minus - d_plus) / (2.0 * l)).clamp(-1.0, 1.0);
    let theta = if v.x == 0.0 && v.y == 0.0 {
        0.0
    } else {
        let t = v.y.atan2(v.x).rem_euclid(TAU);
        if t >= TAU {
            0.0
        } else {
            t
        }
    };
    PscPoint { xi, eta, theta }
}

/// Normalized delay of the specular reflection point.
pub fn xi_sr(plane: &PlaneCoeffs) -> f64 {
    let k2 = plane.a * plane.a + plane.b * plane.b;
    let n2 = k2 + plane.c * plane.c;
    ((k2 + plane.d * plane.d) / n2).sqrt().max(1.0)
}

/// The eta interval `[eta1, eta2]` covered by the plane-ellipsoid
/// intersection at delay `xi`. General plane case only.
pub fn eta_bounds(plane: &PlaneCoeffs, xi: f64) -> Result<(f64, f64)> {
    if plane.is_complementary() {
        return Err(Error::CaseMismatch { expected: "general" });
    }
    let (a, b, c, d) = (plane.a, plane.b, plane.c, plane.d);
    let k2 = a * a + b * b;
    let xm1 = (xi - 1.0) * (xi + 1.0);
    let den = k2 * xm1 + c * c * xi * xi;
    // D^2 C^2 xi^2 - den (A^2 + B^2 + D^2 - (A^2 + B^2) xi^2), factored to
    // avoid cancelling the D^2 C^2 xi^2 terms.
    let mut disc = k2 * xm1 * (den - d * d);
    if disc < 0.0 {
        if disc >= -1e-12 * den.max(1.0) * den.max(1.0) && xi >= 1.0 {
            disc = 0.0;
        } else {
            return Err(Error::NoIntersection { xi, xi_sr: xi_sr(plane) });
        }
    }
    let root = disc.sqrt();
    let center = d * c * xi;
    let eta1 = ((center - root) / den).clamp(-1.0, 1.0);
    let eta2 = ((center + root) / den).clamp(-1.0, 1.0);
    Ok((eta1, eta2))
}

/// Frozen geometry of one time snapshot in the local frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    l: f64,
    plane: PlaneCoeffs,
    v_t: [f64; 3],
    v_r: [f64; 3],
    f_c: f64,
    c: f64,
}

impl Scenario {
    pub fn new(l: f64, plane: PlaneCoeffs, v_t: Vec3, v_r: Vec3, f_c: f64) -> Result<Self> {
        Self::with_speed(l, plane, v_t, v_r, f_c, SPEED_OF_LIGHT)
    }

    pub fn with_speed(l: f64, plane: PlaneCoeffs, v_t: Vec3, v_r: Vec3, f_c: f64, c: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid(format!("focus half-distance l = {l} must be positive")));
        }
        if !(f_c.is_finite() && f_c > 0.0) {
            return Err(Error::invalid(format!("carrier frequency {f_c} must be positive")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!("propagation speed {c} must be positive")));
        }
        if !(v_t.iter().chain(v_r.iter()).all(|v| v.is_finite())) {
            return Err(Error::invalid("velocities must be finite"));
        }
        Ok(Scenario { l, plane, v_t: v_t.into(), v_r: v_r.into(), f_c, c })
    }

    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn plane(&self) -> &PlaneCoeffs {
        &self.plane
    }
    pub fn v_t(&self) -> Vec3 {
        Vec3::from(self.v_t)
    }
    pub fn v_r(&self) -> Vec3 {
        Vec3::from(self.v_r)
    }
    pub fn f_c(&self) -> f64 {
        self.f_c
    }
    pub fn c(&self) -> f64 {
        self.c
    }

    /// Line-of-sight delay 2l/c.
    pub fn tau_los(&self) -> f64 {
        2.0 * self.l / self.c
    }

    pub fn xi_sr(&self) -> f64 {
        xi_sr(&self.plane)
    }

    pub fn tx_position(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, -self.l)
    }

    pub fn rx_position(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.l)
    }

    pub fn is_static(&self) -> bool {
        self.v_t.iter().chain(&self.v_r).all(|v| *v == 0.0)
    }

    /// Stable hexadecimal fingerprint of all scenario parameters.
    pub fn fingerprint(&self) -> String {
        use std::hash::Hasher;
        let mut h = fnv::FnvHasher::default();
        let p = &self.plane;
        for v in [self.l, p.a, p.b, p.c, p.d, self.f_c, self.c].iter().chain(&self.v_t).chain(&self.v_r) {
            h.write_u64(v.to_bits());
        }
        format!("{:016x}", h.finish())
    }

    /// Same scenario with other velocities.
    pub fn with_velocities(&self, v_t: Vec3, v_r: Vec3) -> Result<Self> {
        Self::with_speed(self.l, self.plane, v_t, v_r, self.f_c, self.c)
    }
}

/// Validated normalized delay interval strictly above the specular delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayRange {
    xi_min: f64,
    xi_max: f64,
}

impl DelayRange {
    pub fn new(xi_min: f64, xi_max: f64, plane: &PlaneCoeffs) -> Result<Self> {
        if !(xi_min.is_finite() && xi_max.is_finite()) {
            return Err(Error::invalid("delay range must be finite"));
        }
        let sr = xi_sr(plane);
        if xi_min <= sr {
            return Err(Error::invalid(format!("xi_min = {xi_min} must exceed xi_sr = {sr}")));
        }
        if xi_max <= xi_min {
            return Err(Error::invalid(format!("xi_max = {xi_max} must exceed xi_min = {xi_min}")));
        }
        Ok(DelayRange { xi_min, xi_max })
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }
    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }
    pub fn contains(&self, xi: f64) -> bool {
        xi >= self.xi_min && xi <= self.xi_max
    }
}

/// World-frame plane `normal . p = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPlane {
    pub normal: Vec3,
    pub offset: f64,
}

/// World-frame positions and velocities of both terminals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub tx_pos: Vec3,
    pub rx_pos: Vec3,
    pub tx_vel: Vec3,
    pub rx_vel: Vec3,
}

/// Orthonormal local frame derived from a link and a plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Vec3,
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
}

impl LocalFrame {
    pub fn to_local(&self, p: &Vec3) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(d.dot(&self.x), d.dot(&self.y), d.dot(&self.z))
    }

    pub fn rotate_to_local(&self, v: &Vec3) -> Vec3 {
        Vec3::new(v.dot(&self.x), v.dot(&self.y), v.dot(&self.z))
    }
}

/// Builds the local scenario for one snapshot.
///
/// The origin is the link midpoint and the z-axis points from TX to RX. The
/// y-axis is the part of the plane normal across the focal axis, oriented
/// toward the plane, so the plane reads `B y + C z = l D` with `B, D >= 0`.
/// When the normal is parallel to the link a fixed perpendicular is used.
pub fn build_local_scenario(link: &LinkState, plane: &WorldPlane, f_c: f64, c: f64) -> Result<(Scenario, LocalFrame)> {
    let all = [link.tx_pos, link.rx_pos, link.tx_vel, link.rx_vel, plane.normal];
    if !all.iter().all(|v| v.iter().all(|c| c.is_finite())) || !plane.offset.is_finite() {
        return Err(Error::invalid("link and plane inputs must be finite"));
    }
    let axis = link.rx_pos - link.tx_pos;
    let dist = axis.norm();
    if dist == 0.0 {
        return Err(Error::invalid("TX and RX positions coincide"));
    }
    let n_len = plane.normal.norm();
    if n_len == 0.0 {
        return Err(Error::invalid("plane normal must be nonzero"));
    }
    let l = 0.5 * dist;
    let z = axis / dist;
    let n = plane.normal / n_len;
    let offset = plane.offset / n_len;
    let origin = 0.5 * (link.tx_pos + link.rx_pos);

    let scale = l.max(offset.abs()).max(origin.norm());
    let on_plane = |p: &Vec3| (n.dot(p) - offset).abs() <= 1e-12 * scale;
    if on_plane(&link.tx_pos) || on_plane(&link.rx_pos) {
        return Err(Error::FocusOnPlane);
    }

    // Signed distance from the origin to the plane along n.
    let s = offset - n.dot(&origin);
    let n_o = if s < 0.0 { -n } else { n };
    let t = n_o - n_o.dot(&z) * z;
    let t_len = t.norm();
    let (y, transverse) = if t_len > TRANSVERSE_EPS {
        (t / t_len, t_len)
    } else {
        (fallback_perpendicular(&z), 0.0)
    };
    let x = y.cross(&z);
    let frame = LocalFrame { origin, x, y, z };
    let c_coef = if transverse == 0.0 { n_o.dot(&z).signum() } else { n_o.dot(&z) };
    let coeffs = PlaneCoeffs::new(0.0, transverse, c_coef, s.abs() / l)?;
    let v_t = frame.rotate_to_local(&link.tx_vel);
    let v_r = frame.rotate_to_local(&link.rx_vel);
    let sc = Scenario::with_speed(l, coeffs, v_t, v_r, f_c, c)?;
    Ok((sc, frame))
}

fn fallback_perpendicular(z: &Vec3) -> Vec3 {
    let axes = [Vec3::x(), Vec3::y(), Vec3::z()];
    let e = axes
        .iter()
        .min_by(|a, b| a.dot(z).abs().total_cmp(&b.dot(z).abs()))
        .unwrap();
    let p = e - e.dot(z) * z;
    p / p.norm()
}
