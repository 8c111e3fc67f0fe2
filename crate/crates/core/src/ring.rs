//! The plane-ellipsoid intersection at fixed delay, parameterized by an
//! angle `phi` so that the weighted surface density per `dxi dphi` is smooth
//! and periodic.
//!
//! With `k = sqrt(A^2 + B^2)` and `a = k^2 (xi^2 - 1) + C^2 xi^2` the
//! intersection is the ellipse `center + e1 cos(phi) + e2 sin(phi)` and
//! `eta = m + k H sin(phi)`. The weighted area element
//! `w dS = l^2 / ((xi^2 - eta^2) sqrt(a)) dxi dphi` carries no endpoint
//! singularity, unlike the same integral written in `eta`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::doppler::doppler_cartesian;
use crate::error::{Error, Result};
use crate::geometry::{Scenario, Vec3};
use crate::quadrature::{brent_root, GaussLegendre};

const PHI_TOL: f64 = 1e-14;
const SCAN_POINTS: usize = 512;
pub(crate) const MAX_PERIODIC_NODES: usize = 1 << 17;

#[derive(Debug, Clone)]
pub(crate) struct Ring<'a> {
    sc: &'a Scenario,
    pub xi: f64,
    center: Vec3,
    e1: Vec3,
    e2: Vec3,
    m: f64,
    kh: f64,
    weight_scale: f64,
    doppler_scale: f64,
}

impl<'a> Ring<'a> {
    pub fn new(sc: &'a Scenario, xi: f64) -> Result<Self> {
        let p = sc.plane();
        let l = sc.l();
        let k = p.transverse();
        let (alpha, beta) = if k > 0.0 { (p.a() / k, p.b() / k) } else { (1.0, 0.0) };
        let (c, d) = (p.c(), p.d());
        let xm1 = (xi - 1.0) * (xi + 1.0);
        let a = k * k * xm1 + c * c * xi * xi;
        let core = xm1 * (a - d * d);
        if !(xi > sc.xi_sr() && core > 0.0) {
            return Err(Error::NoIntersection { xi, xi_sr: sc.xi_sr() });
        }
        let h = core.sqrt() / a;
        let sa = a.sqrt();
        let p0 = d * k * xm1 / a;
        let m = d * c * xi / a;
        let center = l * Vec3::new(alpha * p0, beta * p0, xi * m);
        let e1 = l * h * Vec3::new(-beta * sa, alpha * sa, 0.0);
        let e2 = l * h * Vec3::new(-alpha * c * xi, -beta * c * xi, xi * k);
        let speed = sc.v_t().norm() + sc.v_r().norm();
        Ok(Ring {
            sc,
            xi,
            center,
            e1,
            e2,
            m,
            kh: k * h,
            weight_scale: l * l / sa,
            doppler_scale: speed * sc.f_c() / sc.c(),
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// Semi-axis vectors of the intersection ellipse (orthogonal).
    pub fn semi_axes(&self) -> (Vec3, Vec3) {
        (self.e1, self.e2)
    }

    pub fn point(&self, phi: f64) -> Vec3 {
        let (s, c) = phi.sin_cos();
        self.center + self.e1 * c + self.e2 * s
    }

    pub fn eta(&self, phi: f64) -> f64 {
        self.m + self.kh * phi.sin()
    }

    /// Weighted area per unit xi and unit phi.
    pub fn weight(&self, phi: f64) -> f64 {
        let eta = self.eta(phi);
        self.weight_scale / ((self.xi - eta) * (self.xi + eta))
    }

    pub fn doppler(&self, phi: f64) -> f64 {
        doppler_cartesian(self.sc, &self.point(phi))
    }

    pub fn doppler_dphi(&self, phi: f64) -> f64 {
        let s = self.point(phi);
        let (sn, cs) = phi.sin_cos();
        let ds = self.e2 * cs - self.e1 * sn;
        let term = |v: Vec3, focus: Vec3| {
            let u = s - focus;
            let d = u.norm();
            let uh = u / d;
            (v.dot(&ds) - v.dot(&uh) * uh.dot(&ds)) / d
        };
        self.sc.f_c() / self.sc.c() * (term(self.sc.v_t(), self.sc.tx_position()) + term(self.sc.v_r(), self.sc.rx_position()))
    }

    /// Upper bound on |f_d| anywhere.
    pub fn doppler_scale(&self) -> f64 {
        self.doppler_scale
    }

    /// Periodic trapezoid rule on `n` nodes.
    pub fn trapezoid<F: FnMut(f64) -> Complex64>(n: usize, mut f: F) -> Complex64 {
        let h = TAU / n as f64;
        (0..n).map(|j| f(j as f64 * h)).sum::<Complex64>() * h
    }

    /// Weighted area per unit xi (unnormalized delay density).
    pub fn mass(&self) -> Result<f64> {
        let mut n = 32;
        let mut prev = Self::trapezoid(n, |p| Complex64::new(self.weight(p), 0.0)).re;
        loop {
            n *= 2;
            let cur = Self::trapezoid(n, |p| Complex64::new(self.weight(p), 0.0)).re;
            if (cur - prev).abs() <= 1e-14 * cur.abs() {
                return Ok(cur);
            }
            if n >= MAX_PERIODIC_NODES {
                return Err(Error::QuadratureNotConverged { value: cur, error_estimate: (cur - prev).abs() });
            }
            prev = cur;
        }
    }

    /// Node count of the periodic rule that resolves
    /// `int w exp(j 2 pi dt F) dphi` for all |dt| <= dt_max to `rel_tol`.
    pub fn periodic_nodes(&self, dt_max: f64, rel_tol: f64) -> Result<usize> {
        let eval = |n: usize| Self::trapezoid(n, |p| self.weight(p) * Complex64::from_polar(1.0, TAU * dt_max * self.doppler(p)));
        let mass = self.mass()?;
        let phase_span = TAU * dt_max.abs() * self.doppler_scale;
        let mut n = 32usize.max((phase_span.ceil() as usize + 16).next_power_of_two());
        let mut prev = eval(n);
        loop {
            n *= 2;
            let cur = eval(n);
            let err = (cur - prev).norm();
            if err <= rel_tol * mass {
                return Ok(n / 2);
            }
            if n >= MAX_PERIODIC_NODES {
                return Err(Error::QuadratureNotConverged { value: cur.norm(), error_estimate: err });
            }
            prev = cur;
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Arc {
    pub phi0: f64,
    pub phi1: f64,
    pub f0: f64,
    pub f1: f64,
}

impl Arc {
    fn lo(&self) -> f64 {
        self.f0.min(self.f1)
    }
    fn hi(&self) -> f64 {
        self.f0.max(self.f1)
    }
}

/// The Doppler map over one ring split into monotone arcs.
#[derive(Debug, Clone)]
pub(crate) struct Profile<'a> {
    pub ring: Ring<'a>,
    pub arcs: Vec<Arc>,
    pub f_min: f64,
    pub f_max: f64,
}

impl<'a> Profile<'a> {
    pub fn new(ring: Ring<'a>) -> Result<Self> {
        let n = SCAN_POINTS;
        let h = TAU / n as f64;
        let g: Vec<f64> = (0..n).map(|j| ring.doppler_dphi(j as f64 * h)).collect();
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= 1e-13 * ring.doppler_scale().max(f64::MIN_POSITIVE) || gmax == 0.0 {
            return Err(Error::ZeroDopplerSpread);
        }
        let mut crit = Vec::new();
        for j in 0..n {
            let (ga, gb) = (g[j], g[(j + 1) % n]);
            let turning = (ga > 0.0 && gb <= 0.0) || (ga < 0.0 && gb >= 0.0);
            if turning {
                let a = j as f64 * h;
                let phi = brent_root(|p| ring.doppler_dphi(p), a, a + h, PHI_TOL)?;
                crit.push(phi.rem_euclid(TAU));
            }
        }
        crit.sort_by(f64::total_cmp);
        crit.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        if crit.len() > 1 && crit[0] + TAU - crit[crit.len() - 1] < 1e-12 {
            crit.pop();
        }
        if crit.len() < 2 {
            return Err(Error::ZeroDopplerSpread);
        }
        let vals: Vec<f64> = crit.iter().map(|&p| ring.doppler(p)).collect();
        let m = crit.len();
        let arcs = (0..m)
            .map(|i| {
                let j = (i + 1) % m;
                let phi1 = if j == 0 { crit[0] + TAU } else { crit[j] };
                Arc { phi0: crit[i], phi1, f0: vals[i], f1: vals[j] }
            })
            .collect();
        let f_min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let f_max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Profile { ring, arcs, f_min, f_max })
    }

    /// Phi on `arc` where the Doppler shift equals `f`.
    fn solve(&self, arc: &Arc, f: f64) -> Result<f64> {
        brent_root(|p| self.ring.doppler(p) - f, arc.phi0, arc.phi1, PHI_TOL)
    }

    fn integrate_weight(&self, a: f64, b: f64) -> f64 {
        // Sub-arcs are at most half a turn and the weight is smooth there.
        let rule = GaussLegendre::cached(24);
        let pieces = (((b - a) / 0.4).ceil() as usize).max(1);
        let h = (b - a) / pieces as f64;
        (0..pieces)
            .map(|i| {
                let lo = a + i as f64 * h;
                rule.integrate(lo, lo + h, |p| self.ring.weight(p))
            })
            .sum()
    }

    /// Unnormalized mass of the ring falling in each Doppler cell
    /// `[edges[i], edges[i + 1])`. Mass outside the edges is dropped.
    pub fn cell_masses(&self, edges: &[f64]) -> Result<Vec<f64>> {
        let ncell = edges.len().saturating_sub(1);
        let mut out = vec![0.0; ncell];
        for arc in &self.arcs {
            let (lo, hi) = (arc.lo(), arc.hi());
            let mut cuts = vec![arc.phi0, arc.phi1];
            let first = edges.partition_point(|&e| e <= lo);
            for &e in edges[first..].iter().take_while(|&&e| e < hi) {
                cuts.push(self.solve(arc, e)?);
            }
            cuts.sort_by(f64::total_cmp);
            for w in cuts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                let fm = self.ring.doppler(0.5 * (w[0] + w[1]));
                let idx = edges.partition_point(|&e| e <= fm);
                if idx == 0 || idx > ncell {
                    continue;
                }
                out[idx - 1] += self.integrate_weight(w[0], w[1]);
            }
        }
        Ok(out)
    }

    /// Unnormalized conditional density `sum w / |dF/dphi|` over the
    /// preimages of `f`.
    pub fn density_at(&self, f: f64) -> Result<f64> {
        let mut acc = 0.0;
        for arc in &self.arcs {
            if f > arc.lo() && f < arc.hi() {
                let phi = self.solve(arc, f)?;
                let g = self.ring.doppler_dphi(phi).abs();
                if g == 0.0 {
                    return Err(Error::SingularDerivative { xi: self.ring.xi, eta: self.ring.eta(phi) });
                }
                acc += self.ring.weight(phi) / g;
            } else if f == arc.f0 || f == arc.f1 {
                return Err(Error::SingularDerivative { xi: self.ring.xi, eta: f64::NAN });
            }
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doppler::doppler_at;
    use crate::geometry::{from_cartesian, PlaneCoeffs};

    fn skewed() -> Scenario {
        Scenario::new(
            40.0,
            PlaneCoeffs::new(0.3, -0.5, 0.7, 1.1).unwrap(),
            Vec3::new(10.0, -3.0, 20.0),
            Vec3::new(-7.0, 4.0, 15.0),
            2e9,
        )
        .unwrap()
    }

    #[test]
    fn ring_points_lie_on_plane_and_ellipsoid() {
        let sc = skewed();
        let p = sc.plane();
        let ring = Ring::new(&sc, 3.2).unwrap();
        for j in 0..50 {
            let phi = j as f64 * 0.13;
            let s = ring.point(phi);
            let plane_res = p.a() * s.x + p.b() * s.y + p.c() * s.z - sc.l() * p.d();
            assert!(plane_res.abs() < 1e-10 * sc.l());
            let q = from_cartesian(&s, sc.l());
            assert!((q.xi() - 3.2).abs() < 1e-12);
            assert!((q.eta() - ring.eta(phi)).abs() < 1e-12);
            let f = doppler_at(&sc, &q).unwrap();
            assert!((f - ring.doppler(phi)).abs() < 1e-9 * ring.doppler_scale());
        }
    }

    #[test]
    fn dphi_matches_finite_difference() {
        let sc = skewed();
        let ring = Ring::new(&sc, 2.6).unwrap();
        for j in 0..40 {
            let phi = j as f64 * 0.157;
            let h = 1e-5;
            let fd = (ring.doppler(phi + h) - ring.doppler(phi - h)) / (2.0 * h);
            assert!((fd - ring.doppler_dphi(phi)).abs() < 1e-6 * ring.doppler_scale());
        }
    }

    #[test]
    fn cell_masses_sum_to_ring_mass() {
        let sc = skewed();
        let prof = Profile::new(Ring::new(&sc, 4.0).unwrap()).unwrap();
        let edges: Vec<f64> = (0..=400).map(|i| prof.f_min - 1.0 + (prof.f_max - prof.f_min + 2.0) * i as f64 / 400.0).collect();
        let masses = prof.cell_masses(&edges).unwrap();
        let total: f64 = masses.iter().sum();
        let mass = prof.ring.mass().unwrap();
        assert!((total - mass).abs() < 1e-12 * mass, "{total} vs {mass}");
    }
}
