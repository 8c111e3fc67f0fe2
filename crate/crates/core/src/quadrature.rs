//! Quadrature rules and a bracketing root finder.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared cached rule.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().unwrap().get(&n) {
            return rule.clone();
        }
        let rule = Arc::new(GaussLegendre::new(n));
        cache.lock().unwrap().insert(n, rule.clone());
        rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 7/15 point Gauss-Kronrod panel: (Kronrod estimate, |K - G|).
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(mid - dx) + f(mid + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod integration of `f` on [a, b].
///
/// Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)`; returns the value and the error estimate.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(f64, f64)> {
    const MAX_PANELS: usize = 4000;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gauss_kronrod_15(&mut f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::QuadratureNotConverged { value: total, error_estimate: err });
        }
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::QuadratureNotConverged { value: total, error_estimate: err });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let pm = 0.5 * (pa + pb);
        let (v1, e1) = gauss_kronrod_15(&mut f, pa, pm);
        let (v2, e2) = gauss_kronrod_15(&mut f, pm, pb);
        panels.push((pa, pm, v1, e1));
        panels.push((pm, pb, v2, e2));
    }
}

/// Exact moments of the linear hat functions against e^{i theta s} on [0, 1]:
/// returns (int (1-s) e^{i theta s} ds, int s e^{i theta s} ds).
fn filon_weights(theta: f64) -> (Complex64, Complex64) {
    if theta.abs() < 0.5 {
        // Power series; 24 terms is far past convergence for |theta| < 0.5.
        let it = Complex64::new(0.0, theta);
        let mut term = Complex64::new(1.0, 0.0);
        let mut w0 = Complex64::new(0.0, 0.0);
        let mut w1 = Complex64::new(0.0, 0.0);
        for n in 0..24 {
            let nf = n as f64;
            w0 += term / ((nf + 1.0) * (nf + 2.0));
            w1 += term / (nf + 2.0);
            term = term * it / (nf + 1.0);
        }
        (w0, w1)
    } else {
        let e = Complex64::from_polar(1.0, theta);
        let it = Complex64::new(0.0, theta);
        let full = (e - 1.0) / it;
        let w1 = e / it + (e - 1.0) / (theta * theta);
        (full - w1, w1)
    }
}

/// Filon-type quadrature of `int y(x) e^{i omega x} dx` over a uniform grid,
/// with `y` linearly interpolated between samples `y[k]` at `x0 + k*dx`.
pub fn filon_linear(y: &[Complex64], x0: f64, dx: f64, omega: f64) -> Complex64 {
    let table = FilonTable::new(y.len(), x0, dx, omega);
    table.apply(y)
}

/// Precomputed Filon coefficients for one frequency on one grid, so that
/// many lines can share the same phase factors.
#[derive(Debug, Clone)]
pub struct FilonTable {
    coeffs: Vec<Complex64>,
}

impl FilonTable {
    pub fn new(n: usize, x0: f64, dx: f64, omega: f64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        if n < 2 {
            return FilonTable { coeffs };
        }
        let (w0, w1) = filon_weights(omega * dx);
        for k in 0..n - 1 {
            let phase = Complex64::from_polar(dx, omega * (x0 + k as f64 * dx));
            coeffs[k] += phase * w0;
            coeffs[k + 1] += phase * w1;
        }
        FilonTable { coeffs }
    }

    pub fn apply(&self, y: &[Complex64]) -> Complex64 {
        debug_assert_eq!(y.len(), self.coeffs.len());
        self.coeffs.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    pub fn apply_real(&self, y: &[f64]) -> Complex64 {
        debug_assert_eq!(y.len(), self.coeffs.len());
        self.coeffs.iter().zip(y).map(|(c, v)| c * v).sum()
    }
}

/// Brent's bracketing root finder. `fa` and `fb` must differ in sign
/// (or one of them be zero).
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::invalid(format!("root not bracketed on [{a}, {b}]")));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 64] {
            let rule = GaussLegendre::new(n);
            let degree = 2 * n - 1;
            let got = rule.integrate(0.0, 2.0, |x| x.powi(degree as i32));
            let want = 2f64.powi(degree as i32 + 1) / (degree as f64 + 1.0);
            assert!((got - want).abs() <= 1e-12 * want, "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [3, 40, 513, 2048] {
            let rule = GaussLegendre::cached(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-12, "n={n}: {s}");
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn adaptive_handles_endpoint_peak() {
        let (v, _) = integrate_adaptive(|x: f64| 1.0 / x.sqrt(), 1e-12, 1.0, 1e-10, 0.0).unwrap();
        assert!((v - (2.0 - 2.0 * 1e-6)).abs() < 1e-8);
    }

    #[test]
    fn filon_matches_closed_form() {
        // int_0^1 x e^{i w x} dx with large w, linear integrand is exact.
        let n = 11;
        let y: Vec<Complex64> = (0..n).map(|k| Complex64::new(k as f64 / 10.0, 0.0)).collect();
        for w in [0.0, 0.3, 7.0, 131.0] {
            let got = filon_linear(&y, 0.0, 0.1, w);
            let want = if w == 0.0 {
                Complex64::new(0.5, 0.0)
            } else {
                let i = Complex64::new(0.0, 1.0);
                let e = Complex64::from_polar(1.0, w);
                e / (i * w) + (e - 1.0) / (w * w)
            };
            assert!((got - want).norm() < 1e-13, "w={w}: {got} vs {want}");
        }
    }

    #[test]
    fn brent_finds_cosine_root() {
        let r = brent_root(f64::cos, 0.0, 3.0, 1e-15).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
