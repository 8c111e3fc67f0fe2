//! Bessel function of the first kind, order zero.

use std::f64::consts::{FRAC_PI_4, PI};

/// Switch point between the periodic trapezoid and the Hankel expansion.
const ASYMPTOTIC_FROM: f64 = 50.0;

/// J0(x) for real x, accurate to about 1e-14 absolute.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= ASYMPTOTIC_FROM {
        j0_trapezoid(x)
    } else {
        j0_hankel(x)
    }
}

// J0(x) = 1/(2 pi) int_0^{2 pi} cos(x sin t) dt. The integrand is periodic
// and entire, so the trapezoid rule converges geometrically once the node
// count exceeds x.
fn j0_trapezoid(x: f64) -> f64 {
    let m = 2 * ((x + 12.0 * x.cbrt() + 30.0) / 2.0).ceil() as usize;
    // cos(x sin t) is invariant under t -> t + pi, so half a period suffices.
    let half = m / 2;
    let step = PI / half as f64;
    let sum: f64 = (0..half).map(|k| (x * (k as f64 * step).sin()).cos()).sum();
    sum / half as f64
}

fn j0_hankel(x: f64) -> f64 {
    let mut p = 0.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let inv8x = 1.0 / (8.0 * x);
    for k in 0..24 {
        if k > 0 {
            let odd = (2 * k - 1) as f64;
            term *= odd * odd * inv8x / k as f64;
        }
        if term.abs() < 1e-18 {
            break;
        }
        match k % 4 {
            0 => p += term,
            1 => q -= term,
            2 => p -= term,
            _ => q += term,
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
