//! Hybrid characteristic functions, the joint characteristic function and
//! the Doppler-correlated family over snapshot stacks.
//!
//! Sign conventions: transforms over delay use `exp(-j 2 pi dftilde xi)`,
//! transforms over Doppler use `exp(+j 2 pi f_d dt)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::density::{check_xi_grid, complementary_ring_mass, joint_pdf, meta, weighted_area};
use crate::doppler::complementary_frequencies;
use crate::error::{Error, Result};
use crate::geometry::{DelayRange, Scenario};
use crate::quadrature::{FilonTable, GaussLegendre};
use crate::ring::Ring;
use crate::special::bessel_j0;
use crate::surface::{axis, ComplexSurface, GridSpec, SurfaceMeta};

/// Relative accuracy of the per-ring phase integrals.
const RING_TOL: f64 = 1e-12;

/// Largest phase advance of `exp(-j 2 pi dftilde xi)` across one delay panel
/// of the direct joint transform.
const PANEL_PHASE: f64 = 6.0;

/// Samples of `w(phi)` and `F(phi)` on a periodic rule that resolves the
/// phase integrals up to `dt_max`.
struct RingSamples {
    weights: Vec<f64>,
    doppler: Vec<f64>,
}

impl RingSamples {
    fn new(sc: &Scenario, xi: f64, dt_max: f64) -> Result<Self> {
        let ring = Ring::new(sc, xi)?;
        let n = ring.periodic_nodes(dt_max, RING_TOL)?;
        let h = TAU / n as f64;
        let weights = (0..n).map(|j| ring.weight(j as f64 * h) * h).collect();
        let doppler = (0..n).map(|j| ring.doppler(j as f64 * h)).collect();
        Ok(RingSamples { weights, doppler })
    }

    /// `int w exp(j 2 pi dt F) dphi`.
    fn eval(&self, dt: f64) -> Complex64 {
        self.weights
            .iter()
            .zip(&self.doppler)
            .map(|(w, f)| Complex64::from_polar(*w, TAU * dt * f))
            .sum()
    }
}

/// rho(xi, dt) for a general plane: the Doppler characteristic function of
/// each delay ring, scaled by the delay density.
pub fn hybrid_time_delay(sc: &Scenario, r: &DelayRange, xi_grid: &GridSpec, dt_grid: &GridSpec) -> Result<ComplexSurface> {
    if sc.plane().is_complementary() {
        return Err(Error::CaseMismatch { expected: "general" });
    }
    check_xi_grid(sc, xi_grid)?;
    let area = weighted_area(sc, r)?;
    let dts = dt_grid.nodes();
    let dt_max = dt_grid.max_abs();
    let rows = xi_grid
        .nodes()
        .par_iter()
        .map(|&xi| -> Result<Vec<Complex64>> {
            if !r.contains(xi) {
                return Ok(vec![Complex64::new(0.0, 0.0); dts.len()]);
            }
            let s = RingSamples::new(sc, xi, dt_max)?;
            Ok(dts.iter().map(|&dt| s.eval(dt) / area).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexSurface::new(vec![xi_grid.clone(), dt_grid.clone()], rows.concat(), meta(sc, "rho"))
}

/// rho(xi, dt) for a plane perpendicular to the focal axis, in closed form
/// `p(xi) J0(2 pi f_l dt) exp(j 2 pi f_o dt)`.
pub fn hybrid_time_delay_complementary(
    sc: &Scenario,
    r: &DelayRange,
    xi_grid: &GridSpec,
    dt_grid: &GridSpec,
) -> Result<ComplexSurface> {
    if !sc.plane().is_complementary() {
        return Err(Error::CaseMismatch { expected: "complementary" });
    }
    check_xi_grid(sc, xi_grid)?;
    let area = weighted_area(sc, r)?;
    let dts = dt_grid.nodes();
    let mut values = Vec::with_capacity(xi_grid.n * dts.len());
    for xi in xi_grid.nodes() {
        if !r.contains(xi) {
            values.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), dts.len()));
            continue;
        }
        let p = complementary_ring_mass(sc, xi) / area;
        let (f_o, f_l) = complementary_frequencies(sc, xi)?;
        values.extend(dts.iter().map(|&dt| Complex64::from_polar(p * bessel_j0(TAU * f_l * dt), TAU * f_o * dt)));
    }
    ComplexSurface::new(vec![xi_grid.clone(), dt_grid.clone()], values, meta(sc, "rho"))
}

/// rho(xi, dt) for either plane case.
pub fn rho_surface(sc: &Scenario, r: &DelayRange, xi_grid: &GridSpec, dt_grid: &GridSpec) -> Result<ComplexSurface> {
    if sc.plane().is_complementary() {
        hybrid_time_delay_complementary(sc, r, xi_grid, dt_grid)
    } else {
        hybrid_time_delay(sc, r, xi_grid, dt_grid)
    }
}

fn check_nyquist(xi_axis: &GridSpec, dftilde_grid: &GridSpec) -> Result<()> {
    let nyquist = 0.5 / xi_axis.step();
    let requested = dftilde_grid.max_abs();
    if requested > nyquist * (1.0 + 1e-9) {
        return Err(Error::GridTooCoarse { requested, nyquist });
    }
    Ok(())
}

/// Transform along a delay axis 0: `int S(xi, .) exp(-j 2 pi dftilde xi) dxi`
/// by Filon quadrature. The result has axes `(dftilde, axis 1)`.
pub fn xi_transform(s: &ComplexSurface, dftilde_grid: &GridSpec, function: &str) -> Result<ComplexSurface> {
    let xa = s.axis(0);
    if xa.name != axis::XI {
        return Err(Error::invalid(format!("axis 0 must be `{}`, found `{}`", axis::XI, xa.name)));
    }
    check_nyquist(xa, dftilde_grid)?;
    let cols = s.cols();
    let columns: Vec<Vec<Complex64>> = (0..cols).map(|j| s.column(j)).collect();
    let rows = dftilde_grid
        .nodes()
        .par_iter()
        .map(|&df| {
            let table = FilonTable::new(xa.n, xa.min, xa.step(), -TAU * df);
            columns.iter().map(|c| table.apply(c)).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    let mut axes = vec![dftilde_grid.clone()];
    axes.extend(s.axes().iter().skip(1).cloned());
    ComplexSurface::new(axes, rows.concat(), SurfaceMeta { function: function.into(), scenario: s.meta().scenario.clone() })
}

/// Transform along a Doppler axis (the last axis):
/// `int S(., f_d) exp(+j 2 pi f_d dt) df_d` by Filon quadrature.
pub fn fd_transform(s: &ComplexSurface, dt_grid: &GridSpec, function: &str) -> Result<ComplexSurface> {
    let fa = s.axes().last().unwrap();
    if fa.name != axis::FD {
        return Err(Error::invalid(format!("last axis must be `{}`, found `{}`", axis::FD, fa.name)));
    }
    let tables: Vec<FilonTable> = dt_grid.nodes().iter().map(|&dt| FilonTable::new(fa.n, fa.min, fa.step(), TAU * dt)).collect();
    let lines: Vec<&[Complex64]> = if s.is_2d() { (0..s.rows()).map(|i| s.row(i)).collect() } else { vec![s.values()] };
    let values: Vec<Complex64> = lines
        .par_iter()
        .map(|line| tables.iter().map(|t| t.apply(line)).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .concat();
    let mut axes: Vec<GridSpec> = s.axes()[..s.axes().len() - 1].to_vec();
    axes.push(dt_grid.clone());
    ComplexSurface::new(axes, values, SurfaceMeta { function: function.into(), scenario: s.meta().scenario.clone() })
}

/// varrho(dftilde, f_d): the delay transform of the joint density.
///
/// The joint density is first built on `xi_grid` and `fd_grid`; the delay
/// transform then needs `|dftilde| <= 1 / (2 dxi)`.
pub fn hybrid_freq_doppler(
    sc: &Scenario,
    r: &DelayRange,
    xi_grid: &GridSpec,
    dftilde_grid: &GridSpec,
    fd_grid: &GridSpec,
) -> Result<ComplexSurface> {
    check_nyquist(xi_grid, dftilde_grid)?;
    let joint = joint_pdf(sc, r, xi_grid, fd_grid)?;
    xi_transform(&joint, dftilde_grid, "varrho")
}

/// Joint characteristic function r(dftilde, dt), computed directly from the
/// ring integrals with Gauss-Legendre panels in delay.
pub fn joint_char(sc: &Scenario, r: &DelayRange, dftilde_grid: &GridSpec, dt_grid: &GridSpec) -> Result<ComplexSurface> {
    let values = joint_char_points(sc, r, &dftilde_grid.nodes(), &dt_grid.nodes())?;
    ComplexSurface::new(vec![dftilde_grid.clone(), dt_grid.clone()], values, meta(sc, "r"))
}

/// r at a single lag pair.
pub fn joint_char_at(sc: &Scenario, r: &DelayRange, dftilde: f64, dt: f64) -> Result<Complex64> {
    Ok(joint_char_points(sc, r, &[dftilde], &[dt])?[0])
}

/// r on the outer product of `dfs` and `dts`, row-major in `dfs`.
pub fn joint_char_points(sc: &Scenario, r: &DelayRange, dfs: &[f64], dts: &[f64]) -> Result<Vec<Complex64>> {
    let area = weighted_area(sc, r)?;
    let df_max = dfs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dt_max = dts.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let span = r.xi_max() - r.xi_min();
    let width = if df_max > 0.0 { (PANEL_PHASE / (TAU * df_max)).min(0.25) } else { 0.25 };
    let panels = (span / width).ceil() as usize;
    let rule = GaussLegendre::cached(16);
    let h = span / panels as f64;
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|i| {
            let a = r.xi_min() + i as f64 * h;
            rule.mapped(a, a + h).collect::<Vec<_>>()
        })
        .collect();
    let complementary = sc.plane().is_complementary();
    // rho at every delay node, weighted by the panel rule.
    let rho = nodes
        .par_iter()
        .map(|&(xi, w)| -> Result<Vec<Complex64>> {
            if complementary {
                let p = complementary_ring_mass(sc, xi);
                let (f_o, f_l) = complementary_frequencies(sc, xi)?;
                Ok(dts.iter().map(|&dt| Complex64::from_polar(w * p * bessel_j0(TAU * f_l * dt), TAU * f_o * dt)).collect())
            } else {
                let s = RingSamples::new(sc, xi, dt_max)?;
                Ok(dts.iter().map(|&dt| s.eval(dt) * w).collect())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dfs
        .par_iter()
        .map(|&df| {
            let phases: Vec<Complex64> = nodes.iter().map(|&(xi, _)| Complex64::from_polar(1.0 / area, -TAU * df * xi)).collect();
            (0..dts.len())
                .map(|j| phases.iter().zip(&rho).map(|(p, row)| p * row[j]).sum::<Complex64>())
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat())
}

/// Normalized Doppler characteristic function of the ring at `xi`,
/// `rho(dt | xi)`, at the given lags.
pub fn ring_characteristic(sc: &Scenario, xi: f64, dts: &[f64]) -> Result<Vec<Complex64>> {
    if sc.plane().is_complementary() {
        let (f_o, f_l) = complementary_frequencies(sc, xi)?;
        return Ok(dts.iter().map(|&dt| Complex64::from_polar(bessel_j0(TAU * f_l * dt), TAU * f_o * dt)).collect());
    }
    let dt_max = dts.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let s = RingSamples::new(sc, xi, dt_max)?;
    let mass: f64 = s.weights.iter().sum();
    Ok(dts.iter().map(|&dt| s.eval(dt) / mass).collect())
}

/// Divides every line along `axis` by its value at the zero node of that
/// axis, so the zero-lag line becomes 1.
pub fn conditional_normalize(s: &ComplexSurface, along: usize) -> Result<ComplexSurface> {
    if along >= s.axes().len() {
        return Err(Error::invalid(format!("surface has no axis {along}")));
    }
    let g = s.axis(along);
    let zero = g.find_node(0.0).ok_or_else(|| Error::invalid(format!("axis `{}` has no zero node", g.name)))?;
    let (rows, cols) = (s.rows(), s.cols());
    let lines = if along == 0 { cols } else { rows };
    let norm_of = |k: usize| if along == 0 { s.get(zero, k) } else { s.get(k, zero) };
    let scale = (0..lines).map(|k| norm_of(k).norm()).fold(0.0, f64::max);
    let bad: Vec<usize> = (0..lines).filter(|&k| norm_of(k).norm() <= 1e-12 * scale || scale == 0.0).collect();
    if !bad.is_empty() {
        return Err(Error::VanishingNormalizer { nodes: bad });
    }
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let (k, at_zero) = if along == 0 { (j, i == zero) } else { (i, j == zero) };
            values.push(if at_zero { Complex64::new(1.0, 0.0) } else { s.get(i, j) / norm_of(k) });
        }
    }
    let mut m = s.meta().clone();
    m.function = format!("{}_conditional", m.function);
    ComplexSurface::new(s.axes().to_vec(), values, m)
}

/// Time-ordered surfaces on shared grids with a uniform time step.
#[derive(Debug, Clone)]
pub struct SnapshotStack {
    times: Vec<f64>,
    surfaces: Vec<ComplexSurface>,
}

impl SnapshotStack {
    pub fn new(snapshots: Vec<(f64, ComplexSurface)>) -> Result<Self> {
        if snapshots.len() < 2 {
            return Err(Error::invalid("a snapshot stack needs at least two snapshots"));
        }
        let (times, surfaces): (Vec<f64>, Vec<ComplexSurface>) = snapshots.into_iter().unzip();
        if surfaces.iter().any(|s| s.axes() != surfaces[0].axes()) {
            return Err(Error::invalid("snapshots must share their grids"));
        }
        let step = times[1] - times[0];
        if !(step > 0.0) {
            return Err(Error::NonUniformSteps);
        }
        if times.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step) {
            return Err(Error::NonUniformSteps);
        }
        Ok(SnapshotStack { times, surfaces })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

/// One member of the Doppler-correlated family.
#[derive(Debug, Clone)]
pub struct DopplerSlice {
    pub dfd: f64,
    pub surface: ComplexSurface,
}

/// Discrete Fourier transform along the snapshot axis,
/// `sum_n S(t_n) exp(-j 2 pi dfd t_n) dt_s`, ordered by ascending `dfd`.
/// The `dfd = 0` slice is the duration times the temporal mean.
pub fn temporal_fourier(stack: &SnapshotStack) -> Result<Vec<DopplerSlice>> {
    let n = stack.len();
    let ts = stack.step();
    let mut ks: Vec<i64> = (0..n as i64).map(|k| if k < n.div_ceil(2) as i64 { k } else { k - n as i64 }).collect();
    ks.sort();
    ks.into_iter()
        .map(|k| {
            let dfd = k as f64 / (n as f64 * ts);
            let count = stack.surfaces[0].values().len();
            let mut acc = vec![Complex64::new(0.0, 0.0); count];
            for (t, s) in stack.times.iter().zip(&stack.surfaces) {
                let ph = Complex64::from_polar(ts, -TAU * dfd * t);
                for (a, v) in acc.iter_mut().zip(s.values()) {
                    *a += ph * v;
                }
            }
            let mut m = stack.surfaces[0].meta().clone();
            m.function = format!("{}_dfd", m.function);
            Ok(DopplerSlice { dfd, surface: ComplexSurface::new(stack.surfaces[0].axes().to_vec(), acc, m)? })
        })
        .collect()
}
