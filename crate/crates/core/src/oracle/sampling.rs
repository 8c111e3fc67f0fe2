//! Uniform scatterer sampling on the plane region and weighted histograms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::doppler::doppler_cartesian;
use crate::error::{Error, Result};
use crate::geometry::{DelayRange, Scenario, Vec3};
use crate::ring::Ring;
use crate::surface::{ComplexSurface, GridSpec, SurfaceMeta};

/// Accepted samples per independent random stream.
pub const CHUNK: usize = 1 << 16;
/// Chunks evaluated together before their results are merged in order.
const BATCH: usize = 16;
const PILOT_CANDIDATES: usize = 100_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// One uniformly drawn scatterer. `position` holds in-plane coordinates in
/// meters along the semi-axes of the outer intersection ellipse, relative
/// to its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScattererSample {
    pub position: [f64; 2],
    pub xi: f64,
    pub fd: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    PathLoss,
    Uniform,
}

impl Weighting {
    pub fn of(self, s: &ScattererSample) -> f64 {
        match self {
            Weighting::PathLoss => s.weight,
            Weighting::Uniform => 1.0,
        }
    }
}

/// Rejection sampler over the bounding box of the outer ellipse.
pub(crate) struct Sampler<'a> {
    sc: &'a Scenario,
    range: DelayRange,
    center: Vec3,
    u1: Vec3,
    u2: Vec3,
    half1: f64,
    half2: f64,
    seed: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(sc: &'a Scenario, range: &DelayRange, seed: u64) -> Result<Self> {
        let outer = Ring::new(sc, range.xi_max())?;
        let (e1, e2) = outer.semi_axes();
        let s = Sampler {
            sc,
            range: *range,
            center: outer.center(),
            u1: e1.normalize(),
            u2: e2.normalize(),
            half1: e1.norm(),
            half2: e2.norm(),
            seed,
        };
        // Pilot on a stream no chunk uses.
        let mut rng = s.rng(u64::MAX);
        let hits = (0..PILOT_CANDIDATES).filter(|_| s.candidate(&mut rng).is_some()).count();
        let acceptance = hits as f64 / PILOT_CANDIDATES as f64;
        if acceptance < MIN_ACCEPTANCE {
            return Err(Error::DegenerateRegion { acceptance });
        }
        Ok(s)
    }

    fn rng(&self, stream: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn box_area(&self) -> f64 {
        4.0 * self.half1 * self.half2
    }

    fn candidate<R: Rng>(&self, rng: &mut R) -> Option<ScattererSample> {
        let u = self.half1 * (2.0 * rng.random::<f64>() - 1.0);
        let v = self.half2 * (2.0 * rng.random::<f64>() - 1.0);
        let s = self.center + self.u1 * u + self.u2 * v;
        let l = self.sc.l();
        let d_t = (s - self.sc.tx_position()).norm();
        let d_r = (s - self.sc.rx_position()).norm();
        let xi = (d_t + d_r) / (2.0 * l);
        if !self.range.contains(xi) {
            return None;
        }
        let q = d_t * d_r / (l * l);
        Some(ScattererSample { position: [u, v], xi, fd: doppler_cartesian(self.sc, &s), weight: 1.0 / (q * q) })
    }

    /// Exactly `count` accepted samples from stream `index`, plus the number
    /// of candidates drawn.
    pub fn chunk(&self, index: usize, count: usize) -> (Vec<ScattererSample>, usize) {
        let mut rng = self.rng(index as u64);
        let mut out = Vec::with_capacity(count);
        let mut drawn = 0;
        while out.len() < count {
            drawn += 1;
            if let Some(s) = self.candidate(&mut rng) {
                out.push(s);
            }
        }
        (out, drawn)
    }

    /// Visits chunks covering `n` samples in chunk order.
    pub fn for_each_chunk<T, M, F>(&self, n: usize, map: M, mut fold: F)
    where
        T: Send,
        M: Fn(Vec<ScattererSample>, usize) -> T + Sync,
        F: FnMut(T),
    {
        let chunks = n.div_ceil(CHUNK);
        let mut start = 0;
        while start < chunks {
            let end = (start + BATCH).min(chunks);
            let results: Vec<T> = (start..end)
                .into_par_iter()
                .map(|i| {
                    let count = CHUNK.min(n - i * CHUNK);
                    let (samples, drawn) = self.chunk(i, count);
                    map(samples, drawn)
                })
                .collect();
            results.into_iter().for_each(&mut fold);
            start = end;
        }
    }
}

/// `n` scatterers uniform over the plane region between the delay bounds.
/// Deterministic for a fixed seed, independent of the thread count.
pub fn sample_scatterers(sc: &Scenario, r: &DelayRange, n: usize, seed: u64) -> Result<Vec<ScattererSample>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let sampler = Sampler::new(sc, r, seed)?;
    let mut out = Vec::with_capacity(n);
    sampler.for_each_chunk(n, |s, _| s, |s| out.extend(s));
    Ok(out)
}

/// Monte-Carlo estimate of the weighted area and its standard error.
pub fn mc_weighted_area(sc: &Scenario, r: &DelayRange, n: usize, seed: u64) -> Result<(f64, f64)> {
    let sampler = Sampler::new(sc, r, seed)?;
    let (mut s1, mut s2, mut drawn) = (0.0, 0.0, 0usize);
    sampler.for_each_chunk(
        n,
        |s, d| (s.iter().map(|x| x.weight).sum::<f64>(), s.iter().map(|x| x.weight * x.weight).sum::<f64>(), d),
        |(a, b, d)| {
            s1 += a;
            s2 += b;
            drawn += d;
        },
    );
    let nf = drawn as f64;
    let mean = s1 / nf;
    let var = s2 / nf - mean * mean;
    let area = sampler.box_area();
    Ok((area * mean, area * (var / nf).sqrt()))
}

/// Weighted counts on a cell grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub xi_grid: GridSpec,
    pub fd_grid: GridSpec,
    /// Row-major (xi, fd) cell weights.
    pub cells: Vec<f64>,
    /// Marginal weights of the xi cells over all Doppler values.
    pub xi_cells: Vec<f64>,
    pub inside_weight: f64,
    pub total_weight: f64,
    pub count: usize,
}

fn cell_index(g: &GridSpec, x: f64) -> Option<usize> {
    let k = ((x - g.min) / g.step() + 0.5).floor();
    if k >= 0.0 && (k as usize) < g.n {
        Some(k as usize)
    } else {
        None
    }
}

impl Histogram {
    pub fn new(xi_grid: &GridSpec, fd_grid: &GridSpec) -> Self {
        Histogram {
            xi_grid: xi_grid.clone(),
            fd_grid: fd_grid.clone(),
            cells: vec![0.0; xi_grid.n * fd_grid.n],
            xi_cells: vec![0.0; xi_grid.n],
            inside_weight: 0.0,
            total_weight: 0.0,
            count: 0,
        }
    }

    pub fn add(&mut self, s: &ScattererSample, weighting: Weighting) {
        let w = weighting.of(s);
        self.count += 1;
        self.total_weight += w;
        if let Some(i) = cell_index(&self.xi_grid, s.xi) {
            self.xi_cells[i] += w;
            if let Some(j) = cell_index(&self.fd_grid, s.fd) {
                self.cells[i * self.fd_grid.n + j] += w;
                self.inside_weight += w;
            }
        }
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            *a += b;
        }
        for (a, b) in self.xi_cells.iter_mut().zip(&other.xi_cells) {
            *a += b;
        }
        self.inside_weight += other.inside_weight;
        self.total_weight += other.total_weight;
        self.count += other.count;
    }

    /// Cell probabilities relative to the total weight of all samples.
    pub fn probabilities(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c / self.total_weight).collect()
    }

    pub fn xi_probabilities(&self) -> Vec<f64> {
        self.xi_cells.iter().map(|c| c / self.total_weight).collect()
    }

    /// Density normalized by the in-grid weight, so it sums to one times
    /// the cell area.
    pub fn density(&self) -> Result<ComplexSurface> {
        if self.inside_weight <= 0.0 {
            return Err(Error::invalid("no sample falls inside the grid"));
        }
        let area = self.xi_grid.step() * self.fd_grid.step();
        let values = self.cells.iter().map(|c| c / (self.inside_weight * area)).collect();
        ComplexSurface::from_real(
            vec![self.xi_grid.clone(), self.fd_grid.clone()],
            values,
            SurfaceMeta { function: "empirical_joint_pdf".into(), scenario: String::new() },
        )
    }
}

/// Weighted 2-D histogram density of the samples on cells centered at the
/// grid nodes.
pub fn empirical_surface(samples: &[ScattererSample], xi_grid: &GridSpec, fd_grid: &GridSpec, weighting: Weighting) -> Result<ComplexSurface> {
    if samples.is_empty() {
        return Err(Error::invalid("empty sample set"));
    }
    let mut h = Histogram::new(xi_grid, fd_grid);
    samples.iter().for_each(|s| h.add(s, weighting));
    h.density()
}

/// Streams `n` fresh samples into a histogram without keeping them.
/// Produces the same counts as histogramming [`sample_scatterers`] output.
pub fn weighted_histogram(
    sc: &Scenario,
    r: &DelayRange,
    n: usize,
    seed: u64,
    xi_grid: &GridSpec,
    fd_grid: &GridSpec,
    weighting: Weighting,
) -> Result<Histogram> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let sampler = Sampler::new(sc, r, seed)?;
    let mut total = Histogram::new(xi_grid, fd_grid);
    sampler.for_each_chunk(
        n,
        |samples, _| {
            let mut h = Histogram::new(xi_grid, fd_grid);
            samples.iter().for_each(|s| h.add(s, weighting));
            h
        },
        |h| total.merge(&h),
    );
    Ok(total)
}

/// Sum of absolute differences.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
