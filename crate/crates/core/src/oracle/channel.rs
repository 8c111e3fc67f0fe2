//! Synthetic tapped-delay-line realizations and empirical correlation
//! estimators.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::sampling::{sample_scatterers, ScattererSample};
use crate::error::{Error, Result};
use crate::geometry::{DelayRange, Scenario};
use crate::surface::{ComplexSurface, GridSpec, SurfaceMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub scatterers: usize,
    pub duration_s: f64,
    pub time_step_s: f64,
    /// Tap spacing in normalized delay.
    pub delay_step_xi: f64,
    /// Number of delay bins; 0 sizes the grid to cover every tap.
    pub delay_bins: usize,
    pub seed: u64,
    pub phase_seed: u64,
}

impl ChannelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.scatterers == 0 {
            return Err(Error::invalid("scatterer count must be at least 1"));
        }
        if !(self.time_step_s > 0.0 && self.duration_s >= self.time_step_s) {
            return Err(Error::invalid("need duration >= time step > 0"));
        }
        if !(self.delay_step_xi > 0.0) {
            return Err(Error::invalid("delay step must be positive"));
        }
        Ok(())
    }
}

/// Complex taps h(t, tau) on a uniform time grid centered on t = 0 and a
/// uniform delay grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub time_step_s: f64,
    pub t0: f64,
    pub n_time: usize,
    /// Normalized delay of bin 0.
    pub xi0: f64,
    pub delay_step_xi: f64,
    pub delay_step_s: f64,
    pub n_delay: usize,
    /// Row-major (time, delay).
    pub taps: Vec<Complex64>,
    /// Scatterers per delay bin at t = 0.
    pub tap_counts: Vec<usize>,
    pub scatterers: usize,
    pub seed: u64,
}

impl ChannelRealization {
    pub fn tap(&self, i: usize, b: usize) -> Complex64 {
        self.taps[i * self.n_delay + b]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.time_step_s
    }

    pub fn bin_xi(&self, b: usize) -> f64 {
        self.xi0 + b as f64 * self.delay_step_xi
    }
}

/// Draws `spec.scatterers` uniform scatterers and synthesizes their channel.
pub fn synthesize_channel(sc: &Scenario, r: &DelayRange, spec: &ChannelSpec) -> Result<ChannelRealization> {
    spec.validate()?;
    let samples = sample_scatterers(sc, r, spec.scatterers, spec.seed)?;
    synthesize_from_scatterers(sc, &samples, spec)
}

/// Each scatterer contributes amplitude sqrt(w) with a uniform random phase,
/// rotates at its Doppler and drifts in delay at the matching rate. Taps are
/// placed in the nearest delay bin.
pub fn synthesize_from_scatterers(sc: &Scenario, samples: &[ScattererSample], spec: &ChannelSpec) -> Result<ChannelRealization> {
    spec.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("no scatterers"));
    }
    let n_time = (spec.duration_s / spec.time_step_s).round() as usize + 1;
    let t0 = -0.5 * (n_time - 1) as f64 * spec.time_step_s;
    let t1 = -t0;
    // d xi / dt for a scatterer at Doppler f.
    let rate = -sc.c() / (2.0 * sc.l() * sc.f_c());
    let reach = |s: &ScattererSample| (s.xi + rate * s.fd * t0, s.xi + rate * s.fd * t1);
    let lo = samples.iter().map(|s| reach(s).0.min(reach(s).1)).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| reach(s).0.max(reach(s).1)).fold(f64::NEG_INFINITY, f64::max);
    let step = spec.delay_step_xi;
    let xi0 = (lo / step).floor() * step;
    let needed = ((hi - xi0) / step).round() as usize + 1;
    let n_delay = match spec.delay_bins {
        0 => needed,
        n if n >= needed => n,
        n => return Err(Error::invalid(format!("{n} delay bins cannot hold taps spanning {needed} bins"))),
    };
    let bin = |xi: f64| ((xi - xi0) / step).round() as usize;

    let mut rng = ChaCha12Rng::seed_from_u64(spec.phase_seed);
    let phases: Vec<f64> = samples.iter().map(|_| TAU * rng.random::<f64>()).collect();

    let mut tap_counts = vec![0usize; n_delay];
    for s in samples {
        tap_counts[bin(s.xi)] += 1;
    }
    let taps: Vec<Complex64> = (0..n_time)
        .into_par_iter()
        .flat_map_iter(|i| {
            let t = t0 + i as f64 * spec.time_step_s;
            let mut row = vec![Complex64::new(0.0, 0.0); n_delay];
            for (s, &ph) in samples.iter().zip(&phases) {
                let b = bin(s.xi + rate * s.fd * t);
                row[b] += Complex64::from_polar(s.weight.sqrt(), ph + TAU * s.fd * t);
            }
            row
        })
        .collect();
    Ok(ChannelRealization {
        time_step_s: spec.time_step_s,
        t0,
        n_time,
        xi0,
        delay_step_xi: step,
        delay_step_s: step * sc.tau_los(),
        n_delay,
        taps,
        tap_counts,
        scatterers: samples.len(),
        seed: spec.seed,
    })
}

/// `count` lags spaced `stride` samples apart, starting at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LagAxis {
    pub count: usize,
    pub stride: usize,
}

impl LagAxis {
    pub fn new(count: usize, stride: usize) -> Result<Self> {
        if count == 0 || stride == 0 {
            return Err(Error::invalid("lag axis needs count and stride of at least 1"));
        }
        Ok(LagAxis { count, stride })
    }

    pub fn max_lag(&self) -> usize {
        (self.count - 1) * self.stride
    }
}

fn check_record(real: &ChannelRealization, lags: &LagAxis) -> Result<()> {
    if real.n_time < 2 {
        return Err(Error::invalid("realization needs at least 2 time samples"));
    }
    if lags.max_lag() >= real.n_time {
        return Err(Error::LagBeyondRecord { lag: lags.max_lag(), len: real.n_time });
    }
    Ok(())
}

/// Time-averaged h(t + lag, b) h*(t, b), indexed [bin][lag].
fn tap_correlations(real: &ChannelRealization, lags: &LagAxis) -> Vec<Vec<Complex64>> {
    (0..real.n_delay)
        .into_par_iter()
        .map(|b| {
            let col: Vec<Complex64> = (0..real.n_time).map(|i| real.tap(i, b)).collect();
            if col.iter().all(|z| z.norm_sqr() == 0.0) {
                return vec![Complex64::new(0.0, 0.0); lags.count];
            }
            (0..lags.count)
                .map(|p| {
                    let lag = p * lags.stride;
                    let n = real.n_time - lag;
                    col[lag..].iter().zip(&col[..n]).map(|(a, b)| a * b.conj()).sum::<Complex64>() / n as f64
                })
                .collect()
        })
        .collect()
}

fn lag_grid(real: &ChannelRealization, lags: &LagAxis) -> Result<GridSpec> {
    let dt = lags.stride as f64 * real.time_step_s;
    GridSpec::dt(0.0, dt * (lags.count - 1) as f64, lags.count).or_else(|_| GridSpec::dt(0.0, dt, 2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhEstimate {
    /// Normalized per-bin temporal correlation over (xi, dt); bins without
    /// power are zero.
    pub surface: ComplexSurface,
    /// Scatterers per bin at t = 0; zero marks an empty bin.
    pub occupancy: Vec<usize>,
}

/// Per-delay-bin temporal autocorrelation, normalized to 1 at zero lag.
pub fn estimate_ph(real: &ChannelRealization, dt_lags: &LagAxis) -> Result<PhEstimate> {
    check_record(real, dt_lags)?;
    if dt_lags.count < 2 {
        return Err(Error::invalid("need at least 2 time lags"));
    }
    let corr = tap_correlations(real, dt_lags);
    let values: Vec<Complex64> = corr
        .iter()
        .flat_map(|row| {
            let p0 = row[0].re;
            row.iter().map(move |z| if p0 > 0.0 { z / p0 } else { Complex64::new(0.0, 0.0) })
        })
        .collect();
    let xi_grid = GridSpec::xi(real.xi0, real.bin_xi(real.n_delay - 1), real.n_delay)?;
    let surface = ComplexSurface::new(
        vec![xi_grid, lag_grid(real, dt_lags)?],
        values,
        SurfaceMeta { function: "p_h".into(), scenario: String::new() },
    )?;
    Ok(PhEstimate { surface, occupancy: real.tap_counts.clone() })
}

/// Time-frequency correlation of the transfer function, averaged over time
/// and over the full frequency band, normalized to 1 at zero lags.
///
/// Averaging over a band of `N` bins spaced 1/(N * delay_step) exactly
/// collapses to a sum over delay bins, which is what is evaluated here. The
/// `df_lags` are normalized frequency lags; for multiples of
/// 1/(N * delay_step_xi) the result equals the band average of
/// [`transfer_function`] with `N` bins.
pub fn estimate_rl(real: &ChannelRealization, dt_lags: &LagAxis, df_lags: &[f64]) -> Result<ComplexSurface> {
    check_record(real, dt_lags)?;
    if df_lags.len() < 2 || dt_lags.count < 2 {
        return Err(Error::invalid("need at least 2 lags on each axis"));
    }
    let corr = tap_correlations(real, dt_lags);
    let norm: f64 = corr.iter().map(|row| row[0].re).sum();
    if norm <= 0.0 {
        return Err(Error::invalid("realization carries no power"));
    }
    let values: Vec<Complex64> = df_lags
        .par_iter()
        .map(|&df| {
            let mut acc = vec![Complex64::new(0.0, 0.0); dt_lags.count];
            for (b, row) in corr.iter().enumerate() {
                let ph = Complex64::from_polar(1.0, -TAU * df * real.bin_xi(b));
                for (a, z) in acc.iter_mut().zip(row) {
                    *a += ph * z;
                }
            }
            // Same summation order as `norm`, so the origin is exactly 1.
            acc.into_iter().map(|a| a / norm).collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat();
    let n = df_lags.len();
    let df_grid = GridSpec::dftilde(df_lags[0], df_lags[n - 1], n)?;
    ComplexSurface::new(vec![df_grid, lag_grid(real, dt_lags)?], values, SurfaceMeta { function: "r_l".into(), scenario: String::new() })
}

/// Transfer function H(t, f_m) = sum_b h(t, b) exp(-j 2 pi m b / n_freq),
/// row-major (time, frequency). Delays are measured from bin 0.
pub fn transfer_function(real: &ChannelRealization, n_freq: usize) -> Result<Vec<Complex64>> {
    if n_freq < real.n_delay {
        return Err(Error::invalid(format!("{n_freq} frequency bins cannot resolve {} delay bins", real.n_delay)));
    }
    let fft = FftPlanner::new().plan_fft_forward(n_freq);
    let mut out = vec![Complex64::new(0.0, 0.0); real.n_time * n_freq];
    for (i, row) in out.chunks_mut(n_freq).enumerate() {
        row[..real.n_delay].copy_from_slice(&real.taps[i * real.n_delay..(i + 1) * real.n_delay]);
        fft.process(row);
    }
    Ok(out)
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("pearson needs two series of equal length >= 2"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::invalid("pearson undefined for a constant series"));
    }
    Ok(sab / (saa * sbb).sqrt())
}
