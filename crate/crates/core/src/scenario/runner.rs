//! Evaluation of a run configuration across snapshots.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Format, Product, RunConfig};
use super::export::{export_surface, write_file};
use super::plot::emit_plot;
use crate::density::{delay_cell_masses, delay_pdf, doppler_marginal, joint_cell_masses, joint_pdf};
use crate::doppler::limiting_frequency_inf;
use crate::error::{Error, Result};
use crate::geometry::{DelayRange, Scenario};
use crate::hybrid::{
    conditional_normalize, hybrid_freq_doppler, joint_char, joint_char_at, joint_char_points, rho_surface, ring_characteristic,
    temporal_fourier, SnapshotStack,
};
use crate::moments::{
    bessel_limit_cf, coherence_metrics, coherence_metrics_refined, conditional_doppler_moments_at, delay_moments, jakes_limit_pdf,
    moment_report, CoherenceMetrics, MomentReport,
};
use crate::oracle::{estimate_ph, estimate_rl, l1_distance, pearson, synthesize_channel, weighted_histogram, Weighting};
use crate::surface::{ComplexSurface, GridSpec, SurfaceMeta};

/// Delay multiple of the specular delay at which the large-delay Doppler
/// spread is evaluated.
pub const FAR_DELAY_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub snapshot: Option<usize>,
    pub product: String,
    pub error: String,
    /// False for configuration and I/O problems.
    pub numerical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub samples: usize,
    pub seed: u64,
    pub hist_xi_cells: usize,
    pub hist_fd_cells: usize,
    /// Joint delay-Doppler cell probabilities.
    pub joint_l1: f64,
    /// Delay cell probabilities on the `grid_xi` cells.
    pub delay_l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureSummary {
    pub scatterers: usize,
    pub rl_pearson: f64,
    pub ph_min_pearson: f64,
    pub ph_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSummary {
    pub mu_xi: f64,
    pub sigma_xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SnapshotSummary {
    pub index: usize,
    pub time_s: f64,
    pub scenario: String,
    pub l_m: f64,
    pub plane_d: f64,
    pub tau_los_s: f64,
    pub xi_sr: f64,
    pub f_l_inf_hz: f64,
    pub sigma_fd_inf_hz: Option<f64>,
    pub moments: Option<MomentSummary>,
    /// Crossings read off the exported `r` grid.
    pub coherence_grid: Option<CoherenceMetrics>,
    /// Crossings refined by root finding on `Re r`.
    pub coherence: Option<CoherenceMetrics>,
    pub oracle: Option<OracleSummary>,
    pub conjecture: Option<ConjectureSummary>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub products: Vec<String>,
    pub snapshots: Vec<SnapshotSummary>,
    pub dc_family: Vec<String>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.summary.failures.is_empty()
    }

    /// True when at least one failure is numerical rather than I/O.
    pub fn numerical_failure(&self) -> bool {
        self.summary.failures.iter().any(|f| f.numerical)
    }
}

struct Writer<'a> {
    dir: &'a Path,
    format: Format,
    plots: bool,
}

impl Writer<'_> {
    fn surface(&self, s: &ComplexSurface, stem: &str, files: &mut Vec<String>) -> Result<()> {
        let name = format!("{stem}.{}", self.format.extension());
        export_surface(s, &self.dir.join(&name), self.format)?;
        files.push(name);
        if self.plots {
            let name = format!("{stem}.svg");
            emit_plot(s, &self.dir.join(&name))?;
            files.push(name);
        }
        Ok(())
    }

    fn json<T: Serialize>(&self, value: &T, name: &str, files: &mut Vec<String>) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        write_file(&self.dir.join(name), &text)?;
        files.push(name.to_string());
        Ok(())
    }
}

/// Evaluates every requested product of `cfg`.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    run_products(cfg, &cfg.products)
}

/// Oracle-only evaluation.
pub fn run_oracle(cfg: &RunConfig) -> Result<RunReport> {
    let products = [Product::Oracle, Product::ConjectureCheck].into_iter().collect();
    run_products(cfg, &products)
}

fn numerical(e: &Error) -> bool {
    !e.is_config()
}

/// Runs the given products, recording failures instead of stopping, and
/// writes `summary.json`. Fails outright only when the output directory
/// cannot be created or the summary cannot be written.
pub fn run_products(cfg: &RunConfig, products: &BTreeSet<Product>) -> Result<RunReport> {
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
    let writer = Writer { dir: &dir, format: cfg.format, plots: cfg.plots };
    let mut failures = Vec::new();
    let mut snapshots = Vec::new();
    let mut joints = Vec::new();

    for k in 0..cfg.snapshots.len() {
        let mut sum = SnapshotSummary { index: k, time_s: cfg.snapshots[k].time_s, ..Default::default() };
        let (sc, _, range) = match cfg.local(k) {
            Ok(v) => v,
            Err(e) => {
                failures.push(Failure { snapshot: Some(k), product: "scenario".into(), error: e.to_string(), numerical: numerical(&e) });
                snapshots.push(sum);
                joints.push(None);
                continue;
            }
        };
        sum.scenario = sc.fingerprint();
        sum.l_m = sc.l();
        sum.plane_d = sc.plane().d();
        sum.tau_los_s = sc.tau_los();
        sum.xi_sr = sc.xi_sr();
        sum.f_l_inf_hz = limiting_frequency_inf(&sc);
        match conditional_doppler_moments_at(&sc, FAR_DELAY_FACTOR * sc.xi_sr()) {
            Ok((_, sigma)) => sum.sigma_fd_inf_hz = Some(sigma),
            Err(e) => failures.push(Failure { snapshot: Some(k), product: "summary".into(), error: e.to_string(), numerical: numerical(&e) }),
        }

        let mut ctx = Snapshot { cfg, sc: &sc, range: &range, prefix: format!("snap{k:03}_"), joint: None, r: None };
        let mut files = Vec::new();
        for &p in products {
            if p == Product::DcFamily {
                // The family is assembled once every snapshot has its density.
                if let Err(e) = ctx.joint() {
                    failures.push(Failure { snapshot: Some(k), product: p.name().into(), error: e.to_string(), numerical: numerical(&e) });
                }
                continue;
            }
            if let Err(e) = ctx.product(p, &writer, &mut sum, &mut files) {
                failures.push(Failure { snapshot: Some(k), product: p.name().into(), error: e.to_string(), numerical: numerical(&e) });
            }
        }
        sum.files = files;
        joints.push(if products.contains(&Product::DcFamily) { ctx.joint.clone() } else { None });
        snapshots.push(sum);
    }

    let mut dc_files = Vec::new();
    if products.contains(&Product::DcFamily) {
        if let Err(e) = dc_family(cfg, &joints, &writer, &mut dc_files) {
            failures.push(Failure { snapshot: None, product: Product::DcFamily.name().into(), error: e.to_string(), numerical: numerical(&e) });
        }
    }

    let summary = Summary {
        name: cfg.name.clone(),
        products: products.iter().map(|p| p.name().to_string()).collect(),
        snapshots,
        dc_family: dc_files,
        failures,
    };
    let summary_path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    write_file(&summary_path, &text)?;
    Ok(RunReport { output_dir: dir, summary_path, summary })
}

fn dc_family(cfg: &RunConfig, joints: &[Option<ComplexSurface>], writer: &Writer, files: &mut Vec<String>) -> Result<()> {
    let mut stack = Vec::new();
    for (k, j) in joints.iter().enumerate() {
        let j = j.clone().ok_or_else(|| Error::invalid(format!("joint density of snapshot {k} unavailable")))?;
        stack.push((cfg.snapshots[k].time_s, j));
    }
    let family = temporal_fourier(&SnapshotStack::new(stack)?)?;
    let mut index = Vec::new();
    for (i, slice) in family.iter().enumerate() {
        writer.surface(&slice.surface, &format!("dc_family_{i:03}"), files)?;
        index.push(serde_json::json!({ "slice": i, "dfd_hz": slice.dfd }));
    }
    writer.json(&index, "dc_family_index.json", files)
}

struct Snapshot<'a> {
    cfg: &'a RunConfig,
    sc: &'a Scenario,
    range: &'a DelayRange,
    prefix: String,
    joint: Option<ComplexSurface>,
    r: Option<ComplexSurface>,
}

impl Snapshot<'_> {
    fn joint(&mut self) -> Result<&ComplexSurface> {
        if self.joint.is_none() {
            self.joint = Some(joint_pdf(self.sc, self.range, &self.cfg.grid_xi, &self.cfg.grid_fd)?);
        }
        Ok(self.joint.as_ref().unwrap())
    }

    fn r(&mut self) -> Result<&ComplexSurface> {
        if self.r.is_none() {
            self.r = Some(joint_char(self.sc, self.range, &self.cfg.grid_dftilde, &self.cfg.grid_dt)?);
        }
        Ok(self.r.as_ref().unwrap())
    }

    fn stem(&self, name: &str) -> String {
        format!("{}{name}", self.prefix)
    }

    fn product(&mut self, p: Product, w: &Writer, sum: &mut SnapshotSummary, files: &mut Vec<String>) -> Result<()> {
        let (sc, range, cfg) = (self.sc, self.range, self.cfg);
        match p {
            Product::JointPdf => {
                let j = self.joint()?.clone();
                w.surface(&j, &self.stem("joint_pdf"), files)
            }
            Product::Rho => {
                let rho = rho_surface(sc, range, &cfg.grid_xi, &cfg.grid_dt)?;
                w.surface(&rho, &self.stem("rho"), files)?;
                let cond = conditional_normalize(&rho, 1)?;
                w.surface(&cond, &self.stem("rho_conditional"), files)
            }
            Product::Varrho => {
                let v = hybrid_freq_doppler(sc, range, &cfg.grid_xi, &cfg.grid_dftilde, &cfg.grid_fd)?;
                w.surface(&v, &self.stem("varrho"), files)
            }
            Product::R => {
                let r = self.r()?.clone();
                w.surface(&r, &self.stem("r"), files)
            }
            Product::Marginals => {
                let p_xi = delay_pdf(sc, range, &cfg.grid_xi)?;
                w.surface(&p_xi, &self.stem("p_xi"), files)?;
                let p_fd = doppler_marginal(self.joint()?)?;
                w.surface(&p_fd, &self.stem("p_fd"), files)
            }
            Product::Moments => {
                let p_xi = delay_pdf(sc, range, &cfg.grid_xi)?;
                let (mu_xi, sigma_xi) = delay_moments(&p_xi)?;
                let report: MomentReport = moment_report(sc, range, &cfg.grid_xi)?;
                sum.moments = Some(MomentSummary { mu_xi, sigma_xi });
                w.json(&report, &format!("{}moments.json", self.prefix), files)
            }
            Product::Limits => {
                let jakes = jakes_limit_pdf(sc, &cfg.grid_fd)?;
                w.surface(&jakes, &self.stem("jakes_limit"), files)?;
                let bessel = bessel_limit_cf(sc, &cfg.grid_dt)?;
                w.surface(&bessel, &self.stem("bessel_limit"), files)
            }
            Product::Coherence => {
                let tau = sc.tau_los();
                let r = self.r()?.clone();
                sum.coherence_grid = Some(coherence_metrics(&r, tau)?);
                sum.coherence = Some(coherence_metrics_refined(
                    &r,
                    tau,
                    |df| Ok(joint_char_at(sc, range, df, 0.0)?.re),
                    |dt| Ok(joint_char_at(sc, range, 0.0, dt)?.re),
                )?);
                Ok(())
            }
            Product::Oracle => {
                let o = &cfg.oracle;
                let cells = |g: &GridSpec, n: usize| -> Result<GridSpec> {
                    let h = (g.max - g.min) / n as f64;
                    GridSpec::new(&g.name, &g.unit, g.min + 0.5 * h, g.max - 0.5 * h, n.max(2))
                };
                let hx = cells(&cfg.grid_xi, o.hist_xi_cells)?;
                let hf = cells(&cfg.grid_fd, o.hist_fd_cells)?;
                let hist = weighted_histogram(sc, range, o.samples, o.seed, &hx, &hf, Weighting::PathLoss)?;
                let analytic = joint_cell_masses(sc, range, &hx.cell_edges(), &hf.cell_edges())?;
                let joint_l1 = l1_distance(&analytic, &hist.probabilities());
                // Delay marginal on the configured delay cells.
                let dx = &cfg.grid_xi;
                let dhist = weighted_histogram(sc, range, o.samples, o.seed, dx, &hf, Weighting::PathLoss)?;
                let delay_l1 = l1_distance(&delay_cell_masses(sc, range, &dx.cell_edges())?, &dhist.xi_probabilities());
                let density = hist.density()?.with_meta(SurfaceMeta { function: "oracle_joint_pdf".into(), scenario: sc.fingerprint() });
                w.surface(&density, &self.stem("oracle_hist"), files)?;
                sum.oracle = Some(OracleSummary {
                    samples: o.samples,
                    seed: o.seed,
                    hist_xi_cells: hx.n,
                    hist_fd_cells: hf.n,
                    joint_l1,
                    delay_l1,
                });
                Ok(())
            }
            Product::ConjectureCheck => {
                let c = conjecture_check(sc, range, cfg)?;
                w.surface(&c.r_l, &self.stem("r_l"), files)?;
                w.surface(&c.p_h, &self.stem("p_h"), files)?;
                sum.conjecture = Some(c.summary);
                Ok(())
            }
            Product::DcFamily => Ok(()),
        }
    }
}

pub struct ConjectureResult {
    pub r_l: ComplexSurface,
    pub p_h: ComplexSurface,
    pub summary: ConjectureSummary,
}

/// Synthetic-channel check that the time-frequency correlation follows
/// `r` and that each delay bin's temporal correlation follows `rho(dt|xi)`.
pub fn conjecture_check(sc: &Scenario, range: &DelayRange, cfg: &RunConfig) -> Result<ConjectureResult> {
    let o = &cfg.oracle;
    let lags = o.lag_axis();
    let dfs = o.df_lags();

    let real = synthesize_channel(sc, range, &o.rl_channel())?;
    let r_l = estimate_rl(&real, &lags, &dfs)?.with_meta(SurfaceMeta { function: "r_l".into(), scenario: sc.fingerprint() });
    let dts: Vec<f64> = (0..lags.count).map(|p| p as f64 * o.time_step_s).collect();
    let r: Vec<f64> = joint_char_points(sc, range, &dfs, &dts)?.iter().map(|z| z.re).collect();
    let rl_pearson = pearson(&r_l.real(), &r)?;

    let real = synthesize_channel(sc, range, &o.ph_channel())?;
    let ph = estimate_ph(&real, &lags)?;
    let dts: Vec<f64> = (0..lags.count).map(|p| p as f64 * o.ph_time_step_s).collect();
    let mut worst = f64::INFINITY;
    let mut bins = 0;
    for b in 0..real.n_delay {
        let xi = real.bin_xi(b);
        if ph.occupancy[b] < o.ph_min_scatterers || !range.contains(xi) {
            continue;
        }
        let rho: Vec<f64> = ring_characteristic(sc, xi, &dts)?.iter().map(|z| z.re).collect();
        let est: Vec<f64> = ph.surface.row(b).iter().map(|z| z.re).collect();
        worst = worst.min(pearson(&est, &rho)?);
        bins += 1;
    }
    if bins == 0 {
        return Err(Error::invalid(format!("no delay bin holds {} scatterers", o.ph_min_scatterers)));
    }
    let p_h = ph.surface.with_meta(SurfaceMeta { function: "p_h".into(), scenario: sc.fingerprint() });
    Ok(ConjectureResult {
        r_l,
        p_h,
        summary: ConjectureSummary { scatterers: o.scatterers, rl_pearson, ph_min_pearson: worst, ph_bins: bins },
    })
}
