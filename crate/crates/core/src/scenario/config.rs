//! Run configuration: TOML file format, validation and environment overrides.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_local_scenario, DelayRange, LinkState, LocalFrame, Scenario, Vec3, WorldPlane, SPEED_OF_LIGHT};
use crate::oracle::{ChannelSpec, LagAxis};
use crate::surface::GridSpec;

/// Overrides `[output] dir`.
pub const OUTPUT_DIR_ENV: &str = "M2M_CHANNEL_OUTPUT_DIR";
/// Caps the worker thread count.
pub const THREADS_ENV: &str = "M2M_CHANNEL_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Product {
    JointPdf,
    Rho,
    Varrho,
    R,
    Marginals,
    Moments,
    Limits,
    Coherence,
    Oracle,
    ConjectureCheck,
    DcFamily,
}

impl Product {
    pub const ALL: [Product; 11] = [
        Product::JointPdf,
        Product::Rho,
        Product::Varrho,
        Product::R,
        Product::Marginals,
        Product::Moments,
        Product::Limits,
        Product::Coherence,
        Product::Oracle,
        Product::ConjectureCheck,
        Product::DcFamily,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Product::JointPdf => "joint_pdf",
            Product::Rho => "rho",
            Product::Varrho => "varrho",
            Product::R => "r",
            Product::Marginals => "marginals",
            Product::Moments => "moments",
            Product::Limits => "limits",
            Product::Coherence => "coherence",
            Product::Oracle => "oracle",
            Product::ConjectureCheck => "conjecture_check",
            Product::DcFamily => "dc_family",
        }
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

// Raw file layout.

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: RawScenario,
    plane: RawPlane,
    trajectory: RawTrajectory,
    delay_range: RawDelayRange,
    grid_xi: RawGrid,
    grid_fd: RawGrid,
    grid_dt: RawGrid,
    grid_dftilde: RawGrid,
    #[serde(default)]
    oracle: RawOracle,
    #[serde(default)]
    output: RawOutput,
    products: RawProducts,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    carrier_hz: f64,
    speed_of_light: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlane {
    normal: [f64; 3],
    offset_m: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrajectory {
    tx: Vec<[f64; 7]>,
    rx: Vec<[f64; 7]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelayRange {
    xi_min: f64,
    xi_max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    min: f64,
    max: f64,
    n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawOracle {
    samples: usize,
    seed: u64,
    hist_xi_cells: usize,
    hist_fd_cells: usize,
    scatterers: usize,
    duration_s: f64,
    time_step_s: f64,
    delay_step_xi: f64,
    lags: usize,
    rl_freq_bins: usize,
    ph_delay_step_xi: f64,
    ph_time_step_s: f64,
    ph_min_scatterers: usize,
}

impl Default for RawOracle {
    fn default() -> Self {
        RawOracle {
            samples: 10_000_000,
            seed: 1,
            hist_xi_cells: 41,
            hist_fd_cells: 33,
            scatterers: 10_000,
            duration_s: 2.0,
            time_step_s: 5e-4,
            delay_step_xi: 0.024,
            lags: 32,
            rl_freq_bins: 2048,
            ph_delay_step_xi: 0.1,
            ph_time_step_s: 2.5e-4,
            ph_min_scatterers: 50,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_dir")]
    dir: PathBuf,
    #[serde(default)]
    format: Format,
    #[serde(default = "default_true")]
    plots: bool,
}

impl Default for RawOutput {
    fn default() -> Self {
        RawOutput { dir: default_dir(), format: Format::Csv, plots: true }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProducts {
    include: Vec<String>,
}

// Validated configuration.

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time_s: f64,
    pub link: LinkState,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSettings {
    pub samples: usize,
    pub seed: u64,
    pub hist_xi_cells: usize,
    pub hist_fd_cells: usize,
    pub scatterers: usize,
    pub duration_s: f64,
    pub time_step_s: f64,
    pub delay_step_xi: f64,
    pub lags: usize,
    /// Band size in bins; frequency lags step by 1/(bins * delay_step_xi).
    pub rl_freq_bins: usize,
    pub ph_delay_step_xi: f64,
    pub ph_time_step_s: f64,
    pub ph_min_scatterers: usize,
}

impl OracleSettings {
    /// Realization used for the time-frequency correlation check.
    pub fn rl_channel(&self) -> ChannelSpec {
        ChannelSpec {
            scatterers: self.scatterers,
            duration_s: self.duration_s,
            time_step_s: self.time_step_s,
            delay_step_xi: self.delay_step_xi,
            delay_bins: 0,
            seed: self.seed,
            phase_seed: self.seed.wrapping_add(1),
        }
    }

    /// Realization used for the per-delay correlation check.
    pub fn ph_channel(&self) -> ChannelSpec {
        ChannelSpec {
            delay_step_xi: self.ph_delay_step_xi,
            time_step_s: self.ph_time_step_s,
            seed: self.seed.wrapping_add(2),
            phase_seed: self.seed.wrapping_add(3),
            ..self.rl_channel()
        }
    }

    pub fn lag_axis(&self) -> LagAxis {
        LagAxis { count: self.lags, stride: 1 }
    }

    /// Normalized frequency lags of the correlation check.
    pub fn df_lags(&self) -> Vec<f64> {
        let step = 1.0 / (self.rl_freq_bins as f64 * self.delay_step_xi);
        (0..self.lags).map(|q| q as f64 * step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub f_c: f64,
    pub c: f64,
    pub plane: WorldPlane,
    pub snapshots: Vec<Snapshot>,
    pub delay_range: (f64, f64),
    pub grid_xi: GridSpec,
    pub grid_fd: GridSpec,
    pub grid_dt: GridSpec,
    pub grid_dftilde: GridSpec,
    pub oracle: OracleSettings,
    pub output_dir: PathBuf,
    pub format: Format,
    pub plots: bool,
    pub products: BTreeSet<Product>,
}

impl RunConfig {
    pub fn wants(&self, p: Product) -> bool {
        self.products.contains(&p)
    }

    /// Local scenario, frame and delay range of one snapshot.
    pub fn local(&self, k: usize) -> Result<(Scenario, LocalFrame, DelayRange)> {
        let (sc, frame) = build_local_scenario(&self.snapshots[k].link, &self.plane, self.f_c, self.c)?;
        let range = DelayRange::new(self.delay_range.0, self.delay_range.1, sc.plane())?;
        Ok((sc, frame, range))
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::parse(text).map_err(|e| Error::Parse(e.to_string()))?;
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(if key == "." { "<root>".to_string() } else { key }, e.into_inner().message().trim().to_string())
        })?;
        validate(raw)
    }
}

/// Reads and validates a config file, then applies the output directory
/// override from the environment.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    let mut cfg: RunConfig = text.parse()?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    } else if cfg.output_dir.is_relative() {
        if let Some(parent) = path.parent() {
            cfg.output_dir = parent.join(&cfg.output_dir);
        }
    }
    Ok(cfg)
}

/// Thread count requested through the environment, if any.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::config(THREADS_ENV, format!("expected a positive integer, got `{v}`"))),
        },
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

fn grid(key: &str, g: &RawGrid, make: fn(f64, f64, usize) -> Result<GridSpec>) -> Result<GridSpec> {
    make(g.min, g.max, g.n).map_err(|e| Error::config(key, e.to_string()))
}

fn symmetric(key: &str, g: &GridSpec) -> Result<()> {
    if g.find_node(0.0).is_none() {
        return Err(Error::config(key, "lag grid must contain a node at zero"));
    }
    Ok(())
}

fn vec3(row: &[f64]) -> Vec3 {
    Vec3::new(row[0], row[1], row[2])
}

fn validate(raw: RawConfig) -> Result<RunConfig> {
    let f_c = positive("scenario.carrier_hz", raw.scenario.carrier_hz)?;
    let c = positive("scenario.speed_of_light", raw.scenario.speed_of_light.unwrap_or(SPEED_OF_LIGHT))?;
    if raw.scenario.name.trim().is_empty() {
        return Err(Error::config("scenario.name", "must not be empty"));
    }

    let normal = vec3(&raw.plane.normal);
    if !(normal.norm() > 0.0) || !normal.iter().all(|v| v.is_finite()) {
        return Err(Error::config("plane.normal", "must be a finite nonzero vector"));
    }
    if !raw.plane.offset_m.is_finite() {
        return Err(Error::config("plane.offset_m", "must be finite"));
    }
    let plane = WorldPlane { normal, offset: raw.plane.offset_m };

    let tr = &raw.trajectory;
    if tr.tx.is_empty() {
        return Err(Error::config("trajectory.tx", "at least one snapshot is required"));
    }
    if tr.tx.len() != tr.rx.len() {
        return Err(Error::config("trajectory.rx", format!("{} rows, but trajectory.tx has {}", tr.rx.len(), tr.tx.len())));
    }
    let mut snapshots = Vec::with_capacity(tr.tx.len());
    for (k, (a, b)) in tr.tx.iter().zip(&tr.rx).enumerate() {
        if a.iter().chain(b).any(|v| !v.is_finite()) {
            return Err(Error::config(format!("trajectory.tx[{k}]"), "non-finite entry"));
        }
        if a[0] != b[0] {
            return Err(Error::config(format!("trajectory.rx[{k}]"), format!("time {} differs from TX time {}", b[0], a[0])));
        }
        if k > 0 && a[0] <= snapshots.last().map(|s: &Snapshot| s.time_s).unwrap_or(f64::NEG_INFINITY) {
            return Err(Error::config(format!("trajectory.tx[{k}]"), "times must increase"));
        }
        let link = LinkState { tx_pos: vec3(&a[1..4]), rx_pos: vec3(&b[1..4]), tx_vel: vec3(&a[4..7]), rx_vel: vec3(&b[4..7]) };
        snapshots.push(Snapshot { time_s: a[0], link });
    }

    let dr = &raw.delay_range;
    if !(dr.xi_min.is_finite() && dr.xi_max.is_finite() && dr.xi_max > dr.xi_min) {
        return Err(Error::config("delay_range.xi_max", "must exceed delay_range.xi_min"));
    }
    for (k, s) in snapshots.iter().enumerate() {
        let (sc, _) = build_local_scenario(&s.link, &plane, f_c, c).map_err(|e| Error::config(format!("trajectory.tx[{k}]"), e.to_string()))?;
        if dr.xi_min <= sc.xi_sr() {
            return Err(Error::config(
                "delay_range.xi_min",
                format!("{} is not above the specular delay {:.6} of snapshot {k}", dr.xi_min, sc.xi_sr()),
            ));
        }
    }

    let grid_xi = grid("grid_xi", &raw.grid_xi, GridSpec::xi)?;
    let grid_fd = grid("grid_fd", &raw.grid_fd, GridSpec::fd)?;
    let grid_dt = grid("grid_dt", &raw.grid_dt, GridSpec::dt)?;
    let grid_dftilde = grid("grid_dftilde", &raw.grid_dftilde, GridSpec::dftilde)?;
    symmetric("grid_dt", &grid_dt)?;
    symmetric("grid_dftilde", &grid_dftilde)?;

    let o = &raw.oracle;
    for (key, n) in [
        ("oracle.samples", o.samples),
        ("oracle.scatterers", o.scatterers),
        ("oracle.hist_xi_cells", o.hist_xi_cells),
        ("oracle.hist_fd_cells", o.hist_fd_cells),
        ("oracle.rl_freq_bins", o.rl_freq_bins),
    ] {
        if n == 0 {
            return Err(Error::config(key, "must be at least 1"));
        }
    }
    if o.lags < 2 {
        return Err(Error::config("oracle.lags", "must be at least 2"));
    }
    for (key, v) in [
        ("oracle.duration_s", o.duration_s),
        ("oracle.time_step_s", o.time_step_s),
        ("oracle.delay_step_xi", o.delay_step_xi),
        ("oracle.ph_delay_step_xi", o.ph_delay_step_xi),
        ("oracle.ph_time_step_s", o.ph_time_step_s),
    ] {
        positive(key, v)?;
    }
    for (key, step) in [("oracle.time_step_s", o.time_step_s), ("oracle.ph_time_step_s", o.ph_time_step_s)] {
        if (o.lags as f64) * step >= o.duration_s {
            return Err(Error::config(key, "lag range exceeds oracle.duration_s"));
        }
    }
    let oracle = OracleSettings {
        samples: o.samples,
        seed: o.seed,
        hist_xi_cells: o.hist_xi_cells,
        hist_fd_cells: o.hist_fd_cells,
        scatterers: o.scatterers,
        duration_s: o.duration_s,
        time_step_s: o.time_step_s,
        delay_step_xi: o.delay_step_xi,
        lags: o.lags,
        rl_freq_bins: o.rl_freq_bins,
        ph_delay_step_xi: o.ph_delay_step_xi,
        ph_time_step_s: o.ph_time_step_s,
        ph_min_scatterers: o.ph_min_scatterers,
    };

    if raw.products.include.is_empty() {
        return Err(Error::config("products.include", "at least one product is required"));
    }
    let mut products = BTreeSet::new();
    for (k, name) in raw.products.include.iter().enumerate() {
        if name == "all" {
            // The temporal family only exists for a trajectory.
            products.extend(Product::ALL.into_iter().filter(|&p| p != Product::DcFamily || snapshots.len() > 1));
            continue;
        }
        let p = Product::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::config(format!("products.include[{k}]"), format!("unknown product `{name}`")))?;
        products.insert(p);
    }
    if products.contains(&Product::DcFamily) && snapshots.len() < 2 {
        return Err(Error::config("products.include", "dc_family needs at least two trajectory snapshots"));
    }

    Ok(RunConfig {
        name: raw.scenario.name,
        f_c,
        c,
        plane,
        snapshots,
        delay_range: (dr.xi_min, dr.xi_max),
        grid_xi,
        grid_fd,
        grid_dt,
        grid_dftilde,
        oracle,
        output_dir: raw.output.dir,
        format: raw.output.format,
        plots: raw.output.plots,
        products,
    })
}
