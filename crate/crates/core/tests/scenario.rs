use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use m2m_channel::moments::{coherence_metrics, delay_moments};
use m2m_channel::scenario::{
    export_surface, import_surface, load_config, run, run_products, Format, Product, RunConfig, OUTPUT_DIR_ENV, THREADS_ENV,
};
use m2m_channel::scenario::export::{from_csv, to_csv};
use m2m_channel::scenario::plot::render_svg;
use m2m_channel::surface::SurfaceMeta;
use m2m_channel::{ComplexSurface, Error, GridSpec};
use num_complex::Complex64;
use proptest::prelude::*;
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_m2m-channel");

fn shipped() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/aircraft_a2a.toml")
}

/// The aircraft link on small grids. `extra` is spliced in before the
/// products section.
fn small_config(xi_min: f64, trajectory: &str, products: &str, extra: &str) -> String {
    format!(
        r#"
[scenario]
name = "small"
carrier_hz = 250e6
speed_of_light = 3e8

[plane]
normal = [0.0, 0.0, 1.0]
offset_m = 0.0

[trajectory]
{trajectory}

[delay_range]
xi_min = {xi_min}
xi_max = 12.24

[grid_xi]
min = 2.11
max = 12.24
n = 101

[grid_fd]
min = -244.0
max = 244.0
n = 245

[grid_dt]
min = -0.03
max = 0.03
n = 61

[grid_dftilde]
min = -4.5
max = 4.5
n = 91

{extra}

[products]
include = [{products}]
"#
    )
}

const ONE_SNAPSHOT: &str = r#"tx = [[0.0, 0.0, 0.0, 580.0, 68.69444444444444, 0.0, 0.0]]
rx = [[0.0, 627.5, 0.0, 580.0, 68.16666666666667, 0.0, 0.0]]"#;

const TWO_SNAPSHOTS: &str = r#"tx = [[0.0, 0.0, 0.0, 580.0, 68.69444444444444, 0.0, 0.0], [0.5, 0.0, 0.0, 580.0, 68.69444444444444, 0.0, 0.0]]
rx = [[0.0, 627.5, 0.0, 580.0, 68.16666666666667, 0.0, 0.0], [0.5, 627.5, 0.0, 580.0, 68.16666666666667, 0.0, 0.0]]"#;

fn config_in(dir: &Path, text: &str) -> RunConfig {
    let mut cfg: RunConfig = text.parse().unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn config_key(e: Error) -> String {
    match e {
        Error::Config { key, .. } => key,
        other => panic!("expected a config error, got {other:?}"),
    }
}

fn listing(dir: &Path) -> BTreeSet<String> {
    fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect()
}

#[test]
fn shipped_config_matches_the_aircraft_link() {
    let cfg = load_config(&shipped()).unwrap();
    assert_eq!(cfg.f_c, 250e6);
    assert_eq!(cfg.products.len(), Product::ALL.len() - 1);
    assert!(!cfg.wants(Product::DcFamily));
    let (sc, _, range) = cfg.local(0).unwrap();
    assert!((sc.l() - 313.75).abs() < 1e-12);
    assert!((sc.plane().d() - 1.8486).abs() < 1e-4);
    assert!((sc.xi_sr() - 2.1018).abs() < 1e-3);
    assert_eq!((range.xi_min(), range.xi_max()), (2.11, 12.24));
    for (g, n, max) in [(&cfg.grid_xi, 425, 12.24), (&cfg.grid_fd, 977, 244.0), (&cfg.grid_dt, 241, 0.03), (&cfg.grid_dftilde, 511, 20.92)] {
        assert_eq!((g.n, g.max), (n, max));
    }
    assert!(cfg.output_dir.ends_with("aircraft_a2a"));
}

#[test]
fn bad_configs_name_the_key() {
    let low = small_config(1.0, ONE_SNAPSHOT, r#""marginals""#, "");
    assert_eq!(config_key(low.parse::<RunConfig>().unwrap_err()), "delay_range.xi_min");
    let empty = small_config(2.11, ONE_SNAPSHOT, "", "");
    assert_eq!(config_key(empty.parse::<RunConfig>().unwrap_err()), "products.include");
    let unknown = small_config(2.11, ONE_SNAPSHOT, r#""spectrum""#, "");
    assert!(config_key(unknown.parse::<RunConfig>().unwrap_err()).starts_with("products.include"));
    let typo = small_config(2.11, ONE_SNAPSHOT, r#""rho""#, "[output]\nformt = \"csv\"");
    assert!(config_key(typo.parse::<RunConfig>().unwrap_err()).starts_with("output"));
    let missing = small_config(2.11, ONE_SNAPSHOT, r#""rho""#, "").replace("carrier_hz = 250e6\n", "");
    assert!(config_key(missing.parse::<RunConfig>().unwrap_err()).starts_with("scenario"));
    let dc = small_config(2.11, ONE_SNAPSHOT, r#""dc_family""#, "");
    assert_eq!(config_key(dc.parse::<RunConfig>().unwrap_err()), "products.include");
    let grid = small_config(2.11, ONE_SNAPSHOT, r#""r""#, "").replace("n = 61", "n = 60");
    assert_eq!(config_key(grid.parse::<RunConfig>().unwrap_err()), "grid_dt");
    assert!("not toml [".parse::<RunConfig>().unwrap_err().is_config());
    assert!(load_config(Path::new("/nonexistent/config.toml")).unwrap_err().is_config());
}

fn surface(rows: usize, cols: usize, values: Vec<Complex64>) -> ComplexSurface {
    let axes = vec![GridSpec::xi(2.0, 3.0, rows).unwrap(), GridSpec::fd(-5.0, 5.0, cols).unwrap()];
    ComplexSurface::new(axes, values, SurfaceMeta { function: "test".into(), scenario: "s".into() }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn export_roundtrip_is_bit_identical(
        re in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 12),
        im in prop::collection::vec(-1e300..1e300f64, 12),
    ) {
        let values: Vec<Complex64> = re.iter().zip(&im).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let s = surface(3, 4, values);
        let dir = tempfile::tempdir().unwrap();
        for f in [Format::Csv, Format::Json] {
            let path = dir.path().join(format!("s.{}", f.extension()));
            export_surface(&s, &path, f).unwrap();
            let back = import_surface(&path).unwrap();
            prop_assert_eq!(back.axes(), s.axes());
            prop_assert_eq!(back.meta(), s.meta());
            for (a, b) in back.values().iter().zip(s.values()) {
                prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
                prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
    }
}

#[test]
fn csv_layout() {
    let s = surface(2, 2, vec![Complex64::new(1.0, 0.0); 4]);
    let text = to_csv(&s);
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "xi,fd,re,im");
    assert_eq!(data.len(), 5);
    assert_eq!(from_csv(&text).unwrap(), s);
    assert!(export_surface(&s, Path::new("/proc/forbidden/s.csv"), Format::Csv).unwrap_err().is_config());
}

#[test]
fn plots_render() {
    let flat = surface(5, 7, vec![Complex64::new(0.25, 0.0); 35]);
    let svg = render_svg(&flat);
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(!svg.contains("NaN") && !svg.contains("inf"));
    assert!(svg.contains("fd [Hz]") && svg.contains(">xi<"));

    let g = GridSpec::fd(-100.0, 100.0, 201).unwrap();
    let line = ComplexSurface::from_real(vec![g], vec![1.0; 201], SurfaceMeta { function: "jakes_limit".into(), scenario: String::new() }).unwrap();
    let svg = render_svg(&line);
    assert!(svg.contains("<polyline") && svg.contains("fd [Hz]"));
    assert!(!svg.contains("NaN"));
}

#[test]
fn marginals_only_writes_the_marginals() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path(), &small_config(2.11, ONE_SNAPSHOT, r#""marginals""#, ""));
    cfg.plots = false;
    let rep = run(&cfg).unwrap();
    assert!(rep.succeeded());
    let want: BTreeSet<String> = ["snap000_p_xi.csv", "snap000_p_fd.csv", "summary.json"].iter().map(|s| s.to_string()).collect();
    assert_eq!(listing(dir.path()), want);
}

#[test]
fn dc_family_of_a_frozen_scene_is_a_single_slice() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path(), &small_config(2.11, TWO_SNAPSHOTS, r#""dc_family""#, ""));
    cfg.plots = false;
    let rep = run(&cfg).unwrap();
    assert!(rep.succeeded(), "{:?}", rep.summary.failures);
    let index: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("dc_family_index.json")).unwrap()).unwrap();
    let slices = index.as_array().unwrap();
    assert_eq!(slices.len(), 2);
    for s in slices {
        let k = s["slice"].as_u64().unwrap();
        let dfd = s["dfd_hz"].as_f64().unwrap();
        let surf = import_surface(&dir.path().join(format!("dc_family_{k:03}.csv"))).unwrap();
        let peak = surf.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        if dfd == 0.0 {
            assert!(peak > 0.0);
        } else {
            assert!(peak < 1e-12, "{dfd}: {peak}");
        }
    }
}

#[test]
fn summary_matches_exported_surfaces() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config_in(dir.path(), &small_config(2.11, ONE_SNAPSHOT, r#""r", "coherence", "marginals", "moments""#, ""));
    cfg.plots = false;
    let rep = run(&cfg).unwrap();
    assert!(rep.succeeded(), "{:?}", rep.summary.failures);
    let summary: Value = serde_json::from_str(&fs::read_to_string(&rep.summary_path).unwrap()).unwrap();
    let snap = &summary["snapshots"][0];

    let r = import_surface(&dir.path().join("snap000_r.csv")).unwrap();
    let m = coherence_metrics(&r, snap["tau_los_s"].as_f64().unwrap()).unwrap();
    let grid = &snap["coherence_grid"];
    assert!((grid["bandwidth"].as_f64().unwrap() - m.bandwidth).abs() <= 1e-12 * m.bandwidth);
    assert!((grid["time_s"].as_f64().unwrap() - m.time_s).abs() <= 1e-12 * m.time_s);

    let p = import_surface(&dir.path().join("snap000_p_xi.csv")).unwrap();
    let (mu, sigma) = delay_moments(&p).unwrap();
    assert!((snap["moments"]["mu_xi"].as_f64().unwrap() - mu).abs() <= 1e-12 * mu);
    assert!((snap["moments"]["sigma_xi"].as_f64().unwrap() - sigma).abs() <= 1e-12 * sigma);
    assert!((snap["xi_sr"].as_f64().unwrap() - 2.1017475066867046).abs() < 1e-12);
}

#[test]
fn numerical_failures_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(2.11, ONE_SNAPSHOT, r#""joint_pdf", "marginals", "limits""#, "").replace("min = -244.0\nmax = 244.0", "min = -50.0\nmax = 50.0");
    let mut cfg = config_in(dir.path(), &text);
    cfg.plots = false;
    let rep = run(&cfg).unwrap();
    assert!(rep.numerical_failure());
    let failed: Vec<&str> = rep.summary.failures.iter().map(|f| f.product.as_str()).collect();
    assert_eq!(failed, ["joint_pdf", "marginals"]);
    // The products that could be evaluated are still there.
    assert!(listing(dir.path()).contains("snap000_jakes_limit.csv"));
    let products = [Product::Limits].into_iter().collect();
    assert!(run_products(&cfg, &products).unwrap().succeeded());
}

fn cli(args: &[&str], envs: &[(&str, &str)]) -> std::process::Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove(OUTPUT_DIR_ENV).env_remove(THREADS_ENV);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn cli_exit_codes_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };
    let good = write("good.toml", &small_config(2.11, ONE_SNAPSHOT, r#""marginals", "limits""#, "[output]\ndir = \"a\"\nplots = false"));
    let bad = write("bad.toml", &small_config(1.0, ONE_SNAPSHOT, r#""marginals""#, ""));
    let narrow = small_config(2.11, ONE_SNAPSHOT, r#""joint_pdf""#, "[output]\ndir = \"n\"").replace("min = -244.0\nmax = 244.0", "min = -50.0\nmax = 50.0");
    let narrow = write("narrow.toml", &narrow);

    assert_eq!(cli(&["validate", &good], &[]).status.code(), Some(0));
    let out = cli(&["validate", &bad], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delay_range.xi_min"));
    assert_eq!(cli(&["run", &narrow], &[]).status.code(), Some(2));
    assert_eq!(cli(&["run", "/nonexistent.toml"], &[]).status.code(), Some(1));
    assert_eq!(cli(&["run", &good], &[(THREADS_ENV, "zero")]).status.code(), Some(1));

    // Relative output directories resolve against the config file.
    assert_eq!(cli(&["run", &good], &[(THREADS_ENV, "1")]).status.code(), Some(0));
    let first = dir.path().join("a");
    assert!(first.join("snap000_p_xi.csv").exists());

    // The environment override wins, and reruns are byte-identical.
    let other = dir.path().join("b");
    assert_eq!(cli(&["run", &good], &[(OUTPUT_DIR_ENV, other.to_str().unwrap())]).status.code(), Some(0));
    assert_eq!(listing(&first), listing(&other));
    for name in listing(&first) {
        assert_eq!(fs::read(first.join(&name)).unwrap(), fs::read(other.join(&name)).unwrap(), "{name}");
    }

    let svg = dir.path().join("p.svg");
    let csv = first.join("snap000_jakes_limit.csv");
    assert_eq!(cli(&["plot", csv.to_str().unwrap(), svg.to_str().unwrap()], &[]).status.code(), Some(0));
    assert!(fs::read_to_string(&svg).unwrap().contains("<polyline"));
    assert_eq!(cli(&["plot", "/nonexistent.csv", svg.to_str().unwrap()], &[]).status.code(), Some(1));
}
