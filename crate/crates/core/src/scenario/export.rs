//! Surface files in CSV and JSON.
//!
//! CSV layout: comment lines starting with `#` carry the metadata
//! (`# function,<name>`, `# scenario,<fingerprint>`, one
//! `# axis,<name>,<unit>,<min>,<max>,<n>` per axis), then a header row and
//! one row per value in row-major order: axis coordinates, real part,
//! imaginary part. Floats are written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::Format;
use crate::error::{Error, Result};
use crate::surface::{ComplexSurface, GridSpec, SurfaceMeta};

#[derive(Serialize, Deserialize)]
struct JsonSurface {
    axes: Vec<GridSpec>,
    values_re: Vec<f64>,
    values_im: Vec<f64>,
    meta: SurfaceMeta,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io(dir))?;
    }
    std::fs::write(path, text).map_err(io(path))
}

pub fn to_csv(s: &ComplexSurface) -> String {
    let mut out = String::new();
    let m = s.meta();
    let _ = writeln!(out, "# function,{}", m.function);
    let _ = writeln!(out, "# scenario,{}", m.scenario);
    for g in s.axes() {
        let _ = writeln!(out, "# axis,{},{},{:.16e},{:.16e},{}", g.name, g.unit, g.min, g.max, g.n);
    }
    let names: Vec<&str> = s.axes().iter().map(|g| g.name.as_str()).collect();
    let _ = writeln!(out, "{},re,im", names.join(","));
    let cols = if s.is_2d() { s.cols() } else { 1 };
    for (k, v) in s.values().iter().enumerate() {
        if s.is_2d() {
            let _ = write!(out, "{:.16e},{:.16e},", s.axis(0).node(k / cols), s.axis(1).node(k % cols));
        } else {
            let _ = write!(out, "{:.16e},", s.axis(0).node(k));
        }
        let _ = writeln!(out, "{:.16e},{:.16e}", v.re, v.im);
    }
    out
}

pub fn to_json(s: &ComplexSurface) -> String {
    let j = JsonSurface {
        axes: s.axes().to_vec(),
        values_re: s.values().iter().map(|v| v.re).collect(),
        values_im: s.values().iter().map(|v| v.im).collect(),
        meta: s.meta().clone(),
    };
    serde_json::to_string(&j).expect("surface serializes")
}

pub fn export_surface(s: &ComplexSurface, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Csv => to_csv(s),
        Format::Json => to_json(s),
    };
    write_file(path, &text)
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field.trim().parse().map_err(|_| Error::Parse(format!("bad {what} `{field}`")))
}

pub fn from_csv(text: &str) -> Result<ComplexSurface> {
    let mut meta = SurfaceMeta::default();
    let mut axes = Vec::new();
    let mut values = Vec::new();
    let mut header = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let fields: Vec<&str> = rest.trim().split(',').collect();
            match fields[0] {
                "function" => meta.function = fields[1..].join(","),
                "scenario" => meta.scenario = fields[1..].join(","),
                "axis" if fields.len() == 6 => {
                    let n = fields[5].trim().parse().map_err(|_| Error::Parse(format!("bad axis size on line {}", ln + 1)))?;
                    axes.push(GridSpec::new(fields[1], fields[2], parse_f64(fields[3], "axis min")?, parse_f64(fields[4], "axis max")?, n)?);
                }
                _ => return Err(Error::Parse(format!("unrecognized metadata on line {}", ln + 1))),
            }
            continue;
        }
        if !header {
            header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != axes.len() + 2 {
            return Err(Error::Parse(format!("line {} has {} fields, expected {}", ln + 1, fields.len(), axes.len() + 2)));
        }
        let re = parse_f64(fields[axes.len()], "real part")?;
        let im = parse_f64(fields[axes.len() + 1], "imaginary part")?;
        values.push(Complex64::new(re, im));
    }
    if axes.is_empty() {
        return Err(Error::Parse("no axis metadata".into()));
    }
    ComplexSurface::new(axes, values, meta)
}

pub fn from_json(text: &str) -> Result<ComplexSurface> {
    let j: JsonSurface = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if j.values_re.len() != j.values_im.len() {
        return Err(Error::Parse("values_re and values_im differ in length".into()));
    }
    let values = j.values_re.iter().zip(&j.values_im).map(|(&a, &b)| Complex64::new(a, b)).collect();
    ComplexSurface::new(j.axes, values, j.meta)
}

/// Reads a surface file, detecting the format from its content.
pub fn import_surface(path: &Path) -> Result<ComplexSurface> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    if text.trim_start().starts_with('{') {
        from_json(&text)
    } else {
        from_csv(&text)
    }
}
