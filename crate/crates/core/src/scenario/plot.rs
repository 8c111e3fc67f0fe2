//! Static SVG plots: heatmaps of the real part of 2-D surfaces and line
//! plots of 1-D profiles.

use std::fmt::Write as _;
use std::path::Path;

use super::export::write_file;
use crate::error::Result;
use crate::surface::{ComplexSurface, GridSpec};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
/// Heatmaps are resampled to at most this many cells per axis.
const MAX_CELLS: usize = 300;

// Viridis control points.
const COLORS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (COLORS.len() - 1) as f64;
    let i = (t.floor() as usize).min(COLORS.len() - 2);
    let u = t - i as f64;
    let (a, b) = (COLORS[i], COLORS[i + 1]);
    let mix = |x: f64, y: f64| (x + u * (y - x)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn label(g: &GridSpec) -> String {
    if g.unit == "1" {
        g.name.clone()
    } else {
        format!("{} [{}]", g.name, g.unit)
    }
}

/// Value range that never collapses to a point.
fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str, title: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(out, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
        for k in 0..=4 {
            let u = k as f64 / 4.0;
            let xv = self.x.0 + u * (self.x.1 - self.x.0);
            let yv = self.y.0 + u * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(out, r#"<line x1="{px:.1}" y1="{y0}" x2="{px:.1}" y2="{}" stroke="black"/>"#, y0 + 5.0);
            let _ = writeln!(out, r#"<text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#, y0 + 20.0, tick(xv));
            let _ = writeln!(out, r#"<line x1="{}" y1="{py:.1}" x2="{x0}" y2="{py:.1}" stroke="black"/>"#, x0 - 5.0);
            let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, tick(yv));
        }
        let _ = writeln!(out, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, 0.5 * (x0 + x1), HEIGHT - 25.0, escape(xlabel));
        let _ = writeln!(
            out,
            r#"<text x="25" y="{0:.1}" text-anchor="middle" transform="rotate(-90 25 {0:.1})">{1}</text>"#,
            0.5 * (y0 + y1),
            escape(ylabel)
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="25" text-anchor="middle">{}</text>"#, 0.5 * (x0 + x1), escape(title));
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

/// Heatmap of the real part, rows along the first axis mapped to y.
fn heatmap(s: &ComplexSurface) -> String {
    let (gy, gx) = (s.axis(0), s.axis(1));
    let re = s.real();
    let (lo, hi) = re.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = span(lo, hi);
    let fr = Frame { x: span(gx.min, gx.max), y: span(gy.min, gy.max) };
    let ny = gy.n.min(MAX_CELLS);
    let nx = gx.n.min(MAX_CELLS);
    let mut out = header();
    let w = (fr.px(fr.x.1) - fr.px(fr.x.0)) / nx as f64;
    let h = (fr.py(fr.y.0) - fr.py(fr.y.1)) / ny as f64;
    for a in 0..ny {
        let i = ((a as f64 + 0.5) / ny as f64 * gy.n as f64) as usize;
        for b in 0..nx {
            let j = ((b as f64 + 0.5) / nx as f64 * gx.n as f64) as usize;
            let v = re[i * gx.n + j];
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + b as f64 * w,
                HEIGHT - BOTTOM - (a + 1) as f64 * h,
                w + 0.05,
                h + 0.05,
                color((v - lo) / (hi - lo))
            );
        }
    }
    // Color bar.
    let bx = WIDTH - RIGHT + 20.0;
    let bh = HEIGHT - TOP - BOTTOM;
    for k in 0..64 {
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="18" height="{:.2}" fill="{}"/>"#,
            TOP + bh * (1.0 - (k + 1) as f64 / 64.0),
            bh / 64.0 + 0.05,
            color((k as f64 + 0.5) / 64.0)
        );
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 22.0, TOP + 4.0, tick(hi));
    let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, bx + 22.0, TOP + bh + 4.0, tick(lo));
    fr.axes(&mut out, &label(gx), &label(gy), &format!("Re {}", s.meta().function));
    out.push_str("</svg>\n");
    out
}

fn line_plot(s: &ComplexSurface) -> String {
    let g = s.axis(0);
    let xs = g.nodes();
    let re: Vec<f64> = s.values().iter().map(|v| v.re).collect();
    let im: Vec<f64> = s.values().iter().map(|v| v.im).collect();
    let complex = im.iter().any(|v| *v != 0.0);
    let all = re.iter().chain(if complex { im.iter() } else { [].iter() });
    let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let fr = Frame { x: span(g.min, g.max), y: span(lo, hi) };
    let mut out = header();
    let path = |ys: &[f64]| xs.iter().zip(ys).map(|(x, y)| format!("{:.2},{:.2}", fr.px(*x), fr.py(*y))).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>"##, path(&re));
    if complex {
        let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="#c0392b" stroke-width="1.2" stroke-dasharray="5,3"/>"##, path(&im));
        let _ = writeln!(out, r##"<text x="{}" y="{}" fill="#1f4e9c">Re</text>"##, WIDTH - RIGHT + 10.0, TOP + 12.0);
        let _ = writeln!(out, r##"<text x="{}" y="{}" fill="#c0392b">Im</text>"##, WIDTH - RIGHT + 10.0, TOP + 28.0);
    }
    fr.axes(&mut out, &label(g), &s.meta().function, &s.meta().function);
    out.push_str("</svg>\n");
    out
}

/// SVG text for a surface: heatmap for 2-D, line plot for 1-D.
pub fn render_svg(s: &ComplexSurface) -> String {
    if s.is_2d() {
        heatmap(s)
    } else {
        line_plot(s)
    }
}

pub fn emit_plot(s: &ComplexSurface, path: &Path) -> Result<()> {
    write_file(path, &render_svg(s))
}
