//! Self-contained SVG line plots of CSV columns.

use std::fmt::Write;

use crate::error::CliResult;
use crate::table::Table;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: Vec<String>,
    pub log_y: bool,
    /// `Some("2logt")` draws `2 log x` over the data.
    pub overlay: Option<String>,
    pub title: Option<String>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self { x: "t".into(), y: vec!["z".into()], log_y: false, overlay: None, title: None }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi - lo <= 1e-300 {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            return Self { lo: lo - pad, hi: hi + pad };
        }
        Self { lo, hi }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn sx(ax: &Axis, x: f64) -> f64 {
    LEFT + ax.frac(x) * (WIDTH - LEFT - RIGHT)
}

fn sy(ax: &Axis, y: f64) -> f64 {
    HEIGHT - BOTTOM - ax.frac(y) * (HEIGHT - TOP - BOTTOM)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round())
    } else if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Renders the requested columns; rows with non-finite (or, on a log axis,
/// non-positive) values are skipped.
pub fn emit_plot(table: &Table, spec: &PlotSpec) -> CliResult<String> {
    let xi = table.index(&spec.x)?;
    let yi: Vec<usize> = spec.y.iter().map(|c| table.index(c)).collect::<CliResult<_>>()?;
    let ty = |v: f64| if spec.log_y { if v > 0.0 { v.log10() } else { f64::NAN } } else { v };

    let mut series: Vec<(String, Vec<(f64, f64)>)> = spec
        .y
        .iter()
        .zip(&yi)
        .map(|(name, &i)| {
            let pts = table.rows.iter().map(|r| (r[xi], ty(r[i]))).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
            (name.clone(), pts)
        })
        .collect();
    if spec.overlay.as_deref() == Some("2logt") {
        let pts = table
            .rows
            .iter()
            .filter(|r| r[xi] > 0.0)
            .map(|r| (r[xi], ty(2.0 * r[xi].ln())))
            .filter(|(_, y)| y.is_finite())
            .collect();
        series.push(("2 log t".into(), pts));
    }

    let xa = Axis::fit(series.iter().flat_map(|s| s.1.iter().map(|p| p.0)));
    let ya = Axis::fit(series.iter().flat_map(|s| s.1.iter().map(|p| p.1)));

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &spec.title {
        let _ = writeln!(svg, r#"<text x="{}" y="18" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(t));
    }
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(svg, r#"<g class="axes" stroke="black" fill="none">"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>"#);
    let _ = writeln!(svg, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>"#);
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="ticks">"#);
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let xv = xa.lo + f * (xa.hi - xa.lo);
        let yv = ya.lo + f * (ya.hi - ya.lo);
        let (px, py) = (sx(&xa, xv), sy(&ya, yv));
        let _ = writeln!(svg, r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, y0 + 18.0, label(xv, false));
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, x0 - 8.0, py + 4.0, label(yv, spec.log_y));
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0, escape(&spec.x));

    for (k, (name, pts)) in series.iter().enumerate() {
        let overlay = spec.overlay.is_some() && k == series.len() - 1;
        let color = if overlay { "#555555" } else { COLORS[k % COLORS.len()] };
        let ly = TOP + 16.0 * k as f64 + 10.0;
        let _ = writeln!(svg, r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#, x0 + 10.0, escape(name));
        if pts.is_empty() {
            continue;
        }
        let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(&xa, x), sy(&ya, y))).collect();
        let dash = if overlay { r#" stroke-dasharray="6 4" class="overlay""# } else { r#" class="series""# };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            points.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
