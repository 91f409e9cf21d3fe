//! Hand-written SVG charts drawn from the raw tables of a results directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::LabError;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 150.0, 40.0, 50.0); // left, right, top, bottom
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];
const MAX_LINE_POINTS: usize = 1200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Line,
    Dots,
    Dashed,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub mark: Mark,
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Draws the line `y = 0` in a highlight colour.
    pub highlight_zero: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn bounds(series: &[Series], highlight_zero: bool) -> Option<(f64, f64, f64, f64)> {
    let pts = series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    let mut any = false;
    for &(x, y) in pts {
        any = true;
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !any {
        return None;
    }
    if highlight_zero {
        y0 = y0.min(0.0);
        y1 = y1.max(0.0);
    }
    let pad = |a: f64, b: f64| {
        if b > a {
            let p = 0.05 * (b - a);
            (a - p, b + p)
        } else {
            (a - 0.5 - 0.5 * a.abs(), b + 0.5 + 0.5 * b.abs())
        }
    };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    Some((x0, x1, y0, y1))
}

fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_LINE_POINTS {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(MAX_LINE_POINTS);
    let mut out: Vec<_> = points.iter().step_by(stride).copied().collect();
    if let Some(last) = points.last() {
        out.push(*last);
    }
    out
}

impl Chart {
    pub fn render(&self) -> String {
        let (l, r, t, b) = MARGIN;
        let (pw, ph) = (WIDTH - l - r, HEIGHT - t - b);
        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, l + pw / 2.0, escape(&self.title));
        let _ = writeln!(svg, r##"<rect x="{l}" y="{t}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, l + pw / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            svg,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            t + ph / 2.0,
            t + ph / 2.0,
            escape(&self.y_label)
        );

        let Some((x0, x1, y0, y1)) = bounds(&self.series, self.highlight_zero) else {
            let _ = writeln!(
                svg,
                r##"<text class="no-data" x="{}" y="{}" text-anchor="middle" font-size="16" fill="#888">no data</text>"##,
                l + pw / 2.0,
                t + ph / 2.0
            );
            svg.push_str("</svg>\n");
            return svg;
        };
        let sx = |x: f64| l + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| t + ph - (y - y0) / (y1 - y0) * ph;

        for v in ticks(x0, x1) {
            let x = sx(v);
            let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#333"/>"##, t + ph, t + ph + 5.0);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, t + ph + 18.0, fmt_tick(v));
        }
        for v in ticks(y0, y1) {
            let y = sy(v);
            let _ = writeln!(svg, r##"<line x1="{}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="#333"/>"##, l - 5.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, y + 4.0, fmt_tick(v));
        }
        if self.highlight_zero {
            let y = sy(0.0);
            let _ = writeln!(
                svg,
                r##"<line class="real-axis" x1="{l}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#f0a000" stroke-width="2"/>"##,
                l + pw
            );
        }

        for (i, s) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            match s.mark {
                Mark::Dots => {
                    let _ = writeln!(svg, r#"<g class="series" fill="{colour}">"#);
                    for &(x, y) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
                        let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="1.8"/>"#, sx(x), sy(y));
                    }
                    svg.push_str("</g>\n");
                }
                Mark::Line | Mark::Dashed => {
                    let path: Vec<String> = thin(&s.points)
                        .iter()
                        .filter(|(x, y)| x.is_finite() && y.is_finite())
                        .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                        .collect();
                    let dash = if s.mark == Mark::Dashed { r#" stroke-dasharray="6 4""# } else { "" };
                    let _ = writeln!(
                        svg,
                        r#"<polyline class="series" fill="none" stroke="{colour}" stroke-width="1.5"{dash} points="{}"/>"#,
                        path.join(" ")
                    );
                }
            }
        }

        let lx = l + pw + 15.0;
        for (i, s) in self.series.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let y = t + 12.0 + 18.0 * i as f64;
            let _ = writeln!(svg, r#"<rect x="{lx}" y="{}" width="12" height="12" fill="{colour}"/>"#, y - 10.0);
            let _ = writeln!(svg, r#"<text class="legend" x="{}" y="{y}">{}</text>"#, lx + 18.0, escape(&s.label));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn read_table(dir: &Path, name: &str) -> Result<Vec<Vec<f64>>, LabError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(LabError::MissingData(format!("{} not found", path.display())));
    }
    let mut reader = csv::Reader::from_path(&path)?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| LabError::MissingData(format!("{name}: bad value {f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

fn lambda_label(lambda: f64) -> String {
    format!("lambda = {lambda}")
}

/// Rows grouped by their first column, in increasing order of it.
fn by_lambda(rows: &[Vec<f64>], x: usize, y: usize) -> BTreeMap<u64, (f64, Vec<(f64, f64)>)> {
    let mut out: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for r in rows {
        out.entry(r[0].to_bits()).or_insert((r[0], Vec::new())).1.push((r[x], r[y]));
    }
    out
}

pub fn zero_scatter(rows: &[Vec<f64>]) -> Chart {
    let series = by_lambda(rows, 2, 3)
        .into_values()
        .map(|(lambda, points)| Series { label: lambda_label(lambda), points, mark: Mark::Dots })
        .collect();
    Chart {
        title: "Complex zeros in the strip".into(),
        x_label: "t".into(),
        y_label: "tau".into(),
        series,
        highlight_zero: true,
    }
}

pub fn growth_curves(rows: &[Vec<f64>]) -> Chart {
    let mut series: Vec<Series> = by_lambda(rows, 1, 2)
        .into_values()
        .map(|(lambda, points)| Series { label: lambda_label(lambda), points, mark: Mark::Line })
        .collect();
    let taus: Vec<f64> = series.first().map(|s| s.points.iter().map(|p| p.0).collect()).unwrap_or_default();
    if !taus.is_empty() {
        series.push(Series {
            label: "2|tau|".into(),
            points: taus.iter().map(|t| (*t, 2.0 * t.abs())).collect(),
            mark: Mark::Dashed,
        });
    }
    Chart {
        title: "Growth profile v against tau (mean over t and seeds)".into(),
        x_label: "tau".into(),
        y_label: "v".into(),
        series,
        highlight_zero: false,
    }
}

pub fn wigner_overlay(rows: &[Vec<f64>]) -> Chart {
    let series = by_lambda(rows, 1, 2)
        .into_values()
        .map(|(lambda, points)| Series { label: lambda_label(lambda), points, mark: Mark::Line })
        .collect();
    Chart {
        title: "Normalized Wigner densities |U|^2".into(),
        x_label: "t".into(),
        y_label: "density".into(),
        series,
        highlight_zero: false,
    }
}

/// Renders zero-scatter.svg, growth.svg and wigner.svg from the raw tables
/// of a results directory.
pub fn emit_plots(dir: &Path) -> Result<Vec<std::path::PathBuf>, LabError> {
    let charts = [
        ("zero-scatter.svg", zero_scatter(&read_table(dir, "zeros.csv")?)),
        ("growth.svg", growth_curves(&read_table(dir, "growth.csv")?)),
        ("wigner.svg", wigner_overlay(&read_table(dir, "wigner.csv")?)),
    ];
    let mut written = Vec::new();
    for (name, chart) in charts {
        let path = dir.join(name);
        fs::write(&path, chart.render())?;
        written.push(path);
    }
    Ok(written)
}
