use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// What to draw from a CSV table.
#[derive(Debug, Clone, Default)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    /// Column whose distinct values each get one polyline.
    pub series: Option<String>,
    /// `(column, value)` pairs a row must match exactly (as text).
    pub filters: Vec<(String, String)>,
    pub title: Option<String>,
}

/// Polylines keyed by series label, each sorted by x.
type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers.iter().position(|h| h == name).ok_or_else(|| {
        Error::Usage(format!(
            "column `{name}` not found; available columns: {}",
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })
}

fn collect(csv_text: &str, spec: &PlotSpec) -> Result<Series> {
    let mut rd = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = rd
        .headers()
        .map_err(|e| Error::Format(format!("plot input: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(Error::Structural("plot input is empty".into()));
    }
    let xi = column(&headers, &spec.x)?;
    let yi = column(&headers, &spec.y)?;
    let si = spec.series.as_deref().map(|s| column(&headers, s)).transpose()?;
    let filters = spec
        .filters
        .iter()
        .map(|(c, v)| Ok((column(&headers, c)?, v.as_str())))
        .collect::<Result<Vec<_>>>()?;

    let mut series = Series::new();
    let mut rows = 0;
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format(format!("plot input: {e}")))?;
        rows += 1;
        if filters.iter().any(|&(c, v)| rec.get(c) != Some(v)) {
            continue;
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|_| {
                Error::param(format!("row {}: `{name}` value `{raw}` is not a number", line + 2))
            })
        };
        let label = si.map_or_else(|| spec.y.clone(), |i| rec.get(i).unwrap_or("").to_string());
        series
            .entry(label)
            .or_default()
            .push((num(xi, &spec.x)?, num(yi, &spec.y)?));
    }
    if rows == 0 {
        return Err(Error::Structural("plot input has no data rows".into()));
    }
    if series.is_empty() {
        return Err(Error::Structural("no rows match the plot filters".into()));
    }
    for points in series.values_mut() {
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    Ok(series)
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the selected columns of a CSV table as an SVG line plot with one
/// polyline per series.
pub fn render_svg(csv_text: &str, spec: &PlotSpec) -> Result<String> {
    let series = collect(csv_text, spec)?;
    let all = || series.values().flatten();
    let (x0, x1) = padded_range(all().map(|p| p.0));
    let (y0, y1) = padded_range(all().map(|p| p.1));
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut svg = String::new();
    let w = &mut svg;
    // writing to a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(t) = &spec.title {
        let _ = writeln!(
            w,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            escape(t)
        );
    }
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            MARGIN_TOP,
            MARGIN_TOP + ph,
            MARGIN_TOP + ph + 16.0,
            format_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(
            w,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + pw,
            MARGIN_LEFT - 6.0,
            y + 4.0,
            format_tick(t)
        );
    }
    let _ = writeln!(
        w,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&spec.y)
    );
    for (i, (label, points)) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline class="series" data-series="{}" fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            escape(label),
            coords.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + pw + 12.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{colour}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(label)
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Reads `input`, renders it and writes `output`; nothing is written when
/// the input cannot be plotted.
pub fn plot_csv(input: &Path, output: &Path, spec: &PlotSpec) -> Result<()> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let svg = render_svg(&text, spec)?;
    std::fs::write(output, svg).map_err(|e| Error::io(output, e))
}
