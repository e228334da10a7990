//! Self-contained SVG charts of experiment output.
//!
//! Rate charts: one marker per estimate against `log10(n)` (circles for
//! Wald, crosses for permutation), a smoothed curve per series and the
//! binomial band shaded. Bias charts: one box-and-whisker per sample size
//! with a dashed reference line at zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use permpois_core::harness::{quantile_sorted, smooth_rates};

use crate::io::{BiasRow, ResultRow, Table};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 230.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Points of one series are smoothed with this (odd) window.
pub const SMOOTHING_WINDOW: usize = 5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlotError {
    #[error("no rows to plot")]
    Empty,
    #[error("non-finite value in input")]
    NonFinite,
}

pub fn render(table: &Table) -> Result<String, PlotError> {
    match table {
        Table::Results(rows) => render_rates(rows),
        Table::Bias(rows) => render_bias(rows),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" font-size="15">{}</text>"#, LEFT, escape(title));
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r) = (f.px(f.x0), f.px(f.x1));
    let (b, t) = (f.py(f.y0), f.py(f.y1));
    let _ = writeln!(out, r#"<path d="M{l:.2},{t:.2} L{l:.2},{b:.2} L{r:.2},{b:.2}" stroke="black" fill="none"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (l + r) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate(20,{:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        (t + b) / 2.0,
        escape(y_label)
    );
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn y_ticks(out: &mut String, f: &Frame) {
    let step = nice_step(f.y1 - f.y0);
    let mut v = (f.y0 / step).ceil() * step;
    while v <= f.y1 + 1e-12 {
        let y = f.py(v);
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0, LEFT);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, y + 4.0, trim(v));
        v += step;
    }
}

fn trim(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".to_string() } else { s.to_string() }
}

fn render_rates(rows: &[ResultRow]) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    if rows.iter().any(|r| !(r.rate.is_finite() && r.ci_lo.is_finite() && r.ci_hi.is_finite()) || r.n == 0) {
        return Err(PlotError::NonFinite);
    }
    let lx: Vec<f64> = rows.iter().map(|r| (r.n as f64).log10()).collect();
    let (mut x0, mut x1) = lx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y_max = rows.iter().map(|r| r.rate.max(r.ci_hi)).fold(0.0, f64::max) * 1.1;
    let f = Frame { x0: x0.floor(), x1: x1.ceil(), y0: 0.0, y1: y_max.max(0.1) };

    let mut out = String::new();
    header(&mut out, "Type I error rate vs sample size");

    // one band per distinct (ci_lo, ci_hi), i.e. per K
    let mut bands: Vec<(f64, f64, u32)> = Vec::new();
    for r in rows {
        if !bands.iter().any(|b| b.0 == r.ci_lo && b.1 == r.ci_hi) {
            bands.push((r.ci_lo, r.ci_hi, r.k));
        }
    }
    for (lo, hi, k) in &bands {
        let _ = writeln!(
            out,
            r##"<rect class="band" data-k="{k}" data-ci-lo="{lo}" data-ci-hi="{hi}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#999999" fill-opacity="0.25"/>"##,
            f.px(f.x0),
            f.py(*hi),
            f.px(f.x1) - f.px(f.x0),
            f.py(*lo) - f.py(*hi)
        );
    }
    let alpha_y = f.py(rows[0].ci_lo / 2.0 + rows[0].ci_hi / 2.0);
    let _ = writeln!(
        out,
        r##"<line x1="{:.2}" y1="{alpha_y:.2}" x2="{:.2}" y2="{alpha_y:.2}" stroke="#555555" stroke-width="0.8"/>"##,
        f.px(f.x0),
        f.px(f.x1)
    );

    axes(&mut out, &f, "sample size n (log scale)", "Type I error rate");
    y_ticks(&mut out, &f);
    let mut e = f.x0;
    while e <= f.x1 + 1e-9 {
        let x = f.px(e);
        let b = f.py(f.y0);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">10^{}</text>"#, b + 20.0, e as i64);
        e += 1.0;
    }

    let mut series: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for (r, x) in rows.iter().zip(&lx) {
        series.entry(r.series()).or_default().push((*x, r.rate));
    }
    let settings: Vec<String> = {
        let mut s: Vec<String> = series.keys().map(|k| k.0.clone()).collect();
        s.dedup();
        s
    };
    for (idx, ((setting, method), points)) in series.iter().enumerate() {
        let color = PALETTE[settings.iter().position(|s| s == setting).unwrap_or(idx) % PALETTE.len()];
        let dashed = method != "wald";
        let _ = writeln!(out, r#"<g class="series" data-setting="{}" data-method="{}">"#, escape(setting), escape(method));
        for &(x, y) in points {
            let (cx, cy) = (f.px(x), f.py(y));
            if dashed {
                let _ = writeln!(
                    out,
                    r#"<path d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="{color}"/>"#,
                    cx - 4.0,
                    cy - 4.0,
                    cx + 4.0,
                    cy + 4.0,
                    cx - 4.0,
                    cy + 4.0,
                    cx + 4.0,
                    cy - 4.0
                );
            } else {
                let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3.5" fill="none" stroke="{color}"/>"#);
            }
        }
        let window = SMOOTHING_WINDOW.min(if points.len() % 2 == 1 { points.len() } else { points.len() - 1 }).max(1);
        let smooth = smooth_rates(points, window).expect("odd window");
        let d: Vec<String> = smooth.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
        let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline class="smooth" points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
            d.join(" ")
        );
        let ly = TOP + 16.0 + idx as f64 * 18.0;
        let lx0 = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx0:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.6"{dash}/>"#,
            lx0 + 24.0
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{} ({})</text>"#, lx0 + 30.0, ly + 4.0, escape(setting), escape(method));
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

struct BoxStats {
    n: usize,
    lo_whisker: f64,
    q1: f64,
    median: f64,
    q3: f64,
    hi_whisker: f64,
}

fn box_stats(n: usize, mut values: Vec<f64>) -> BoxStats {
    values.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&values, 0.25);
    let q3 = quantile_sorted(&values, 0.75);
    let fence = 1.5 * (q3 - q1);
    let lo_whisker = values.iter().copied().find(|&v| v >= q1 - fence).unwrap_or(q1);
    let hi_whisker = values.iter().rev().copied().find(|&v| v <= q3 + fence).unwrap_or(q3);
    BoxStats { n, lo_whisker, q1, median: quantile_sorted(&values, 0.5), q3, hi_whisker }
}

fn render_bias(rows: &[BiasRow]) -> Result<String, PlotError> {
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    if rows.iter().any(|r| !r.bias.is_finite()) {
        return Err(PlotError::NonFinite);
    }
    let mut by_n: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r.bias);
    }
    let boxes: Vec<BoxStats> = by_n.into_iter().map(|(n, v)| box_stats(n, v)).collect();
    let lo = boxes.iter().map(|b| b.lo_whisker).fold(0.0, f64::min);
    let hi = boxes.iter().map(|b| b.hi_whisker).fold(0.0, f64::max);
    let pad = ((hi - lo) * 0.05).max(1e-6);
    // x = bias, y = size category (one row per n)
    let f = Frame { x0: lo - pad, x1: hi + pad, y0: 0.0, y1: boxes.len() as f64 };

    let mut out = String::new();
    header(&mut out, "Bias of the rate estimate under censoring");
    axes(&mut out, &f, "bias (estimate - true rate)", "sample size n");

    let step = nice_step(f.x1 - f.x0);
    let mut v = (f.x0 / step).ceil() * step;
    while v <= f.x1 {
        let x = f.px(v);
        let b = f.py(f.y0);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, b + 20.0, trim(v));
        v += step;
    }
    let zero = f.px(0.0);
    let _ = writeln!(
        out,
        r##"<line class="reference" x1="{zero:.2}" y1="{:.2}" x2="{zero:.2}" y2="{:.2}" stroke="#d62728" stroke-dasharray="6,4"/>"##,
        f.py(f.y0),
        f.py(f.y1)
    );
    for (i, b) in boxes.iter().enumerate() {
        let yc = f.py(i as f64 + 0.5);
        let h = 0.6 * (f.py(0.0) - f.py(1.0));
        let _ = writeln!(
            out,
            r#"<g class="box" data-n="{}" data-median="{}" data-q1="{}" data-q3="{}">"#,
            b.n, b.median, b.q1, b.q3
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{yc:.2}" x2="{:.2}" y2="{yc:.2}" stroke="black"/>"#,
            f.px(b.lo_whisker),
            f.px(b.q1)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{yc:.2}" x2="{:.2}" y2="{yc:.2}" stroke="black"/>"#,
            f.px(b.q3),
            f.px(b.hi_whisker)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#9ecae1" stroke="black"/>"##,
            f.px(b.q1),
            yc - h / 2.0,
            (f.px(b.q3) - f.px(b.q1)).max(0.5)
        );
        let m = f.px(b.median);
        let _ = writeln!(
            out,
            r#"<line x1="{m:.2}" y1="{:.2}" x2="{m:.2}" y2="{:.2}" stroke="black" stroke-width="2"/>"#,
            yc - h / 2.0,
            yc + h / 2.0
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, yc + 4.0, b.n);
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tables_are_rejected() {
        assert_eq!(render(&Table::Results(vec![])), Err(PlotError::Empty));
        assert_eq!(render(&Table::Bias(vec![])), Err(PlotError::Empty));
    }

    #[test]
    fn tick_labels() {
        assert_eq!(trim(0.05), "0.05");
        assert_eq!(trim(0.0), "0");
        assert_eq!(nice_step(0.6), 0.1);
    }

    #[test]
    fn bias_box_uses_tukey_fences() {
        let b = box_stats(10, vec![0.0, 1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(b.hi_whisker, 4.0);
        assert_eq!(b.lo_whisker, 0.0);
        assert_eq!(b.median, 2.5);
    }
}
