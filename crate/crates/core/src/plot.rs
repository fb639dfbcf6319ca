//! Deterministic SVG scatter plots with a least-squares line and the
//! Pearson r in the corner. The same input always renders the same bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::corpus::{Corpus, Target};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] =
    ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub label: String,
    pub family: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<PlotPoint>,
    pub label_points: bool,
}

impl ScatterPlotSpec {
    /// Scatter of `x` against `y` over the records that carry both.
    pub fn from_corpus(corpus: &Corpus, x: &str, y: &str) -> Result<Self> {
        let (tx, ty) = (Target::parse(x), Target::parse(y));
        for t in [&tx, &ty] {
            if let Target::Feature(f) = t {
                if !corpus.has_metric(f) {
                    return Err(Error::UnknownColumn(f.clone()));
                }
            }
        }
        let points = corpus
            .records
            .iter()
            .filter_map(|r| {
                Some(PlotPoint { label: r.name.clone(), family: r.family.clone(), x: tx.value(r)?, y: ty.value(r)? })
            })
            .collect();
        Ok(ScatterPlotSpec {
            title: format!("{} vs {}", ty.name(), tx.name()),
            x_label: tx.name().to_string(),
            y_label: ty.name().to_string(),
            points,
            label_points: true,
        })
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Least-squares `(intercept, slope, r)`; `None` when either axis is
/// constant. Works from two points up, unlike the inferential routines.
fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0 && syy > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Some((my - slope * mx, slope, r))
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.05 };
    (lo - pad, hi + pad)
}

/// Five evenly spaced tick values across a range.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..5).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn fmt_tick(v: f64, span: f64) -> String {
    let digits = if span >= 100.0 {
        0
    } else if span >= 1.0 {
        2
    } else {
        4
    };
    format!("{v:.digits$}")
}

pub fn render_svg(spec: &ScatterPlotSpec) -> Result<String> {
    let n = spec.points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if spec.points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidArgument("plot coordinates must be finite".into()));
    }
    let xs: Vec<f64> = spec.points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = spec.points.iter().map(|p| p.y).collect();
    let (x0, x1) = padded_range(xs.iter().copied());
    let (y0, y1) = padded_range(ys.iter().copied());
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * plot_h;

    let families: Vec<&str> =
        spec.points.iter().map(|p| p.family.as_str()).collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let colour: BTreeMap<&str, &str> =
        families.iter().enumerate().map(|(i, f)| (*f, PALETTE[i % PALETTE.len()])).collect();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(&spec.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    for t in ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_h,
            MARGIN_TOP + plot_h + 5.0,
            MARGIN_TOP + plot_h + 18.0,
            fmt_tick(t, x1 - x0)
        );
    }
    for t in ticks(y0, y1) {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 5.0,
            MARGIN_LEFT - 8.0,
            y + 4.0,
            fmt_tick(t, y1 - y0)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(&spec.y_label)
    );

    // Fit line and r, when both axes vary.
    if let Some((intercept, slope, r)) = fit_line(&xs, &ys) {
        let _ = writeln!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#444444" stroke-dasharray="6 4"/>"##,
            px(x0),
            py(intercept + slope * x0),
            px(x1),
            py(intercept + slope * x1)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">r = {r:.3} (n = {n})</text>"#,
            MARGIN_LEFT + 8.0,
            MARGIN_TOP + 16.0
        );
    }

    for p in &spec.points {
        let (x, y) = (px(p.x), py(p.y));
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/>"#, colour[p.family.as_str()]);
        if spec.label_points {
            let _ =
                writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="9">{}</text>"#, x + 5.0, y - 5.0, escape(&p.label));
        }
    }

    for (i, f) in families.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let x = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            colour[f],
            x + 10.0,
            y + 4.0,
            escape(if f.is_empty() { "(none)" } else { f })
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
