//! Static SVG line charts.

use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::metrics::MetricLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotStyle {
    /// Training loss per epoch, linear y axis.
    LossVsEpoch,
    /// Learning rate and gradient norm per iteration, log y axis.
    LrAndGradNormVsIter,
}

impl PlotStyle {
    fn log_y(&self) -> bool {
        matches!(self, PlotStyle::LrAndGradNormVsIter)
    }

    fn labels(&self) -> (&'static str, &'static str) {
        match self {
            PlotStyle::LossVsEpoch => ("epoch", "training loss"),
            PlotStyle::LrAndGradNormVsIter => ("iteration", "lr / gradient norm"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
        }
    }
}

/// The series a style draws from one run, named after `run`.
pub fn series_from_log(log: &MetricLog, style: PlotStyle, run: &str) -> Vec<Series> {
    let label = |what: &str| {
        if run.is_empty() {
            what.to_string()
        } else {
            format!("{run} {what}")
        }
    };
    match style {
        PlotStyle::LossVsEpoch => {
            let pts = log
                .epochs()
                .filter_map(|r| r.loss.map(|l| (r.epoch, l)))
                .collect();
            vec![Series::new(label("loss"), pts)]
        }
        PlotStyle::LrAndGradNormVsIter => {
            let lr = log
                .iterations()
                .filter_map(|r| r.lr.map(|v| (r.iteration as f64, v)))
                .collect();
            let gn = log
                .iterations()
                .filter_map(|r| r.grad_norm.map(|v| (r.iteration as f64, v)))
                .collect();
            vec![
                Series::new(label("lr"), lr),
                Series::new(label("grad_norm"), gn),
            ]
        }
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn validate(series: &[Series], log_y: bool) -> Result<()> {
    if series.is_empty() {
        return Err(Error::InvalidPlot("no series to draw".into()));
    }
    for s in series {
        if s.points.is_empty() {
            return Err(Error::InvalidPlot(format!("series `{}` is empty", s.name)));
        }
        if s.points
            .windows(2)
            .any(|w| w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater))
        {
            return Err(Error::InvalidPlot(format!(
                "x values of `{}` are not strictly increasing",
                s.name
            )));
        }
        if s.points
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::InvalidPlot(format!(
                "series `{}` has non-finite values",
                s.name
            )));
        }
        if log_y && s.points.iter().any(|&(_, y)| y <= 0.0) {
            return Err(Error::InvalidPlot(format!(
                "series `{}` has non-positive values on a log axis",
                s.name
            )));
        }
    }
    Ok(())
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders the series as an SVG document; returns the bytes written.
pub fn emit_plot<W: Write>(series: &[Series], style: PlotStyle, mut sink: W) -> Result<u64> {
    let log_y = style.log_y();
    validate(series, log_y)?;
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let all = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(ty(y));
        y_hi = y_hi.max(ty(y));
    }
    let (x_lo, x_hi) = widen(x_lo, x_hi);
    let (y_lo, y_hi) = if log_y {
        widen(y_lo.floor(), y_hi.ceil())
    } else {
        widen(y_lo, y_hi)
    };
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let py = |y: f64| TOP + (1.0 - (ty(y) - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<g class="axes" stroke="black" fill="none"><line x1="{LEFT}" y1="{b:.2}" x2="{r:.2}" y2="{b:.2}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b:.2}"/></g>"#,
        b = TOP + plot_h,
        r = LEFT + plot_w
    );

    let mut ticks = String::new();
    for i in 0..=5 {
        let x = x_lo + (x_hi - x_lo) * i as f64 / 5.0;
        let sx = px(x);
        let _ = writeln!(
            ticks,
            r#"<line x1="{sx:.2}" y1="{b:.2}" x2="{sx:.2}" y2="{b2:.2}" stroke="black"/><text x="{sx:.2}" y="{t:.2}" text-anchor="middle">{}</text>"#,
            tick_label(x),
            b = TOP + plot_h,
            b2 = TOP + plot_h + 5.0,
            t = TOP + plot_h + 18.0
        );
    }
    let y_ticks: Vec<f64> = if log_y {
        let (lo, hi) = (y_lo.round() as i64, y_hi.round() as i64);
        let step = ((hi - lo) as f64 / 6.0).ceil().max(1.0) as i64;
        (lo..=hi)
            .step_by(step as usize)
            .map(|e| 10f64.powi(e as i32))
            .collect()
    } else {
        (0..=5)
            .map(|i| y_lo + (y_hi - y_lo) * i as f64 / 5.0)
            .collect()
    };
    for y in y_ticks {
        let sy = py(y);
        let _ = writeln!(
            ticks,
            r#"<line x1="{l2:.2}" y1="{sy:.2}" x2="{LEFT}" y2="{sy:.2}" stroke="black"/><text x="{t:.2}" y="{ty:.2}" text-anchor="end">{}</text>"#,
            tick_label(y),
            l2 = LEFT - 5.0,
            t = LEFT - 8.0,
            ty = sy + 4.0
        );
    }
    svg.push_str(&ticks);

    let (x_label, y_label) = style.labels();
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x_label}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{y:.2}" text-anchor="middle" transform="rotate(-90 18 {y:.2})">{label}{scale}</text>"#,
        y = TOP + plot_h / 2.0,
        label = y_label,
        scale = if log_y { " (log)" } else { "" }
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{lx2:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{tx:.2}" y="{ty:.2}">{}</text></g>"#,
            escape(&s.name),
            lx2 = lx + 20.0,
            tx = lx + 26.0,
            ty = ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    sink.write_all(svg.as_bytes())?;
    Ok(svg.len() as u64)
}
