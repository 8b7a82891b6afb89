//! Minimal self-contained SVG line charts.
//!
//! Series are drawn in data coordinates under a single affine transform, so
//! the numbers in every `points` attribute are exactly the strings written
//! to the CSV the series came from.

use std::fmt::Write as _;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Points kept per series before min/max decimation kicks in.
pub const MAX_POINTS: usize = 4000;

/// One plotted line: CSV strings of its coordinates plus where they came from.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub source: String,
    pub column: String,
    pub dashed: bool,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Shortest round-trip decimal form, shared with the CSV writer.
pub fn fmt_num(v: f64) -> String {
    format!("{v}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Indices to draw: every point for short series, otherwise the first,
/// last, and per-bucket minimum and maximum.
pub fn decimate(ys: &[f64], max_points: usize) -> Vec<usize> {
    let n = ys.len();
    if n <= max_points {
        return (0..n).collect();
    }
    let buckets = (max_points / 2).max(1);
    let size = n.div_ceil(buckets);
    let mut keep = Vec::with_capacity(2 * buckets + 2);
    keep.push(0);
    for start in (0..n).step_by(size) {
        let end = (start + size).min(n);
        let (mut lo, mut hi) = (start, start);
        for i in start..end {
            if ys[i] < ys[lo] {
                lo = i;
            }
            if ys[i] > ys[hi] {
                hi = i;
            }
        }
        keep.push(lo.min(hi));
        keep.push(lo.max(hi));
    }
    keep.push(n - 1);
    keep.sort_unstable();
    keep.dedup();
    keep
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 0.0 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl LineChart {
    pub fn render(&self) -> String {
        let (x0, x1) = range(self.series.iter().flat_map(|s| s.xs.iter().copied()));
        let (y0, y1) = range(self.series.iter().flat_map(|s| s.ys.iter().copied()));
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let sx = pw / (x1 - x0);
        let sy = ph / (y1 - y0);
        let px = |x: f64| LEFT + (x - x0) * sx;
        let py = |y: f64| TOP + ph - (y - y0) * sy;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + pw / 2.0,
            escape(&self.title)
        );
        let _ = writeln!(
            out,
            r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##
        );
        for t in ticks(x0, x1) {
            let x = px(t);
            let _ = writeln!(
                out,
                r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
                TOP + ph,
                TOP + ph + 16.0,
                tick_label(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = py(t);
            let _ = writeln!(
                out,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT + pw,
                LEFT - 6.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        // Data space → pixel space: x' = sx·x + (LEFT − sx·x0), y' = −sy·y + (TOP + ph + sy·y0).
        let _ = writeln!(
            out,
            r#"<clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>"#
        );
        let _ = writeln!(
            out,
            r#"<g clip-path="url(#plot)"><g transform="matrix({sx:e} 0 0 {:e} {:e} {:e})">"#,
            -sy,
            LEFT - sx * x0,
            TOP + ph + sy * y0
        );
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut points = String::new();
            for k in decimate(&s.ys, MAX_POINTS) {
                if !points.is_empty() {
                    points.push(' ');
                }
                let _ = write!(points, "{},{}", fmt_num(s.xs[k]), fmt_num(s.ys[k]));
            }
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline data-source="{}" data-column="{}" fill="none" stroke="{color}" stroke-width="1.5" vector-effect="non-scaling-stroke"{dash} points="{points}"/>"#,
                escape(&s.source),
                escape(&s.column)
            );
        }
        let _ = writeln!(out, "</g></g>");
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let y = TOP + 10.0 + 18.0 * i as f64;
            let x = WIDTH - RIGHT + 12.0;
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
                x + 22.0,
                x + 28.0,
                y + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimation_keeps_extremes_and_ends() {
        let ys: Vec<f64> = (0..10_000).map(|i| ((i as f64) * 0.01).sin()).collect();
        let keep = decimate(&ys, 400);
        assert!(keep.len() <= 404);
        assert_eq!(keep[0], 0);
        assert_eq!(*keep.last().unwrap(), 9_999);
        let max = ys.iter().cloned().fold(f64::MIN, f64::max);
        assert!(keep.iter().any(|&i| ys[i] == max));
        assert!(keep.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(decimate(&ys[..10], 400).len(), 10);
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 30.0), vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(ticks(0.0, 60.0), vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0]);
        let t = ticks(-0.12, 0.13);
        assert!(t.len() >= 3 && t.len() <= 7, "{t:?}");
        assert_eq!(tick_label(0.1), "0.1");
        assert_eq!(tick_label(-0.0), "0");
    }

    #[test]
    fn renders_points_verbatim() {
        let chart = LineChart {
            title: "a < b".into(),
            x_label: "t (s)".into(),
            y_label: "z (m)".into(),
            series: vec![Series {
                name: "s".into(),
                source: "f.csv".into(),
                column: "z".into(),
                dashed: true,
                xs: vec![0.0, 0.001, 0.002],
                ys: vec![0.0, 0.1, -0.30000000000000004],
            }],
        };
        let svg = chart.render();
        assert!(svg.contains(r#"points="0,0 0.001,0.1 0.002,-0.30000000000000004""#));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn flat_series_renders() {
        let chart = LineChart {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            series: vec![Series {
                name: "flat".into(),
                source: "f.csv".into(),
                column: "z".into(),
                dashed: false,
                xs: vec![0.0, 1.0],
                ys: vec![0.0, 0.0],
            }],
        };
        let svg = chart.render();
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
