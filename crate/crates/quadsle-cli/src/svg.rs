//! Minimal SVG 1.1 emitter: framed axes with ticks, line and marker series, heatmaps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
enum Layer {
    Line { points: Vec<(f64, f64)>, color: String, label: String },
    Markers { points: Vec<(f64, f64)>, color: String, label: String },
    HLine { y: f64, color: String },
    Heatmap { x: (f64, f64), y: (f64, f64), values: Vec<Vec<f64>> },
}

#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    x_range: Option<(f64, f64)>,
    y_range: Option<(f64, f64)>,
    layers: Vec<Layer>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Fixed-precision coordinate so output is stable across platforms.
fn c(v: f64) -> String {
    format!("{v:.2}")
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

/// Roughly five round tick positions in [lo, hi].
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

/// White to dark blue.
fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let r = (255.0 * (1.0 - 0.9 * t)) as u8;
    let g = (255.0 * (1.0 - 0.7 * t)) as u8;
    let b = (255.0 * (1.0 - 0.3 * t)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x_range: None,
            y_range: None,
            layers: Vec::new(),
        }
    }

    pub fn x_range(mut self, lo: f64, hi: f64) -> Self {
        self.x_range = Some((lo, hi));
        self
    }

    pub fn y_range(mut self, lo: f64, hi: f64) -> Self {
        self.y_range = Some((lo, hi));
        self
    }

    fn next_color(&self) -> String {
        let n = self.layers.iter().filter(|l| matches!(l, Layer::Line { .. } | Layer::Markers { .. })).count();
        PALETTE[n % PALETTE.len()].into()
    }

    pub fn line(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        let color = self.next_color();
        self.layers.push(Layer::Line { points, color, label: label.into() });
        self
    }

    pub fn markers(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        let color = self.next_color();
        self.layers.push(Layer::Markers { points, color, label: label.into() });
        self
    }

    pub fn hline(mut self, y: f64) -> Self {
        self.layers.push(Layer::HLine { y, color: "#888888".into() });
        self
    }

    /// `values[row][col]`, row 0 at the bottom, covering the box x × y.
    pub fn heatmap(mut self, x: (f64, f64), y: (f64, f64), values: Vec<Vec<f64>>) -> Self {
        self.layers.push(Layer::Heatmap { x, y, values });
        self
    }

    fn extent(&self) -> ((f64, f64), (f64, f64)) {
        let mut xs = (f64::INFINITY, f64::NEG_INFINITY);
        let mut ys = (f64::INFINITY, f64::NEG_INFINITY);
        let mut grow = |x: f64, y: f64| {
            // NaN x widens only the y range
            if x.is_finite() {
                xs = (xs.0.min(x), xs.1.max(x));
            }
            if y.is_finite() && !x.is_infinite() {
                ys = (ys.0.min(y), ys.1.max(y));
            }
        };
        for l in &self.layers {
            match l {
                Layer::Line { points, .. } | Layer::Markers { points, .. } => points.iter().for_each(|&(x, y)| grow(x, y)),
                Layer::HLine { .. } => {}
                Layer::Heatmap { x, y, .. } => {
                    grow(x.0, y.0);
                    grow(x.1, y.1);
                }
            }
        }
        for l in &self.layers {
            if let Layer::HLine { y, .. } = l {
                grow(f64::NAN, *y);
            }
        }
        let pad = |(lo, hi): (f64, f64)| {
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        (self.x_range.unwrap_or_else(|| pad(xs)), self.y_range.unwrap_or_else(|| pad(ys)))
    }

    /// Standalone SVG document.
    pub fn render(&self) -> String {
        panels(std::slice::from_ref(self))
    }

    fn body(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.extent();
        let pw = W - LEFT - RIGHT;
        let ph = H - TOP - BOTTOM;
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
        let inside = |x: f64, y: f64| x.is_finite() && y.is_finite() && x >= x0 && x <= x1 && y >= y0 && y <= y1;

        let mut s = String::new();
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, c(W / 2.0), esc(&self.title));

        for l in &self.layers {
            if let Layer::Heatmap { x, y, values } = l {
                let max = values.iter().flatten().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
                let rows = values.len();
                for (r, row) in values.iter().enumerate() {
                    let cols = row.len();
                    for (k, &v) in row.iter().enumerate() {
                        let (ax, bx) = (x.0 + (x.1 - x.0) * k as f64 / cols as f64, x.0 + (x.1 - x.0) * (k + 1) as f64 / cols as f64);
                        let (ay, by) = (y.0 + (y.1 - y.0) * r as f64 / rows as f64, y.0 + (y.1 - y.0) * (r + 1) as f64 / rows as f64);
                        let fill = ramp(if max > 0.0 { v / max } else { 0.0 });
                        let _ = writeln!(
                            s,
                            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                            c(sx(ax)),
                            c(sy(by)),
                            c(sx(bx) - sx(ax)),
                            c(sy(ay) - sy(by))
                        );
                    }
                }
            }
        }

        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#, c(LEFT), c(TOP), c(pw), c(ph));
        for t in ticks(x0, x1) {
            let px = c(sx(t));
            let _ = writeln!(s, r#"<line x1="{px}" y1="{}" x2="{px}" y2="{}" stroke="black"/>"#, c(TOP + ph), c(TOP + ph + 5.0));
            let _ = writeln!(s, r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#, c(TOP + ph + 18.0), tick_label(t));
        }
        for t in ticks(y0, y1) {
            let py = c(sy(t));
            let _ = writeln!(s, r#"<line x1="{}" y1="{py}" x2="{}" y2="{py}" stroke="black"/>"#, c(LEFT - 5.0), c(LEFT));
            let _ = writeln!(s, r#"<text x="{}" y="{py}" text-anchor="end" dominant-baseline="middle">{}</text>"#, c(LEFT - 8.0), tick_label(t));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, c(LEFT + pw / 2.0), c(H - 12.0), esc(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            c(TOP + ph / 2.0),
            c(TOP + ph / 2.0),
            esc(&self.y_label)
        );

        let mut legend = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Line { points, color, label } => {
                    let pts: Vec<String> = points.iter().filter(|&&(x, y)| inside(x, y)).map(|&(x, y)| format!("{},{}", c(sx(x)), c(sy(y)))).collect();
                    if pts.len() >= 2 {
                        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
                    }
                    legend.push((color, label));
                }
                Layer::Markers { points, color, label } => {
                    for &(x, y) in points.iter().filter(|&&(x, y)| inside(x, y)) {
                        let _ = writeln!(s, r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#, c(sx(x)), c(sy(y)));
                    }
                    legend.push((color, label));
                }
                Layer::HLine { y, color } => {
                    if *y >= y0 && *y <= y1 {
                        let py = c(sy(*y));
                        let _ = writeln!(s, r#"<line x1="{}" y1="{py}" x2="{}" y2="{py}" stroke="{color}" stroke-dasharray="4 3"/>"#, c(LEFT), c(LEFT + pw));
                    }
                }
                Layer::Heatmap { .. } => {}
            }
        }
        for (i, (color, label)) in legend.iter().enumerate().filter(|(_, (_, l))| !l.is_empty()) {
            let y = TOP + 14.0 + 16.0 * i as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, c(LEFT + pw - 150.0), c(y - 9.0));
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, c(LEFT + pw - 135.0), c(y), esc(label));
        }
        s
    }
}

/// Plots laid out left to right in one document.
pub fn panels(plots: &[Plot]) -> String {
    let total = W * plots.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total}" height="{H}" viewBox="0 0 {total} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{total}" height="{H}" fill="white"/>"#);
    for (i, p) in plots.iter().enumerate() {
        let _ = writeln!(s, r#"<g transform="translate({} 0)">"#, W * i as f64);
        s.push_str(&p.body());
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}
