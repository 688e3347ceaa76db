//! Minimal SVG line plots. CSV files are the data contract; these are for
//! looking at.

use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Line,
    /// Histogram bars from `y = 0`; points are bin centres.
    Bars,
    /// Full-height vertical marks at each `x`.
    Marks,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const PAD: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom
const COLORS: [&str; 6] = ["#1f4e9c", "#c0392b", "#2e8b57", "#7d3c98", "#d68910", "#333333"];

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            if !(x.is_finite() && y.is_finite()) {
                continue;
            }
            b.0 = b.0.min(x);
            b.1 = b.1.max(x);
            if s.style != Style::Marks {
                b.2 = b.2.min(y);
                b.3 = b.3.max(y);
            }
            if s.style == Style::Bars {
                b.2 = b.2.min(0.0);
            }
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if !b.2.is_finite() {
        b.2 = 0.0;
        b.3 = 1.0;
    }
    if b.1 - b.0 < 1e-300 {
        b.0 -= 0.5;
        b.1 += 0.5;
    }
    if b.3 - b.2 < 1e-12 * b.3.abs().max(1e-300) {
        b.2 -= 0.5 * b.2.abs().max(1.0);
        b.3 += 0.5 * b.3.abs().max(1.0);
    }
    b
}

pub fn render(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let (pl, pr, pt, pb) = PAD;
    let sx = |x: f64| pl + (x - x0) / (x1 - x0) * (W - pl - pr);
    let sy = |y: f64| H - pb - (y - y0) / (y1 - y0) * (H - pt - pb);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<path d="M{pl},{pt} V{} H{}" fill="none" stroke="black"/>"#,
        H - pb,
        W - pr
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (x, y) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(x),
            H - pb + 16.0,
            tick(x)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            pl - 6.0,
            sy(y) + 4.0,
            tick(y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (pl + W - pr) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (pt + H - pb) / 2.0,
        escape(ylabel)
    );
    for (i, ser) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        match ser.style {
            Style::Line => {
                let pts: Vec<String> = ser
                    .points
                    .iter()
                    .filter(|p| p.0.is_finite() && p.1.is_finite())
                    .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                    .collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#,
                    pts.join(" ")
                );
            }
            Style::Bars => {
                let w = if ser.points.len() > 1 {
                    (sx(ser.points[1].0) - sx(ser.points[0].0)).abs()
                } else {
                    4.0
                };
                for &(x, y) in &ser.points {
                    let (top, base) = (sy(y.max(0.0)), sy(0.0f64.max(y0)));
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.35"/>"#,
                        sx(x) - w / 2.0,
                        top,
                        w,
                        (base - top).max(0.0)
                    );
                }
            }
            Style::Marks => {
                for &(x, _) in &ser.points {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1}" y2="{2}" stroke="{c}" stroke-dasharray="4 3"/>"#,
                        sx(x),
                        pt,
                        H - pb
                    );
                }
            }
        }
        let ly = pt + 16.0 * i as f64 + 8.0;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="12" height="4" fill="{c}"/>"#,
            W - pr - 150.0,
            ly - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            W - pr - 132.0,
            ly,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
