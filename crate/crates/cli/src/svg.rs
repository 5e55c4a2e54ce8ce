//! Minimal SVG 1.1 line charts.
//!
//! A chart is a polyline per style run: points flagged `solid` are joined by
//! solid strokes, the others by dashed strokes. Consecutive runs share their
//! boundary point so the curve stays connected.

use std::fmt::Write;

pub struct Panel<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// `(x, y, solid)` in drawing order.
    pub points: Vec<(f64, f64, bool)>,
}

const W: f64 = 360.0;
const H: f64 = 280.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 32.0;
const BOTTOM: f64 = 48.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Split into maximal same-style runs, each sharing its first point with the
/// previous run's last point.
fn runs(points: &[(f64, f64, bool)]) -> Vec<(bool, Vec<(f64, f64)>)> {
    let mut out: Vec<(bool, Vec<(f64, f64)>)> = Vec::new();
    for (i, &(x, y, solid)) in points.iter().enumerate() {
        match out.last_mut() {
            Some((style, pts)) if *style == solid => pts.push((x, y)),
            _ => {
                let mut pts = Vec::new();
                if i > 0 {
                    let (px, py, _) = points[i - 1];
                    pts.push((px, py));
                }
                pts.push((x, y));
                out.push((solid, pts));
            }
        }
    }
    out
}

fn panel(svg: &mut String, p: &Panel<'_>, ox: f64) {
    let (x0, x1) = range(p.points.iter().map(|q| q.0));
    let (y0, y1) = range(p.points.iter().map(|q| q.1));
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| ox + LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let _ = writeln!(svg, r#"<g>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
        ox + LEFT + pw / 2.0,
        TOP - 12.0,
        escape(p.title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black" stroke-width="1"/>"#,
        ox + LEFT
    );
    for k in 0..TICKS {
        let f = k as f64 / (TICKS - 1) as f64;
        let xv = x0 + f * (x1 - x0);
        let yv = y0 + f * (y1 - y0);
        let (tx, ty) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{tx:.2}" y1="{:.2}" x2="{tx:.2}" y2="{:.2}" stroke="black"/><text x="{tx:.2}" y="{:.2}" text-anchor="middle" font-size="10">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 17.0,
            tick_label(xv)
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{ty:.2}" x2="{:.2}" y2="{ty:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#,
            ox + LEFT - 5.0,
            ox + LEFT,
            ox + LEFT - 7.0,
            ty + 3.5,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        ox + LEFT + pw / 2.0,
        H - 10.0,
        escape(p.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
        ox + 14.0,
        TOP + ph / 2.0,
        ox + 14.0,
        TOP + ph / 2.0,
        escape(p.y_label)
    );
    for (solid, pts) in runs(&p.points) {
        let coords: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if solid { "" } else { r#" stroke-dasharray="6,4""# };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="black" stroke-width="1.5"{dash}/>"#,
            coords.join(" ")
        );
    }
    let _ = writeln!(svg, "</g>");
}

/// Lays the panels out side by side in one self-contained document.
pub fn render(panels: &[Panel<'_>]) -> String {
    let total_w = W * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w:.0}" height="{H:.0}" viewBox="0 0 {total_w:.0} {H:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        panel(&mut svg, p, i as f64 * W);
    }
    svg.push_str("</svg>\n");
    svg
}
