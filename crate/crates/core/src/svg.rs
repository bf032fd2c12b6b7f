//! Minimal deterministic SVG line charts.

use crate::cache;
use crate::error::{domain, Result};
use crate::fmt::sig12;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const M: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn coord(v: f64) -> String {
    format!("{v:.2}")
}

pub fn render(chart: &Chart) -> Result<String> {
    if chart.series.is_empty() || chart.series.iter().all(|s| s.points.is_empty()) {
        return domain("chart needs at least one non-empty series");
    }
    let ty = |y: f64| if chart.log_y { y.log10() } else { y };
    let pts: Vec<(f64, f64)> = chart.series.iter().flat_map(|s| s.points.iter().map(|&(x, y)| (x, ty(y)))).collect();
    if pts.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return domain("chart values must be finite (and positive on a log axis)");
    }
    let (mut x0, mut x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(&chart.title));
    let _ = writeln!(
        out,
        r#"<path d="M{} {} L{} {} L{} {}" fill="none" stroke="black"/>"#,
        coord(M),
        coord(M),
        coord(M),
        coord(H - M),
        coord(W - M),
        coord(H - M)
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let ylab = if chart.log_y { sig4(10f64.powf(fy)) } else { sig4(fy) };
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#, coord(sx(fx)), coord(H - M + 16.0), sig4(fx));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end" font-size="11">{}</text>"#, coord(M - 6.0), coord(sy(fy) + 4.0), ylab);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, H - 16.0, esc(&chart.x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(&chart.y_label)
    );
    for (k, s) in chart.series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let d: Vec<String> = s
            .points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| format!("{}{} {}", if i == 0 { "M" } else { "L" }, coord(sx(x)), coord(sy(ty(y)))))
            .collect();
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, d.join(" "));
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#, coord(sx(x)), coord(sy(ty(y))));
        }
        let ly = M + 16.0 * k as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#, coord(W - M - 140.0), coord(ly), esc(&s.name));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn sig4(x: f64) -> String {
    let s = sig12(x);
    match s.parse::<f64>() {
        Ok(v) if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) => format!("{v:.2e}"),
        Ok(v) => {
            let t = format!("{v:.4}");
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        }
        Err(_) => s,
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_svg(chart: &Chart, path: &Path) -> Result<()> {
    let text = render(chart)?;
    cache::write_atomic(path, text.as_bytes())
}
