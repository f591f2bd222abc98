//! Static SVG line plots: an end-effector path panel and a
//! manipulability-versus-step panel per policy.

use std::path::Path;

use manipulab::{ManipError, Result};

use crate::io::write_atomic;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

struct Extent {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

/// Data extent padded by a 5% margin on each side.
fn extent(series: &[Series]) -> Extent {
    let mut e = Extent { x_min: f64::INFINITY, x_max: f64::NEG_INFINITY, y_min: f64::INFINITY, y_max: f64::NEG_INFINITY };
    for s in series {
        for &(x, y) in &s.points {
            e.x_min = e.x_min.min(x);
            e.x_max = e.x_max.max(x);
            e.y_min = e.y_min.min(y);
            e.y_max = e.y_max.max(y);
        }
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).abs();
        let margin = if span > 0.0 { 0.05 * span } else { 0.5 * lo.abs().max(1.0) };
        *lo -= margin;
        *hi += margin;
    };
    pad(&mut e.x_min, &mut e.x_max);
    pad(&mut e.y_min, &mut e.y_max);
    e
}

/// Renders the panels side by side into one SVG file.
pub fn emit_plot(panels: &[Panel], path: &Path) -> Result<()> {
    if panels.is_empty() {
        return Err(ManipError::EmptyInput("no panels to plot".into()));
    }
    for p in panels {
        if p.series.is_empty() {
            return Err(ManipError::EmptyInput(format!("panel '{}' has no series", p.title)));
        }
        for s in &p.series {
            if s.points.len() < 2 {
                return Err(ManipError::EmptyInput(format!(
                    "series '{}' needs at least two points",
                    s.label
                )));
            }
            if s.points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                return Err(ManipError::InvalidConfig(format!(
                    "series '{}' contains non-finite points",
                    s.label
                )));
            }
        }
    }

    let (pw, ph) = (480.0, 360.0);
    let margin = 56.0;
    let total_w = pw * panels.len() as f64;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{ph}" viewBox="0 0 {total_w} {ph}" font-family="sans-serif" font-size="12">"#
    );
    svg.push('\n');
    svg.push_str(&format!(r#"<rect width="{total_w}" height="{ph}" fill="white"/>"#));
    svg.push('\n');

    for (pi, panel) in panels.iter().enumerate() {
        let x0 = pi as f64 * pw + margin;
        let y0 = margin;
        let iw = pw - 1.75 * margin;
        let ih = ph - 2.0 * margin;
        let e = extent(&panel.series);
        let to_px = |x: f64, y: f64| {
            (
                x0 + (x - e.x_min) / (e.x_max - e.x_min) * iw,
                y0 + ih - (y - e.y_min) / (e.y_max - e.y_min) * ih,
            )
        };

        svg.push_str(&format!(
            r##"<rect x="{x0}" y="{y0}" width="{iw}" height="{ih}" fill="none" stroke="#888"/>"##
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
            x0 + iw / 2.0,
            y0 - 10.0,
            panel.title
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + iw / 2.0,
            y0 + ih + 32.0,
            panel.x_label
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="middle" transform="rotate(-90 {} {})">{}</text>"#,
            x0 - 40.0,
            y0 + ih / 2.0,
            x0 - 40.0,
            y0 + ih / 2.0,
            panel.y_label
        ));
        // Axis range labels.
        svg.push_str(&format!(
            r#"<text x="{x0}" y="{}" font-size="10">{:.3}</text>"#,
            y0 + ih + 14.0,
            e.x_min
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{:.3}</text>"#,
            x0 + iw,
            y0 + ih + 14.0,
            e.x_max
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{:.3}</text>"#,
            x0 - 4.0,
            y0 + ih,
            e.y_min
        ));
        svg.push_str(&format!(
            r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{:.3}</text>"#,
            x0 - 4.0,
            y0 + 10.0,
            e.y_max
        ));

        for (si, s) in panel.series.iter().enumerate() {
            let color = COLORS[si % COLORS.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| {
                    let (px, py) = to_px(x, y);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            svg.push_str(&format!(
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            ));
            let ly = y0 + 14.0 * si as f64 + 12.0;
            svg.push_str(&format!(
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="3"/>"#,
                x0 + 8.0,
                ly - 4.0,
                x0 + 28.0,
                ly - 4.0
            ));
            svg.push_str(&format!(r#"<text x="{}" y="{ly}">{}</text>"#, x0 + 32.0, s.label));
        }
    }
    svg.push_str("</svg>\n");
    write_atomic(path, &svg)
}
