use std::fmt::Write;

use super::QualityEffortPoint;
use crate::error::EvalError;

const W: f64 = 760.0;
const H: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 70.0;

const MAP_COLOR: &str = "#1f6fb4";
const LOC_COLOR: &str = "#c8372d";

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Step from {1, 2, 5}·10^k giving at most ~6 intervals up to `max`.
fn nice_step(max: f64) -> f64 {
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Effort (hours, log axis) against map and localization deviation (cm),
/// one labeled marker per point and series. Output is a standalone SVG 1.1
/// document and depends only on `points`.
pub fn render_scatter(points: &[QualityEffortPoint]) -> Result<String, EvalError> {
    if points.is_empty() {
        return Err(EvalError::EmptySet("scatter points"));
    }
    if let Some(p) = points.iter().find(|p| !(p.effort_h > 0.0 && p.effort_h.is_finite())) {
        return Err(EvalError::InvalidInput(format!(
            "{}: effort must be positive for a log axis",
            p.label
        )));
    }
    let lo = points
        .iter()
        .map(|p| p.effort_h)
        .fold(f64::INFINITY, f64::min)
        .log10()
        .floor() as i32;
    let mut hi = points.iter().map(|p| p.effort_h).fold(0.0, f64::max).log10().ceil() as i32;
    if hi <= lo {
        hi = lo + 1;
    }
    let ymax_data = points
        .iter()
        .flat_map(|p| [p.map_deviation, p.localization_deviation])
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        * 100.0;
    let step = if ymax_data > 0.0 {
        nice_step(ymax_data * 1.05)
    } else {
        1.0
    };
    let ymax = (ymax_data * 1.05 / step).ceil().max(1.0) * step;

    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |h: f64| LEFT + (h.log10() - lo as f64) / (hi - lo) as f64 * pw;
    let sy = |cm: f64| TOP + ph - cm / ymax * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="28" text-anchor="middle" font-size="15">Mapping effort and deviation from ground truth</text>"#,
        W / 2.0
    );

    // grid and ticks
    let _ = writeln!(s, r##"<g class="axes" stroke="#bbbbbb" stroke-width="1">"##);
    for k in lo..=hi {
        let x = sx(10f64.powi(k));
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{TOP:.2}" x2="{x:.2}" y2="{:.2}"/>"#,
            TOP + ph
        );
    }
    let mut v = 0.0;
    while v <= ymax + step * 1e-9 {
        let y = sy(v);
        let _ = writeln!(
            s,
            r#"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/>"#,
            LEFT + pw
        );
        v += step;
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    for k in lo..=hi {
        let x = sx(10f64.powi(k));
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            fmt_tick(10f64.powi(k))
        );
    }
    let mut v = 0.0;
    while v <= ymax + step * 1e-9 {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            sy(v) + 4.0,
            fmt_tick(v)
        );
        v += step;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">effort [h] (log scale)</text>"#,
        LEFT + pw / 2.0,
        H - 24.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">deviation [cm]</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    // series
    let _ = writeln!(s, r#"<g class="series map">"#);
    for p in points {
        let (x, y) = (sx(p.effort_h), sy(p.map_deviation * 100.0));
        let _ = writeln!(
            s,
            r#"<circle class="marker" cx="{x:.2}" cy="{y:.2}" r="5" fill="{MAP_COLOR}"/><text class="label" x="{:.2}" y="{:.2}">{}</text>"#,
            x + 8.0,
            y - 6.0,
            esc(&p.label)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="series localization">"#);
    for p in points {
        let (x, y) = (sx(p.effort_h), sy(p.localization_deviation * 100.0));
        let _ = writeln!(
            s,
            r#"<rect class="marker" x="{:.2}" y="{:.2}" width="9" height="9" fill="{LOC_COLOR}"/><text class="label" x="{:.2}" y="{:.2}">{}</text>"#,
            x - 4.5,
            y - 4.5,
            x + 8.0,
            y + 14.0,
            esc(&p.label)
        );
    }
    let _ = writeln!(s, "</g>");

    // legend
    let lx = LEFT + pw - 190.0;
    let _ = writeln!(
        s,
        r#"<g class="legend"><rect x="{lx:.2}" y="{:.2}" width="180" height="44" fill="white" stroke="black"/><circle cx="{:.2}" cy="{:.2}" r="5" fill="{MAP_COLOR}"/><text x="{:.2}" y="{:.2}">map deviation</text><rect x="{:.2}" y="{:.2}" width="9" height="9" fill="{LOC_COLOR}"/><text x="{:.2}" y="{:.2}">localization deviation</text></g>"#,
        TOP + 10.0,
        lx + 14.0,
        TOP + 24.0,
        lx + 26.0,
        TOP + 28.0,
        lx + 9.5,
        TOP + 37.5,
        lx + 26.0,
        TOP + 46.0
    );
    let _ = writeln!(s, "</svg>");
    Ok(s)
}
