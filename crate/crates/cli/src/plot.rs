//! Static SVG overlays of planar zonotope outlines.

use std::fmt::Write as _;

use anyhow::{bail, Result};
use reachunder::Zonotope;

pub const REFERENCE_COLOR: &str = "#000000";

const PALETTE: [&str; 6] = ["#d62728", "#2ca02c", "#1f77b4", "#9467bd", "#ff7f0e", "#8c564b"];

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// Red, green, blue first, then further distinct colors.
pub fn palette(k: usize) -> &'static str {
    PALETTE[k % PALETTE.len()]
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub label: String,
    pub color: String,
    pub sets: Vec<Zonotope>,
}

/// Renders the layers bottom-up in reverse order, so the first layer is drawn
/// on top. Output depends only on the inputs.
pub fn render_svg(title: &str, layers: &[Layer], directions: usize) -> Result<String> {
    if layers.is_empty() || layers.iter().all(|l| l.sets.is_empty()) {
        bail!("nothing to plot: the set list is empty");
    }
    let mut outlines: Vec<Vec<Vec<[f64; 2]>>> = Vec::with_capacity(layers.len());
    for layer in layers {
        let mut polys = Vec::with_capacity(layer.sets.len());
        for z in &layer.sets {
            if z.dim() != 2 {
                bail!(
                    "plotting needs planar sets, got dimension {}; projecting onto coordinates is not supported",
                    z.dim()
                );
            }
            polys.push(z.outline_2d(directions)?.iter().map(|p| [p[0], p[1]]).collect());
        }
        outlines.push(polys);
    }

    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in outlines.iter().flatten().flatten() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    for k in 0..2 {
        let pad = 0.05 * (hi[k] - lo[k]).max(1e-9);
        let pad = if hi[k] - lo[k] < 1e-9 { 1.0 } else { pad };
        lo[k] -= pad;
        hi[k] += pad;
    }
    // Equal scale on both axes, centered in the plot area.
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let scale = (pw / (hi[0] - lo[0])).min(ph / (hi[1] - lo[1]));
    let (cx, cy) = (0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]));
    let (x0, x1) = (cx - 0.5 * pw / scale, cx + 0.5 * pw / scale);
    let (y0, y1) = (cy - 0.5 * ph / scale, cy + 0.5 * ph / scale);
    let sx = |x: f64| LEFT + (x - x0) * scale;
    let sy = |y: f64| TOP + (y1 - y) * scale;

    let mut s = String::new();
    let w = &mut s;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(w, r##"<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##)?;
    writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + 0.5 * pw,
        escape(title)
    )?;

    // axes and ticks
    writeln!(
        w,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444444"/>"##
    )?;
    for t in ticks(x0, x1) {
        let x = sx(t);
        writeln!(
            w,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#444444"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick_label(t)
        )?;
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        writeln!(
            w,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#444444"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            tick_label(t)
        )?;
    }
    writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">x1</text>"#,
        LEFT + 0.5 * pw,
        HEIGHT - 20.0
    )?;
    writeln!(
        w,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">x2</text>"#,
        TOP + 0.5 * ph,
        TOP + 0.5 * ph
    )?;

    writeln!(
        w,
        r#"<clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}"/></clipPath>"#
    )?;
    writeln!(w, r#"<g clip-path="url(#plot-area)">"#)?;
    for (layer, polys) in layers.iter().zip(&outlines).rev() {
        let color = escape(&layer.color);
        writeln!(w, r#"<g fill="{color}" fill-opacity="0.2" stroke="{color}" stroke-width="1.2">"#)?;
        for poly in polys {
            let pts: Vec<String> = poly.iter().map(|p| format!("{:.2},{:.2}", sx(p[0]), sy(p[1]))).collect();
            writeln!(w, r#"<polygon points="{}"/>"#, pts.join(" "))?;
        }
        writeln!(w, "</g>")?;
    }
    writeln!(w, "</g>")?;

    let lx = WIDTH - RIGHT + 20.0;
    for (k, layer) in layers.iter().enumerate() {
        let y = TOP + 10.0 + 22.0 * k as f64;
        let color = escape(&layer.color);
        writeln!(
            w,
            r#"<rect x="{lx:.2}" y="{y:.2}" width="14" height="14" fill="{color}" fill-opacity="0.4" stroke="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 22.0,
            y + 11.0,
            escape(&layer.label)
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(s)
}

// Roughly five ticks at 1, 2 or 5 times a power of ten.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn tick_label(t: f64) -> String {
    let s = format!("{t:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
