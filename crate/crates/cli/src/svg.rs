//! Deterministic SVG drawings of a hierarchy, a region and a plan.

use std::collections::BTreeMap;
use std::fmt::Write;

use cubenet::{CellId, CubeHierarchy, QueryPlan, Rect, Region};

const UNIT: usize = 32;
const MARGIN: usize = 16;

/// What to draw on top of the grid.
#[derive(Debug, Default, Clone, Copy)]
pub struct Layers<'a> {
    pub region: Option<&'a Region>,
    pub failed: Option<&'a Region>,
    pub plan: Option<&'a QueryPlan>,
    pub labels: Option<&'a BTreeMap<CellId, String>>,
}

fn rect_px(r: &Rect) -> (usize, usize, usize, usize) {
    (MARGIN + r.x0 * UNIT, MARGIN + r.y0 * UNIT, r.width() * UNIT, r.height() * UNIT)
}

fn stroke_width(level: usize) -> String {
    format!("{:.1}", 0.4 + 0.9 * level as f64)
}

pub fn render_svg(h: &CubeHierarchy, layers: Layers<'_>) -> String {
    let dims = h.dims();
    let (w, ht) = (dims.width * UNIT + 2 * MARGIN, dims.height * UNIT + 2 * MARGIN);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{ht}" viewBox="0 0 {w} {ht}">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{w}" height="{ht}" fill="white"/>"#);

    let shade = |out: &mut String, region: &Region, class: &str, fill: &str| {
        if region.is_empty() {
            return;
        }
        let _ = writeln!(out, r#"<g class="{class}" fill="{fill}" stroke="none">"#);
        for r in region.row_runs() {
            let (x, y, rw, rh) = rect_px(&r);
            let _ = writeln!(out, r#"<rect x="{x}" y="{y}" width="{rw}" height="{rh}"/>"#);
        }
        out.push_str("</g>\n");
    };
    if let Some(region) = layers.region {
        shade(&mut out, region, "region", "#c8c8c8");
    }
    if let Some(failed) = layers.failed {
        shade(&mut out, failed, "failed", "#f2a0a0");
    }

    let config = h.config();
    for level in 0..=h.height() {
        let color = if level == 0 { "#b0b0b0" } else { "#303030" };
        let _ = writeln!(
            out,
            r#"<g class="level-{level}" fill="none" stroke="{color}" stroke-width="{}">"#,
            stroke_width(level)
        );
        for id in config.cells_at_level(level) {
            let (x, y, rw, rh) = rect_px(&config.cell(id).bounds);
            let _ = writeln!(out, r#"<rect x="{x}" y="{y}" width="{rw}" height="{rh}"/>"#);
        }
        out.push_str("</g>\n");
    }

    if let Some(plan) = layers.plan {
        out.push_str("<g class=\"plan\" fill=\"none\" stroke-width=\"3\">\n");
        for (id, coef) in crate::format::cell_terms(plan) {
            let cell = config.cell(id);
            let (x, y, rw, rh) = rect_px(&cell.bounds);
            let (color, sign, dash) = if coef < 0 {
                ("#c02020", '-', r#" stroke-dasharray="6 3""#)
            } else {
                ("#208020", '+', "")
            };
            let name = layers
                .labels
                .and_then(|l| l.get(&id).cloned())
                .unwrap_or_else(|| cell.to_string());
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" stroke="{color}"{dash}/>"#,
                x + 2,
                y + 2,
                rw.saturating_sub(4),
                rh.saturating_sub(4)
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-family="monospace" font-size="11" fill="{color}" stroke="none">{sign}{}</text>"#,
                x + 5,
                y + 14,
                escape(&name)
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
