//! Tree drawings as SVG plus a JSON sidecar. The sidecar is what the HTTP
//! service returns, so both go through [`drawing_json`].

use std::fmt::Write;

use embgeom_core::projection::TreeDrawing;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct DrawingJson<'a> {
    pub tokens: &'a [String],
    pub coords: &'a [[f64; 2]],
    pub solid: Vec<SolidJson<'a>>,
    pub dotted: Vec<DottedJson>,
    pub dotted_threshold: f64,
    pub scale: ScaleJson,
    pub mean_abs_deviation: f64,
}

#[derive(Debug, Serialize)]
pub struct SolidJson<'a> {
    pub head: usize,
    pub dependent: usize,
    pub relation: &'a str,
    pub squared_distance: f64,
    pub deviation: f64,
    pub color: String,
}

#[derive(Debug, Serialize)]
pub struct DottedJson {
    pub a: usize,
    pub b: usize,
    pub squared_distance: f64,
    pub tree_distance: u32,
}

#[derive(Debug, Serialize)]
pub struct ScaleJson {
    pub kind: &'static str,
    pub center: f64,
    pub clip: f64,
}

pub fn drawing_json(d: &TreeDrawing) -> DrawingJson<'_> {
    DrawingJson {
        tokens: &d.tokens,
        coords: &d.coords,
        solid: d
            .solid
            .iter()
            .map(|e| SolidJson {
                head: e.head,
                dependent: e.dependent,
                relation: &e.relation,
                squared_distance: e.squared_distance,
                deviation: e.deviation,
                color: d.scale.hex(e.deviation),
            })
            .collect(),
        dotted: d
            .dotted
            .iter()
            .map(|e| DottedJson {
                a: e.a,
                b: e.b,
                squared_distance: e.squared_distance,
                tree_distance: e.tree_distance,
            })
            .collect(),
        dotted_threshold: d.dotted_threshold,
        scale: ScaleJson {
            kind: "blue-white-red",
            center: d.scale.center,
            clip: d.scale.clip,
        },
        mean_abs_deviation: d.mean_abs_deviation(),
    }
}

/// Pretty-printed sidecar text, newline-terminated.
pub fn drawing_json_string(d: &TreeDrawing) -> String {
    serde_json::to_string_pretty(&drawing_json(d)).expect("drawing serialises") + "\n"
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Self-contained SVG: dependency edges coloured by deviation, dashed grey
/// lines for suspiciously close non-edges, token labels at the PCA layout.
pub fn render_svg(d: &TreeDrawing, title: Option<&str>) -> String {
    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for [x, y] in &d.coords {
        lo_x = lo_x.min(*x);
        hi_x = hi_x.max(*x);
        lo_y = lo_y.min(*y);
        hi_y = hi_y.max(*y);
    }
    let span = (hi_x - lo_x).max(hi_y - lo_y).max(1e-9);
    let inner = SIZE - 2.0 * MARGIN;
    let pos = |i: usize| {
        let [x, y] = d.coords[i];
        (
            MARGIN + (x - lo_x) / span * inner,
            // SVG y grows downwards
            SIZE - MARGIN - (y - lo_y) / span * inner,
        )
    };

    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if let Some(t) = title {
        writeln!(svg, r#"<text x="{MARGIN}" y="20" font-family="sans-serif" font-size="13">{}</text>"#, escape(t)).unwrap();
    }
    for e in &d.dotted {
        let (x1, y1) = pos(e.a);
        let (x2, y2) = pos(e.b);
        writeln!(
            svg,
            r##"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="#888888" stroke-width="1" stroke-dasharray="4 3"/>"##
        )
        .unwrap();
    }
    for e in &d.solid {
        let (x1, y1) = pos(e.head);
        let (x2, y2) = pos(e.dependent);
        writeln!(
            svg,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{}" stroke-width="3"><title>{} {:+.3}</title></line>"#,
            d.scale.hex(e.deviation),
            escape(&e.relation),
            e.deviation
        )
        .unwrap();
    }
    for (i, tok) in d.tokens.iter().enumerate() {
        let (x, y) = pos(i);
        writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="black"/>"#).unwrap();
        writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            x + 5.0,
            y - 5.0,
            escape(tok)
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
