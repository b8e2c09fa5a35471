//! Flat-color SVG output for single glyphs and sensor scenes.
//!
//! Documents use a small SVG 1.1 subset: `g`, `circle`, `path`, `rect`,
//! `text` and an optional background `image`. Every fill is a solid color;
//! no gradients, filters, patterns or scripts are ever written. Numbers are
//! printed with fixed precision so equal inputs give equal bytes.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

pub use crate::color::{value_to_color, ColorMap, ColorStop, Rgb};
use crate::error::{Error, Result};
use crate::geometry::{assemble_glyph, null_glyph, GlyphGeometry, GlyphProportions, GlyphSource, LightLayer};
use crate::ingest::SensorSummary;
use crate::scale::{LevelChoice, UncertaintyScale};

const FONT_FAMILY: &str = "sans-serif";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub summary: SensorSummary,
    /// Glyph centre, px from the top-left corner.
    pub position: (f64, f64),
    /// Outer diameter, px.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub canvas: Canvas,
    pub placements: Vec<Placement>,
    pub scale: UncertaintyScale<f64>,
    pub color_map: ColorMap,
    #[serde(default)]
    pub show_labels: bool,
    /// Opaque reference to an image drawn beneath all glyphs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
    #[serde(default)]
    pub proportions: GlyphProportions<f64>,
}

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" || s.is_empty() {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn open_document(out: &mut String, width: f64, height: f64) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" xmlns:xlink=\"http://www.w3.org/1999/xlink\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = num(width),
        h = num(height)
    );
}

/// Maps model space (origin centre, y up) onto the page.
struct Placer {
    cx: f64,
    cy: f64,
    scale: f64,
}

impl Placer {
    fn x(&self, x: f64) -> String {
        num(self.cx + x * self.scale)
    }

    fn y(&self, y: f64) -> String {
        num(self.cy - y * self.scale)
    }

    fn len(&self, l: f64) -> String {
        num(l * self.scale)
    }
}

fn write_circle(out: &mut String, p: &Placer, cx: f64, cy: f64, r: f64, fill: Rgb) {
    let _ = writeln!(out, "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{fill}\"/>", p.x(cx), p.y(cy), p.len(r));
}

fn write_glyph(out: &mut String, g: &GlyphGeometry<f64>, p: &Placer, id: Option<usize>) {
    let class = match g.level {
        Some(level) => format!("glyph level-{level}"),
        None => "glyph null".to_string(),
    };
    match id {
        Some(i) => {
            let _ = writeln!(out, "<g id=\"glyph-{i}\" class=\"{class}\">");
        }
        None => {
            let _ = writeln!(out, "<g class=\"{class}\">");
        }
    }
    let d = &g.dark_disc;
    write_circle(out, p, d.cx, d.cy, d.r, g.dark_color);
    match &g.light_layer {
        LightLayer::Circle(c) => write_circle(out, p, c.cx, c.cy, c.r, g.light_color),
        LightLayer::Wave(outline) => {
            out.push_str("<path d=\"");
            for (i, &(x, y)) in outline.vertices.iter().enumerate() {
                let _ = write!(out, "{}{} {}", if i == 0 { "M" } else { " L" }, p.x(x), p.y(y));
            }
            if outline.closed {
                out.push_str(" Z");
            }
            let _ = writeln!(out, "\" fill=\"{}\"/>", g.light_color);
        }
    }
    let v = &g.value_disc;
    write_circle(out, p, v.cx, v.cy, v.r, g.value_color);
    if let Some(m) = &g.null_marker {
        // rect y is the top edge on the page
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            p.x(m.bar.x),
            p.y(m.bar.y + m.bar.height),
            p.len(m.bar.width),
            p.len(m.bar.height),
            m.color
        );
        write_circle(out, p, m.dot.cx, m.dot.cy, m.dot.r, m.color);
    }
    if let Some(label) = &g.label {
        // below the glyph when the marker occupies the centre
        let y = if g.is_null() { -0.5 * g.diameter - 0.12 * g.diameter } else { 0.0 };
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"{FONT_FAMILY}\" font-size=\"{}\" text-anchor=\"middle\" dominant-baseline=\"central\" fill=\"{}\">{}</text>",
            p.x(0.0),
            p.y(y),
            p.len(0.2 * g.diameter),
            g.dark_color,
            escape(label)
        );
    }
    out.push_str("</g>\n");
}

/// Standalone square document, `out_px` wide, containing one glyph.
pub fn render_glyph(g: &GlyphGeometry<f64>, out_px: f64) -> Vec<u8> {
    let size = if out_px > 0.0 && out_px.is_finite() { out_px } else { g.diameter };
    let mut out = String::new();
    open_document(&mut out, size, size);
    let placer = Placer { cx: size / 2.0, cy: size / 2.0, scale: size / g.diameter };
    write_glyph(&mut out, g, &placer, None);
    out.push_str("</svg>\n");
    out.into_bytes()
}

/// Glyph for one sensor: color from the mean, wave level from the variance.
pub fn summary_glyph(
    summary: &SensorSummary,
    scale: &UncertaintyScale<f64>,
    color_map: &ColorMap,
    proportions: &GlyphProportions<f64>,
    label: bool,
) -> Result<GlyphGeometry<f64>> {
    let color = value_to_color(summary.mean, color_map);
    let label = label.then(|| format!("{:.1}", summary.mean));
    match scale.map_uncertainty(summary.variance)? {
        LevelChoice::Null => {
            let mut g = null_glyph(color, proportions)?;
            g.label = label;
            Ok(g)
        }
        LevelChoice::Level(i) => {
            let level = scale.level(i).expect("mapped level exists");
            assemble_glyph(GlyphSource::Level(level), color, label.as_deref(), proportions)
        }
    }
}

/// One glyph group per placement, in placement order.
pub fn render_scene(spec: &SceneSpec) -> Result<Vec<u8>> {
    let Canvas { width, height } = spec.canvas;
    if !(width > 0.0 && height > 0.0) {
        return Err(Error::InvalidParameter(format!("canvas {width}x{height}")));
    }
    for (index, pl) in spec.placements.iter().enumerate() {
        let (x, y) = pl.position;
        if !(0.0..=width).contains(&x) || !(0.0..=height).contains(&y) {
            return Err(Error::PlacementOutOfCanvas { index, x, y, width, height });
        }
        if !(pl.diameter > 0.0) || !pl.diameter.is_finite() {
            return Err(Error::InvalidParameter(format!("placement {index} has diameter {}", pl.diameter)));
        }
    }
    let mut out = String::new();
    open_document(&mut out, width, height);
    if let Some(href) = &spec.background {
        let _ = writeln!(
            out,
            "<image x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" preserveAspectRatio=\"none\" xlink:href=\"{}\"/>",
            num(width),
            num(height),
            escape(href)
        );
    }
    for (i, pl) in spec.placements.iter().enumerate() {
        let g = summary_glyph(&pl.summary, &spec.scale, &spec.color_map, &spec.proportions, spec.show_labels)?;
        let placer = Placer { cx: pl.position.0, cy: pl.position.1, scale: pl.diameter / g.diameter };
        write_glyph(&mut out, &g, &placer, Some(i));
    }
    out.push_str("</svg>\n");
    Ok(out.into_bytes())
}
