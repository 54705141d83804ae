//! Deterministic SVG charts: GrapeShape cluster icons, HalfPie conditional
//! proportion charts, segment bar charts and a static HTML gallery.
//!
//! Every coordinate is written with exactly six decimals, so identical inputs
//! produce identical bytes.

mod bars;
mod grape;
mod halfpie;

pub use bars::{render_segment_bars, BarGroup};
pub use grape::{grape_color, render_grapeshape, ColorScale, GrapeLayout, Rgb};
pub use halfpie::{render_halfpie, HalfPieGeometry, HalfPieSpec, MarginMode, Sector};

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartDocument {
    /// Suggested file name, e.g. `grapeshape_cluster_0.svg`.
    pub name: String,
    pub svg: String,
}

/// Fixed six-decimal formatting with negative zero folded to zero.
pub(crate) fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

pub(crate) fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

pub(crate) fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
        w = num(width),
        h = num(height)
    )
}

/// Static index page embedding each chart file, in the order given.
pub fn gallery_html(title: &str, files: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<!DOCTYPE html>");
    let _ = writeln!(
        out,
        "<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n</head>\n<body>",
        escape(title)
    );
    let _ = writeln!(out, "<h1>{}</h1>", escape(title));
    let _ = writeln!(out, "<ul>");
    for f in files {
        let f = escape(f);
        let _ = writeln!(
            out,
            "<li><a href=\"{f}\">{f}</a><br><img src=\"{f}\" alt=\"{f}\"></li>"
        );
    }
    let _ = writeln!(out, "</ul>\n</body>\n</html>");
    out
}
