use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{escape, num, svg_open, ChartDocument};
use crate::cluster::ClusterModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub fn hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

/// Three-anchor color scale: certain "no" (p=0), maximal uncertainty (p=0.5)
/// and certain "yes" (p=1), interpolated linearly per channel in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorScale {
    pub yellow: Rgb,
    pub green: Rgb,
    pub purple: Rgb,
}

impl Default for ColorScale {
    fn default() -> Self {
        Self {
            yellow: Rgb(230, 200, 40),
            green: Rgb(80, 160, 60),
            purple: Rgb(120, 40, 140),
        }
    }
}

fn lerp(a: u8, b: u8, t: f64) -> u8 {
    (f64::from(a) + (f64::from(b) - f64::from(a)) * t).round() as u8
}

pub fn grape_color(p: f64, scale: &ColorScale) -> Result<Rgb> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProportion(p));
    }
    let (from, to, t) = if p <= 0.5 {
        (scale.yellow, scale.green, p / 0.5)
    } else {
        (scale.green, scale.purple, (p - 0.5) / 0.5)
    };
    Ok(Rgb(
        lerp(from.0, to.0, t),
        lerp(from.1, to.1, t),
        lerp(from.2, to.2, t),
    ))
}

/// Grape centers shared by every cluster icon.
///
/// Questions fill rows of 1, 2, 3, ... grapes in order; the single-grape row is
/// drawn at the bottom so the bunch narrows downward. Neighbouring grapes are
/// exactly tangent (hexagonal packing).
#[derive(Debug, Clone, PartialEq)]
pub struct GrapeLayout {
    pub codes: Vec<String>,
    pub positions: Vec<(f64, f64)>,
    pub radius: f64,
    pub width: f64,
    pub height: f64,
}

impl GrapeLayout {
    const PAD: f64 = 10.0;
    const STEM: f64 = 20.0;
    const TITLE: f64 = 24.0;

    pub fn bunch<S: AsRef<str>>(codes: &[S], radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 || codes.is_empty() {
            return Err(Error::Shape(
                "layout needs codes and a positive radius".into(),
            ));
        }
        let m = codes.len();
        let mut rows = 0;
        while rows * (rows + 1) / 2 < m {
            rows += 1;
        }
        let dx = 2.0 * radius;
        let dy = radius * 3f64.sqrt();
        let width = dx * rows as f64 + 2.0 * Self::PAD;
        let cx = width / 2.0;
        let top = Self::TITLE + Self::STEM + radius;
        let mut positions = Vec::with_capacity(m);
        'fill: for r in 0..rows {
            let y = top + dy * (rows - 1 - r) as f64;
            for i in 0..=r {
                if positions.len() == m {
                    break 'fill;
                }
                let x = cx + (i as f64 - r as f64 / 2.0) * dx;
                positions.push((x, y));
            }
        }
        let height = top + dy * (rows - 1) as f64 + radius + Self::PAD + 16.0;
        Ok(Self {
            codes: codes.iter().map(|c| c.as_ref().to_string()).collect(),
            positions,
            radius,
            width,
            height,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

/// One bunch icon per cluster, each grape colored by that cluster's "yes"
/// proportion and titled with its code and value.
pub fn render_grapeshape(
    model: &ClusterModel,
    layout: &GrapeLayout,
    scale: &ColorScale,
) -> Result<Vec<ChartDocument>> {
    let sizes = model.sizes();
    model
        .centroids
        .iter()
        .enumerate()
        .map(|(c, centroid)| {
            if centroid.len() != layout.len() {
                return Err(Error::DimensionMismatch {
                    expected: layout.len(),
                    found: centroid.len(),
                });
            }
            let mut svg = svg_open(layout.width, layout.height);
            let cx = layout.width / 2.0;
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"16.000000\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">Cluster {c} (n={})</text>",
                num(cx),
                sizes.get(c).copied().unwrap_or(0)
            );
            let stem_bottom = GrapeLayout::TITLE + GrapeLayout::STEM;
            let _ = writeln!(
                svg,
                "<line x1=\"{x}\" y1=\"{}\" x2=\"{x}\" y2=\"{}\" stroke=\"#6b4f2a\" stroke-width=\"3.000000\"/>",
                num(GrapeLayout::TITLE),
                num(stem_bottom),
                x = num(cx)
            );
            for ((code, &(x, y)), &p) in layout.codes.iter().zip(&layout.positions).zip(centroid) {
                let color = grape_color(p.clamp(0.0, 1.0), scale)?;
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\" stroke=\"#333333\" stroke-width=\"0.500000\"><title>{}: {}</title></circle>",
                    num(x),
                    num(y),
                    num(layout.radius),
                    color.hex(),
                    escape(code),
                    num(p)
                );
            }
            svg.push_str("</svg>\n");
            Ok(ChartDocument {
                name: format!("grapeshape_cluster_{c}.svg"),
                svg,
            })
        })
        .collect()
}
