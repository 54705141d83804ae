use std::fmt::Write as _;

use super::{escape, num, svg_open, ChartDocument};
use crate::error::{Error, Result};

/// One series of bars, e.g. the cluster shares of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct BarGroup {
    pub label: String,
    /// One value in `[0, 1]` per category.
    pub values: Vec<f64>,
}

const PALETTE: [&str; 6] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1",
];

/// Grouped vertical bars: one cluster of bars per category, one bar per series.
pub fn render_segment_bars(
    name: &str,
    title: &str,
    categories: &[String],
    series: &[BarGroup],
) -> Result<ChartDocument> {
    if categories.is_empty() || series.is_empty() {
        return Err(Error::Shape("bar chart needs categories and series".into()));
    }
    for s in series {
        if s.values.len() != categories.len() {
            return Err(Error::DimensionMismatch {
                expected: categories.len(),
                found: s.values.len(),
            });
        }
        if let Some(&v) = s.values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidProportion(v));
        }
    }
    let bar = 18.0;
    let gap = 14.0;
    let left = 50.0;
    let top = 40.0;
    let plot_h = 200.0;
    let group_w = bar * series.len() as f64 + gap;
    let legend_h = 18.0 * series.len() as f64;
    let width = left + group_w * categories.len() as f64 + 20.0;
    let height = top + plot_h + 30.0 + legend_h + 10.0;
    let base = top + plot_h;

    let mut svg = svg_open(width, height);
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24.000000\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>",
        num(width / 2.0),
        escape(title)
    );
    for tick in 0..=4 {
        let v = tick as f64 / 4.0;
        let y = base - v * plot_h;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#dddddd\"/>\n<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">{}%</text>",
            num(left),
            num(width - 20.0),
            num(left - 4.0),
            num(y + 3.0),
            tick * 25,
            y = num(y)
        );
    }
    for (c, category) in categories.iter().enumerate() {
        let x0 = left + gap / 2.0 + group_w * c as f64;
        for (s, group) in series.iter().enumerate() {
            let v = group.values[c];
            let h = v * plot_h;
            let _ = writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"><title>{} {}: {}</title></rect>",
                num(x0 + bar * s as f64),
                num(base - h),
                num(bar),
                num(h),
                PALETTE[s % PALETTE.len()],
                escape(&group.label),
                escape(category),
                num(v)
            );
        }
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            num(x0 + bar * series.len() as f64 / 2.0),
            num(base + 16.0),
            escape(category)
        );
    }
    for (s, group) in series.iter().enumerate() {
        let y = base + 34.0 + 18.0 * s as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"10.000000\" height=\"10.000000\" fill=\"{}\"/>\n<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            num(left),
            num(y - 9.0),
            PALETTE[s % PALETTE.len()],
            num(left + 16.0),
            num(y),
            escape(&group.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(ChartDocument {
        name: name.to_string(),
        svg,
    })
}
