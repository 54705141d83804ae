use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{escape, num, svg_open, ChartDocument};
use crate::error::{Error, Result};
use crate::stats::{ci_margin, z_critical, ConditionalStats};

/// How the half-width of the margin sectors around the conditional lines is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginMode {
    /// `z_{α/2}·sqrt(p(A)(1 − p(A))/n_stratum)`: the acceptance region of the
    /// one-sample proportion test, so the black divider falls outside a margin
    /// exactly when that test is significant.
    #[default]
    TestAcceptance,
    /// `z_{α/2}·sqrt(p̂(1 − p̂)/n_stratum)` around the stratum proportion `p̂`.
    Wald,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfPieSpec {
    pub cond: ConditionalStats,
    pub alpha: f64,
    pub radius: f64,
    pub margin: MarginMode,
}

impl HalfPieSpec {
    pub fn new(cond: ConditionalStats, alpha: f64) -> Self {
        Self {
            cond,
            alpha,
            radius: 160.0,
            margin: MarginMode::default(),
        }
    }
}

/// Angular interval in degrees, measured from the left end of the baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sector {
    pub start: f64,
    pub end: f64,
}

impl Sector {
    pub fn contains(&self, angle: f64) -> bool {
        self.start <= angle && angle <= self.end
    }
}

/// Angles of every element of a HalfPie chart, in degrees from the left baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfPieGeometry {
    pub orange: Sector,
    pub blue: Sector,
    pub divider: f64,
    pub given_b: f64,
    /// Unclamped margin half-width around `given_b`.
    pub given_b_half_width: f64,
    pub given_b_margin: Sector,
    pub given_not_b: f64,
    pub given_not_b_half_width: f64,
    pub given_not_b_margin: Sector,
}

fn margin_sector(center: f64, half_width: f64) -> Sector {
    Sector {
        start: (center - half_width).clamp(0.0, 180.0),
        end: (center + half_width).clamp(0.0, 180.0),
    }
}

impl HalfPieGeometry {
    pub fn compute(spec: &HalfPieSpec) -> Result<Self> {
        let c = &spec.cond;
        if c.n_b == 0 || c.n_b >= c.n {
            return Err(Error::EmptyStratum {
                code: c.b_code.clone(),
                stratum: if c.n_b == 0 { "yes" } else { "no" },
            });
        }
        let half_width = |p_hat: f64, n: usize| -> Result<f64> {
            let proportion = match spec.margin {
                MarginMode::TestAcceptance => {
                    z_critical(spec.alpha)? * (c.p_a * (1.0 - c.p_a) / n as f64).sqrt()
                }
                MarginMode::Wald => ci_margin(p_hat, n, spec.alpha)?,
            };
            Ok(180.0 * proportion)
        };
        let divider = 180.0 * c.p_a;
        let given_b = 180.0 * c.p_a_given_b;
        let given_not_b = 180.0 * c.p_a_given_not_b;
        let hw_b = half_width(c.p_a_given_b, c.n_b)?;
        let hw_not_b = half_width(c.p_a_given_not_b, c.n_not_b())?;
        Ok(Self {
            orange: Sector {
                start: 0.0,
                end: divider,
            },
            blue: Sector {
                start: divider,
                end: 180.0,
            },
            divider,
            given_b,
            given_b_half_width: hw_b,
            given_b_margin: margin_sector(given_b, hw_b),
            given_not_b,
            given_not_b_half_width: hw_not_b,
            given_not_b_margin: margin_sector(given_not_b, hw_not_b),
        })
    }

    /// Whether the black divider lies strictly outside the B=1 margin sector.
    pub fn divider_outside_given_b(&self) -> bool {
        !self.given_b_margin.contains(self.divider)
    }

    pub fn divider_outside_given_not_b(&self) -> bool {
        !self.given_not_b_margin.contains(self.divider)
    }
}

struct Canvas {
    cx: f64,
    cy: f64,
    r: f64,
}

impl Canvas {
    fn point(&self, angle: f64, radius: f64) -> (f64, f64) {
        let t = angle.to_radians();
        (self.cx - radius * t.cos(), self.cy - radius * t.sin())
    }

    fn sector(&self, s: Sector, fill: &str, opacity: f64, out: &mut String) {
        if s.end - s.start <= 0.0 {
            return;
        }
        let (x0, y0) = self.point(s.start, self.r);
        let (x1, y1) = self.point(s.end, self.r);
        let _ = writeln!(
            out,
            "<path d=\"M {} {} L {} {} A {r} {r} 0 0 1 {} {} Z\" fill=\"{fill}\" fill-opacity=\"{}\"/>",
            num(self.cx),
            num(self.cy),
            num(x0),
            num(y0),
            num(x1),
            num(y1),
            num(opacity),
            r = num(self.r)
        );
    }

    fn ray(&self, angle: f64, stroke: &str, width: f64, out: &mut String) {
        let (x, y) = self.point(angle, self.r);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\" stroke-width=\"{}\"/>",
            num(self.cx),
            num(self.cy),
            num(x),
            num(y),
            num(width)
        );
    }
}

pub const ORANGE: &str = "#f28e2b";
pub const BLUE: &str = "#4e79a7";
pub const BLACK: &str = "#000000";
pub const TURQUOISE: &str = "#30d5c8";
pub const MAGENTA: &str = "#ff00ff";

/// Semicircle split into the A=yes (orange) and A=no (blue) shares, with the
/// overall divider in black, the A|B=1 line in turquoise and the A|B=0 line in
/// magenta, each conditional line flanked by a semi-transparent margin sector.
pub fn render_halfpie(spec: &HalfPieSpec) -> Result<ChartDocument> {
    let g = HalfPieGeometry::compute(spec)?;
    let c = &spec.cond;
    let pad = 20.0;
    let r = spec.radius;
    let width = 2.0 * r + 2.0 * pad;
    let height = r + 2.0 * pad + 80.0;
    let canvas = Canvas {
        cx: width / 2.0,
        cy: pad + 30.0 + r,
        r,
    };
    let mut svg = svg_open(width, height);
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"24.000000\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{} given {}</text>",
        num(canvas.cx),
        escape(&c.a_code),
        escape(&c.b_code)
    );
    canvas.sector(g.orange, ORANGE, 1.0, &mut svg);
    canvas.sector(g.blue, BLUE, 1.0, &mut svg);
    canvas.sector(g.given_b_margin, TURQUOISE, 0.35, &mut svg);
    canvas.sector(g.given_not_b_margin, MAGENTA, 0.35, &mut svg);
    canvas.ray(g.divider, BLACK, 2.0, &mut svg);
    canvas.ray(g.given_b, TURQUOISE, 2.0, &mut svg);
    canvas.ray(g.given_not_b, MAGENTA, 2.0, &mut svg);

    let legend = [
        (BLACK, format!("P({}) = {}", c.a_code, num(c.p_a))),
        (
            TURQUOISE,
            format!(
                "P({} | {}) = {} (n={})",
                c.a_code,
                c.b_code,
                num(c.p_a_given_b),
                c.n_b
            ),
        ),
        (
            MAGENTA,
            format!(
                "P({} | not {}) = {} (n={})",
                c.a_code,
                c.b_code,
                num(c.p_a_given_not_b),
                c.n_not_b()
            ),
        ),
    ];
    for (i, (color, text)) in legend.iter().enumerate() {
        let y = canvas.cy + 22.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"10.000000\" height=\"10.000000\" fill=\"{color}\"/>",
            num(pad),
            num(y - 9.0)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
            num(pad + 16.0),
            num(y),
            escape(text)
        );
    }
    svg.push_str("</svg>\n");
    Ok(ChartDocument {
        name: format!("halfpie_{}_{}.svg", c.b_code, c.a_code),
        svg,
    })
}
