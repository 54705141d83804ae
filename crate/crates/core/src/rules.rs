//! Pairwise rule mining with the signed conversion rate.
//!
//! For an antecedent answer B and a consequent answer A, the conversion rate
//! measures how far P(A|B) moves from P(A), normalized by the room available in
//! that direction: `(P(A|B) − P(A)) / (1 − P(A))` for an increase and
//! `(P(A|B) − P(A)) / P(A)` for a decrease. It lies in `[−1, 1]`.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::ResponseMatrix;
use crate::error::{Error, Result};
use crate::stats::{conditional_by_index, proportion_ztest, ConditionalStats, TestResult};

pub fn conversion_rate(p_a: f64, p_a_given_b: f64) -> Result<f64> {
    for p in [p_a, p_a_given_b] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProportion(p));
        }
    }
    let undefined = || Error::UndefinedConversion { p_a, p_a_given_b };
    if p_a_given_b > p_a {
        if p_a >= 1.0 {
            return Err(undefined());
        }
        Ok((p_a_given_b - p_a) / (1.0 - p_a))
    } else if p_a_given_b < p_a {
        if p_a <= 0.0 {
            return Err(undefined());
        }
        Ok((p_a_given_b - p_a) / p_a)
    } else {
        Ok(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rule {
    pub b_code: String,
    pub a_code: String,
    pub cond: ConditionalStats,
    pub conversion_rate: f64,
    /// Raw change `P(A|B) − P(A)`.
    pub difference: f64,
    /// Respondents answering yes to B.
    pub support: usize,
    pub test: TestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiningConfig {
    pub alpha: f64,
    pub min_abs_conversion: f64,
    pub min_support: usize,
    pub cross_group_only: bool,
    /// Unordered answer pairs never reported, in either direction.
    pub exclusion_pairs: BTreeSet<(String, String)>,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            min_abs_conversion: 0.05,
            min_support: 30,
            cross_group_only: true,
            exclusion_pairs: BTreeSet::new(),
        }
    }
}

impl MiningConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if !(0.0..=1.0).contains(&self.min_abs_conversion) {
            return Err(Error::InvalidProportion(self.min_abs_conversion));
        }
        if self.min_support < 1 {
            return Err(Error::InvalidClusterConfig(
                "min_support must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn is_excluded(&self, a: &str, b: &str) -> bool {
        let (a, b) = (a.to_string(), b.to_string());
        self.exclusion_pairs.contains(&(a.clone(), b.clone()))
            || self.exclusion_pairs.contains(&(b, a))
    }
}

/// How many ordered pairs each filter removed, first failing filter only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MiningSummary {
    pub pairs_evaluated: usize,
    pub empty_stratum: usize,
    pub constant_consequent: usize,
    pub same_group: usize,
    pub excluded: usize,
    pub low_conversion: usize,
    pub low_support: usize,
    pub not_significant: usize,
    pub retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MiningResult {
    pub rules: Vec<Rule>,
    pub summary: MiningSummary,
}

/// Evaluates every ordered answer pair `B → A` and keeps those passing all filters.
///
/// Rules are sorted by decreasing `|conversion rate|`, then by `(b_code, a_code)`.
pub fn mine_rules(matrix: &ResponseMatrix, config: &MiningConfig) -> Result<MiningResult> {
    config.check()?;
    let qs = matrix.questions();
    let m = matrix.n_cols();
    let mut summary = MiningSummary::default();
    let mut rules = Vec::new();
    for jb in 0..m {
        for ja in 0..m {
            if ja == jb {
                continue;
            }
            summary.pairs_evaluated += 1;
            let cond = match conditional_by_index(matrix, ja, jb) {
                Ok(c) => c,
                Err(_) => {
                    summary.empty_stratum += 1;
                    continue;
                }
            };
            if cond.n_a == 0 || cond.n_a == cond.n {
                summary.constant_consequent += 1;
                continue;
            }
            if config.cross_group_only && qs[ja].group_id == qs[jb].group_id {
                summary.same_group += 1;
                continue;
            }
            if config.is_excluded(&qs[ja].code, &qs[jb].code) {
                summary.excluded += 1;
                continue;
            }
            let cr = conversion_rate(cond.p_a, cond.p_a_given_b)?;
            if cr.abs() < config.min_abs_conversion {
                summary.low_conversion += 1;
                continue;
            }
            if cond.n_b < config.min_support {
                summary.low_support += 1;
                continue;
            }
            let test = proportion_ztest(cond.p_a, cond.p_a_given_b, cond.n_b, config.alpha)?;
            if !test.significant {
                summary.not_significant += 1;
                continue;
            }
            rules.push(Rule {
                b_code: cond.b_code.clone(),
                a_code: cond.a_code.clone(),
                support: cond.n_b,
                difference: cond.p_a_given_b - cond.p_a,
                conversion_rate: cr,
                test,
                cond,
            });
        }
    }
    rules.sort_by(|x, y| {
        y.conversion_rate
            .abs()
            .total_cmp(&x.conversion_rate.abs())
            .then_with(|| x.b_code.cmp(&y.b_code))
            .then_with(|| x.a_code.cmp(&y.a_code))
    });
    summary.retained = rules.len();
    Ok(MiningResult { rules, summary })
}

/// Sentence form, e.g. `Those who answer Q5F (support: 187) respond more
/// frequently Q4F (conversion rate 46.8%)`.
pub fn format_rule(rule: &Rule) -> String {
    let direction = if rule.conversion_rate < 0.0 {
        "less"
    } else {
        "more"
    };
    format!(
        "Those who answer {} (support: {}) respond {} frequently {} (conversion rate {:.1}%)",
        rule.b_code,
        rule.support,
        direction,
        rule.a_code,
        rule.conversion_rate * 100.0
    )
}

/// Columns `b_code,a_code,p_A,p_A_given_B,conversion_rate,support,z,p_value`.
pub fn write_rules_csv<W: Write>(rules: &[Rule], out: &mut W) -> std::io::Result<()> {
    writeln!(
        out,
        "b_code,a_code,p_A,p_A_given_B,conversion_rate,support,z,p_value"
    )?;
    for r in rules {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{},{:.6},{:.6}",
            r.b_code,
            r.a_code,
            r.cond.p_a,
            r.cond.p_a_given_b,
            r.conversion_rate,
            r.support,
            r.test.z,
            r.test.p_value
        )?;
    }
    Ok(())
}

pub fn write_rules_report<W: Write>(rules: &[Rule], out: &mut W) -> std::io::Result<()> {
    for r in rules {
        writeln!(out, "{}", format_rule(r))?;
    }
    Ok(())
}
