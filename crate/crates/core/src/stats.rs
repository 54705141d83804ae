//! Per-answer Bernoulli statistics, conditional proportions and proportion tests.

use std::io::Write;

use serde::Serialize;
use statrs::function::erf::{erf_inv, erfc};

use crate::corpus::ResponseMatrix;
use crate::error::{Error, Result};

/// Yes/no counts of one answer column and its Bernoulli variance `T·F/N²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionStats {
    pub code: String,
    pub yes: usize,
    pub no: usize,
    pub total: usize,
    pub p: f64,
    pub variance: f64,
}

impl QuestionStats {
    pub fn from_counts(code: impl Into<String>, yes: usize, total: usize) -> Self {
        debug_assert!(yes <= total && total > 0);
        let no = total - yes;
        let n = total as f64;
        Self {
            code: code.into(),
            yes,
            no,
            total,
            p: yes as f64 / n,
            variance: (yes as f64 * no as f64) / (n * n),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.yes == 0 || self.no == 0
    }
}

pub fn bernoulli_stats(matrix: &ResponseMatrix, code: &str) -> Result<QuestionStats> {
    let j = matrix.column_index(code)?;
    Ok(column_stats(matrix, j))
}

pub(crate) fn column_stats(matrix: &ResponseMatrix, j: usize) -> QuestionStats {
    let yes = matrix.rows().filter(|r| r[j] == 1).count();
    QuestionStats::from_counts(&matrix.questions()[j].code, yes, matrix.n_rows())
}

/// Stats for every column, in matrix column order.
pub fn all_stats(matrix: &ResponseMatrix) -> Vec<QuestionStats> {
    (0..matrix.n_cols())
        .map(|j| column_stats(matrix, j))
        .collect()
}

/// Columns ordered by decreasing variance, ties by ascending code.
pub fn rank_by_variance(matrix: &ResponseMatrix) -> Vec<QuestionStats> {
    let mut stats = all_stats(matrix);
    stats.sort_by(|a, b| {
        b.variance
            .total_cmp(&a.variance)
            .then_with(|| a.code.cmp(&b.code))
    });
    stats
}

pub fn write_stats_csv<W: Write>(stats: &[QuestionStats], out: &mut W) -> std::io::Result<()> {
    writeln!(out, "code,T,F,N,p,variance")?;
    for s in stats {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6}",
            s.code, s.yes, s.no, s.total, s.p, s.variance
        )?;
    }
    Ok(())
}

/// Proportion of answer A overall and within the B=1 and B=0 strata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalStats {
    pub a_code: String,
    pub b_code: String,
    pub n: usize,
    pub n_b: usize,
    pub n_a: usize,
    pub n_ab: usize,
    pub p_a: f64,
    pub p_a_given_b: f64,
    pub p_a_given_not_b: f64,
}

impl ConditionalStats {
    /// Builds the proportions from contingency counts: `n` rows, `n_b` with B=1,
    /// `n_a` with A=1 and `n_ab` with both.
    pub fn from_counts(
        a_code: impl Into<String>,
        b_code: impl Into<String>,
        n: usize,
        n_b: usize,
        n_a: usize,
        n_ab: usize,
    ) -> Result<Self> {
        let b_code = b_code.into();
        if n_b > n || n_a > n || n_ab > n_b || n_ab > n_a || n_a - n_ab > n - n_b {
            return Err(Error::Shape(format!(
                "inconsistent counts n={n} n_b={n_b} n_a={n_a} n_ab={n_ab}"
            )));
        }
        if n_b == 0 {
            return Err(Error::EmptyStratum {
                code: b_code,
                stratum: "yes",
            });
        }
        if n_b == n {
            return Err(Error::EmptyStratum {
                code: b_code,
                stratum: "no",
            });
        }
        Ok(Self {
            a_code: a_code.into(),
            b_code,
            n,
            n_b,
            n_a,
            n_ab,
            p_a: n_a as f64 / n as f64,
            p_a_given_b: n_ab as f64 / n_b as f64,
            p_a_given_not_b: (n_a - n_ab) as f64 / (n - n_b) as f64,
        })
    }

    pub fn n_not_b(&self) -> usize {
        self.n - self.n_b
    }
}

/// Proportion of `a` among respondents answering yes (and no) to `b`.
pub fn conditional_stats(matrix: &ResponseMatrix, a: &str, b: &str) -> Result<ConditionalStats> {
    if a == b {
        return Err(Error::SameCode(a.to_string()));
    }
    let ja = matrix.column_index(a)?;
    let jb = matrix.column_index(b)?;
    conditional_by_index(matrix, ja, jb)
}

pub(crate) fn conditional_by_index(
    matrix: &ResponseMatrix,
    ja: usize,
    jb: usize,
) -> Result<ConditionalStats> {
    let (mut n_a, mut n_b, mut n_ab) = (0, 0, 0);
    for r in matrix.rows() {
        let (x, y) = (r[ja] == 1, r[jb] == 1);
        n_a += usize::from(x);
        n_b += usize::from(y);
        n_ab += usize::from(x && y);
    }
    let qs = matrix.questions();
    ConditionalStats::from_counts(&qs[ja].code, &qs[jb].code, matrix.n_rows(), n_b, n_a, n_ab)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub z: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Standard normal CDF, `Φ(x) = erfc(-x/√2)/2`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Two-sided tail mass `2·(1 − Φ(|z|))`.
pub fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0)
}

/// Critical value `z_{alpha/2}` of a two-sided test.
pub fn z_critical(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(std::f64::consts::SQRT_2 * erf_inv(1.0 - alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn check_proportion(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProportion(p))
    }
}

/// One-sample z-test of an observed proportion against a baseline.
///
/// `z = (p_hat − p0) / sqrt(p0(1 − p0)/n)`; undefined when `p0` is 0 or 1.
pub fn proportion_ztest(p0: f64, p_hat: f64, n: usize, alpha: f64) -> Result<TestResult> {
    check_alpha(alpha)?;
    check_proportion(p_hat)?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::UndefinedTest(p0));
    }
    if n == 0 {
        return Err(Error::Shape("test needs a nonempty stratum".into()));
    }
    let z = (p_hat - p0) / (p0 * (1.0 - p0) / n as f64).sqrt();
    let p_value = two_sided_p(z);
    Ok(TestResult {
        z,
        p_value,
        significant: p_value < alpha,
    })
}

/// Half-width of the normal-approximation confidence interval around `p_hat`.
pub fn ci_margin(p_hat: f64, n: usize, alpha: f64) -> Result<f64> {
    check_proportion(p_hat)?;
    if n == 0 {
        return Err(Error::Shape("margin needs a nonempty stratum".into()));
    }
    Ok(z_critical(alpha)? * (p_hat * (1.0 - p_hat) / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::QuestionMeta;

    fn matrix(columns: &[Vec<u8>]) -> ResponseMatrix {
        let n = columns[0].len();
        let qs = (0..columns.len())
            .map(|j| QuestionMeta::new(format!("C{j}"), j as u32 + 1, "c"))
            .collect();
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        ResponseMatrix::from_rows((0..n).map(|i| format!("r{i}")).collect(), qs, &rows).unwrap()
    }

    #[test]
    fn variance_examples() {
        let m = matrix(&[vec![1, 1, 0, 0, 0], vec![1, 0, 1, 0, 0], vec![0; 5]]);
        let s = bernoulli_stats(&m, "C0").unwrap();
        assert_eq!((s.yes, s.no, s.total), (2, 3, 5));
        assert!((s.p - 0.4).abs() < 1e-15);
        assert!((s.variance - 0.24).abs() < 1e-15);
        let z = bernoulli_stats(&m, "C2").unwrap();
        assert_eq!((z.p, z.variance), (0.0, 0.0));
        assert!(bernoulli_stats(&m, "nope").is_err());

        let half = matrix(&[vec![1, 0, 1, 0]]);
        assert_eq!(bernoulli_stats(&half, "C0").unwrap().variance, 0.25);
    }

    #[test]
    fn ranking_with_ties() {
        // p = 0.5, 0.1, 0.9 on 10 rows
        let mut c0 = vec![0; 10];
        c0[..5].fill(1);
        let mut c1 = vec![0; 10];
        c1[0] = 1;
        let mut c2 = vec![1; 10];
        c2[0] = 0;
        let m = matrix(&[c2, c1, c0]);
        let ranked = rank_by_variance(&m);
        let codes: Vec<_> = ranked.iter().map(|s| s.code.as_str()).collect();
        assert_eq!(codes, ["C2", "C0", "C1"]);
        assert_eq!(ranked[1].variance, ranked[2].variance);

        let single = matrix(&[vec![0, 1]]);
        assert_eq!(rank_by_variance(&single).len(), 1);
        let twins = matrix(&[vec![0, 1, 1], vec![0, 1, 1]]);
        let codes: Vec<_> = rank_by_variance(&twins)
            .into_iter()
            .map(|s| s.code)
            .collect();
        assert_eq!(codes, ["C0", "C1"]);
    }

    #[test]
    fn conditional_counts() {
        // A yes in 5, B yes in 4, A and B in 3
        let a = vec![1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
        let b = vec![1, 1, 1, 0, 0, 1, 0, 0, 0, 0];
        let m = matrix(&[a.clone(), b]);
        let c = conditional_stats(&m, "C0", "C1").unwrap();
        assert_eq!(c.p_a, 0.5);
        assert_eq!(c.p_a_given_b, 0.75);
        assert!((c.p_a_given_not_b - 2.0 / 6.0).abs() < 1e-15);

        let same = matrix(&[a.clone(), a.clone()]);
        let c = conditional_stats(&same, "C0", "C1").unwrap();
        assert_eq!((c.p_a_given_b, c.p_a_given_not_b), (1.0, 0.0));

        let ones = matrix(&[a, vec![1; 10]]);
        assert!(matches!(
            conditional_stats(&ones, "C0", "C1"),
            Err(Error::EmptyStratum { stratum: "no", .. })
        ));
        assert!(matches!(
            conditional_stats(&ones, "C0", "C0"),
            Err(Error::SameCode(_))
        ));
    }

    #[test]
    fn ztest_examples() {
        let t = proportion_ztest(0.5, 0.75, 16, 0.05).unwrap();
        assert!((t.z - 2.0).abs() < 1e-12);
        assert!((t.p_value - 0.0455).abs() < 5e-4);
        assert!(t.significant);

        let t = proportion_ztest(0.3, 0.3, 40, 0.05).unwrap();
        assert_eq!((t.z, t.p_value, t.significant), (0.0, 1.0, false));

        assert!(matches!(
            proportion_ztest(0.0, 0.3, 10, 0.05),
            Err(Error::UndefinedTest(_))
        ));
        assert!(proportion_ztest(1.0, 0.3, 10, 0.05).is_err());
    }

    #[test]
    fn normal_tail_reference_values() {
        // two-sided tail at 1.959964 is 0.05; at 2.0 is 0.0455003
        assert!((two_sided_p(1.959_963_984_540_054) - 0.05).abs() < 1e-9);
        assert!((two_sided_p(2.0) - 0.045_500_263_896_358_4).abs() < 1e-9);
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((z_critical(0.05).unwrap() - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn margin_examples() {
        assert!((ci_margin(0.5, 100, 0.05).unwrap() - 0.098).abs() < 1e-3);
        assert_eq!(ci_margin(0.0, 100, 0.05).unwrap(), 0.0);
        assert_eq!(ci_margin(1.0, 7, 0.05).unwrap(), 0.0);
        assert!((ci_margin(0.5, 400, 0.05).unwrap() - 0.049).abs() < 1e-3);
    }
}
