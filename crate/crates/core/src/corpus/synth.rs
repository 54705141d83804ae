use serde::{Deserialize, Serialize};

use super::matrix::{QuestionMeta, ResponseMatrix};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Bernoulli mixture used to generate synthetic questionnaires.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub weights: Vec<f64>,
    /// One row of per-answer "yes" probabilities per component.
    pub probs: Vec<Vec<f64>>,
    pub n_rows: usize,
    pub seed: u64,
    /// Question group per column; defaults to one group per column.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<u32>>,
}

impl MixtureSpec {
    pub fn n_cols(&self) -> usize {
        self.probs.first().map_or(0, Vec::len)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.n_rows == 0 {
            return bad("n_rows must be positive".into());
        }
        if self.weights.is_empty() || self.probs.is_empty() {
            return bad("no mixture components".into());
        }
        if self.weights.len() != self.probs.len() {
            return bad(format!(
                "{} weights for {} components",
                self.weights.len(),
                self.probs.len()
            ));
        }
        if self.weights.iter().any(|w| w.is_nan() || *w < 0.0) {
            return bad("weights must be nonnegative".into());
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {total}, not 1"));
        }
        let m = self.n_cols();
        if m == 0 {
            return bad("components have no columns".into());
        }
        for (c, row) in self.probs.iter().enumerate() {
            if row.len() != m {
                return bad(format!(
                    "component {c} has {} columns, expected {m}",
                    row.len()
                ));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return bad(format!("component {c} has a probability outside [0, 1]"));
            }
        }
        if let Some(groups) = &self.groups {
            if groups.len() != m || groups.contains(&0) {
                return bad("groups must list one positive id per column".into());
            }
        }
        Ok(())
    }

    fn questions(&self) -> Vec<QuestionMeta> {
        (0..self.n_cols())
            .map(|j| {
                let group = self.groups.as_ref().map_or(j as u32 + 1, |g| g[j]);
                QuestionMeta::new(
                    format!("Q{}", j + 1),
                    group,
                    format!("synthetic answer {}", j + 1),
                )
            })
            .collect()
    }
}

/// Draws `n_rows` respondents from the mixture.
///
/// Per row: one uniform draw picks the component by cumulative weight, then one
/// uniform draw per column yields `1` when it falls below the component probability.
/// Respondents are named `r1`, `r2`, ...
pub fn synth_mixture(spec: &MixtureSpec) -> Result<(ResponseMatrix, Vec<usize>)> {
    spec.check()?;
    let mut rng = SeededRng::new(spec.seed);
    let m = spec.n_cols();
    let k = spec.weights.len();
    let mut labels = Vec::with_capacity(spec.n_rows);
    let mut cells = Vec::with_capacity(spec.n_rows * m);
    for _ in 0..spec.n_rows {
        let u = rng.next_f64();
        let mut acc = 0.0;
        let mut component = k - 1;
        for (c, w) in spec.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                component = c;
                break;
            }
        }
        labels.push(component);
        for &p in &spec.probs[component] {
            cells.push(u8::from(rng.next_f64() < p));
        }
    }
    let ids = (1..=spec.n_rows).map(|i| format!("r{i}")).collect();
    let matrix = ResponseMatrix::new(ids, spec.questions(), cells)?;
    Ok((matrix, labels))
}
