#![allow(dead_code)]

use binquest_core::corpus::{QuestionMeta, ResponseMatrix};
use proptest::prelude::*;

pub fn codes(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("Q{j}")).collect()
}

/// Matrix with ids `r0..`, codes `Q0..` and the given group per column
/// (one group per column when `groups` is `None`).
pub fn matrix(rows: &[Vec<u8>], groups: Option<&[u32]>) -> ResponseMatrix {
    let m = rows.first().map_or(0, Vec::len);
    let questions = codes(m)
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let g = groups.map_or(j as u32 + 1, |g| g[j]);
            QuestionMeta::new(c.clone(), g, c)
        })
        .collect();
    let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
    ResponseMatrix::from_rows(ids, questions, rows).unwrap()
}

/// Random 0/1 rows with `n` rows and `m` columns drawn from the given ranges.
pub fn binary_rows(
    n: std::ops::RangeInclusive<usize>,
    m: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Vec<Vec<u8>>> {
    (n, m).prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(0u8..=1, m), n))
}
