use std::collections::HashMap;

use super::matrix::{QuestionMeta, ResponseMatrix};
use crate::error::{Error, Result};

/// One-hot encodes a single-choice question into one binary column per option.
///
/// `choices` pairs each respondent with the selected option index, or `None`
/// when the respondent selected nothing. Respondents keep their first-seen order.
pub fn encode_categorical(
    choices: &[(String, Option<usize>)],
    options: &[QuestionMeta],
) -> Result<ResponseMatrix> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for (id, choice) in choices {
        *counts.entry(id.as_str()).or_default() += usize::from(choice.is_some());
    }

    let k = options.len();
    let mut ids = Vec::new();
    let mut cells = Vec::new();
    for (id, choice) in choices {
        let count = counts[id.as_str()];
        if count != 1 {
            return Err(Error::SelectionCount {
                respondent: id.clone(),
                count,
            });
        }
        let Some(index) = *choice else { continue };
        if index >= k {
            return Err(Error::OptionOutOfRange {
                respondent: id.clone(),
                index,
                options: k,
            });
        }
        ids.push(id.clone());
        cells.extend((0..k).map(|j| u8::from(j == index)));
    }
    ResponseMatrix::new(ids, options.to_vec(), cells)
}
