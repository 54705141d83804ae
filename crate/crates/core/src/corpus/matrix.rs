use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One binary answer column: a code such as `Q1A`, its question group and a label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionMeta {
    pub code: String,
    #[serde(rename = "group")]
    pub group_id: u32,
    pub label: String,
}

impl QuestionMeta {
    pub fn new(code: impl Into<String>, group_id: u32, label: impl Into<String>) -> Self {
        Self {
            code: code.into(),
            group_id,
            label: label.into(),
        }
    }
}

/// Respondents by binary answers, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    respondent_ids: Vec<String>,
    questions: Vec<QuestionMeta>,
    cells: Vec<u8>,
}

impl ResponseMatrix {
    /// Builds a matrix and checks every invariant.
    pub fn new(
        respondent_ids: Vec<String>,
        questions: Vec<QuestionMeta>,
        cells: Vec<u8>,
    ) -> Result<Self> {
        let matrix = Self::from_raw(respondent_ids, questions, cells)?;
        if let Some(err) = matrix.first_violation() {
            return Err(err);
        }
        Ok(matrix)
    }

    /// Builds a matrix checking only that the cell count fits the shape.
    /// Use [`crate::corpus::validate`] to inspect the remaining invariants.
    pub fn from_raw(
        respondent_ids: Vec<String>,
        questions: Vec<QuestionMeta>,
        cells: Vec<u8>,
    ) -> Result<Self> {
        let expected = respondent_ids.len() * questions.len();
        if cells.len() != expected {
            return Err(Error::Shape(format!(
                "{} rows x {} columns needs {} cells, got {}",
                respondent_ids.len(),
                questions.len(),
                expected,
                cells.len()
            )));
        }
        Ok(Self {
            respondent_ids,
            questions,
            cells,
        })
    }

    /// Builds a matrix from row vectors.
    pub fn from_rows(
        respondent_ids: Vec<String>,
        questions: Vec<QuestionMeta>,
        rows: &[Vec<u8>],
    ) -> Result<Self> {
        if rows.len() != respondent_ids.len() {
            return Err(Error::Shape(format!(
                "{} ids for {} rows",
                respondent_ids.len(),
                rows.len()
            )));
        }
        let mut cells = Vec::with_capacity(rows.len() * questions.len());
        for row in rows {
            if row.len() != questions.len() {
                return Err(Error::DimensionMismatch {
                    expected: questions.len(),
                    found: row.len(),
                });
            }
            cells.extend_from_slice(row);
        }
        Self::new(respondent_ids, questions, cells)
    }

    pub(crate) fn first_violation(&self) -> Option<Error> {
        if self.respondent_ids.is_empty() || self.questions.is_empty() {
            return Some(Error::EmptyMatrix);
        }
        let mut seen = HashSet::new();
        for (row, id) in self.respondent_ids.iter().enumerate() {
            if !seen.insert(id.as_str()) {
                return Some(Error::DuplicateId {
                    id: id.clone(),
                    row: row + 1,
                });
            }
        }
        let mut codes = HashSet::new();
        for q in &self.questions {
            if !codes.insert(q.code.as_str()) {
                return Some(Error::DuplicateCode(q.code.clone()));
            }
            if let Some(message) = question_problem(q) {
                return Some(Error::InvalidQuestion {
                    code: q.code.clone(),
                    message,
                });
            }
        }
        let m = self.questions.len();
        for (idx, &v) in self.cells.iter().enumerate() {
            if v > 1 {
                let row = idx / m;
                return Some(Error::InvalidCell {
                    row: row + 1,
                    id: self.respondent_ids[row].clone(),
                    column: self.questions[idx % m].code.clone(),
                    value: v.to_string(),
                });
            }
        }
        None
    }

    pub fn n_rows(&self) -> usize {
        self.respondent_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.questions.len()
    }

    pub fn respondent_ids(&self) -> &[String] {
        &self.respondent_ids
    }

    pub fn questions(&self) -> &[QuestionMeta] {
        &self.questions
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.questions.iter().map(|q| q.code.as_str())
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[u8] {
        let m = self.n_cols();
        &self.cells[row * m..(row + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u8]> {
        self.cells.chunks_exact(self.n_cols())
    }

    pub fn column(&self, col: usize) -> Vec<u8> {
        self.rows().map(|r| r[col]).collect()
    }

    pub fn column_index(&self, code: &str) -> Result<usize> {
        self.questions
            .iter()
            .position(|q| q.code == code)
            .ok_or_else(|| Error::UnknownCode(code.to_string()))
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.respondent_ids.iter().position(|r| r == id)
    }

    /// Keeps the named columns, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, codes: &[S]) -> Result<ResponseMatrix> {
        let idx = codes
            .iter()
            .map(|c| self.column_index(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let questions = idx.iter().map(|&j| self.questions[j].clone()).collect();
        let cells = self
            .rows()
            .flat_map(|r| idx.iter().map(move |&j| r[j]))
            .collect();
        ResponseMatrix::new(self.respondent_ids.clone(), questions, cells)
    }

    /// Appends the columns of `other`; both matrices must list the same respondents in order.
    pub fn concat_columns(&self, other: &ResponseMatrix) -> Result<ResponseMatrix> {
        if self.respondent_ids != other.respondent_ids {
            return Err(Error::Shape(
                "matrices list different respondents".to_string(),
            ));
        }
        let mut questions = self.questions.clone();
        questions.extend(other.questions.iter().cloned());
        let mut cells = Vec::with_capacity(self.cells.len() + other.cells.len());
        for (a, b) in self.rows().zip(other.rows()) {
            cells.extend_from_slice(a);
            cells.extend_from_slice(b);
        }
        ResponseMatrix::new(self.respondent_ids.clone(), questions, cells)
    }
}

pub(crate) fn question_problem(q: &QuestionMeta) -> Option<String> {
    if q.code.trim().is_empty() {
        Some("empty code".to_string())
    } else if q.group_id < 1 {
        Some("group id must be at least 1".to_string())
    } else if q.label.trim().is_empty() {
        Some("empty label".to_string())
    } else {
        None
    }
}
