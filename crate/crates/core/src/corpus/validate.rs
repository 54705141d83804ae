use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::matrix::{question_problem, ResponseMatrix};

/// Where a finding applies. Rows are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Locus {
    pub row: Option<usize>,
    pub column: Option<String>,
}

impl fmt::Display for Locus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.row, &self.column) {
            (Some(r), Some(c)) => write!(f, "row {r}, column {c}"),
            (Some(r), None) => write!(f, "row {r}"),
            (None, Some(c)) => write!(f, "column {c}"),
            (None, None) => write!(f, "matrix"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub locus: Locus,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
    pub ok: bool,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ok: {}", self.ok)?;
        for e in &self.errors {
            writeln!(f, "error: {}: {}", e.locus, e.message)?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {}: {}", w.locus, w.message)?;
        }
        Ok(())
    }
}

fn finding(row: Option<usize>, column: Option<&str>, message: impl Into<String>) -> Finding {
    Finding {
        locus: Locus {
            row,
            column: column.map(str::to_string),
        },
        message: message.into(),
    }
}

/// Lists every invariant violation (errors) and every constant column (warnings).
pub fn validate(matrix: &ResponseMatrix) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    if matrix.n_rows() == 0 {
        errors.push(finding(None, None, "matrix has no respondents"));
    }
    if matrix.n_cols() == 0 {
        errors.push(finding(None, None, "matrix has no answer columns"));
    }

    let mut first_row: HashMap<&str, usize> = HashMap::new();
    for (i, id) in matrix.respondent_ids().iter().enumerate() {
        if id.is_empty() {
            errors.push(finding(Some(i + 1), None, "empty respondent id"));
        }
        if let Some(first) = first_row.insert(id.as_str(), i + 1) {
            first_row.insert(id.as_str(), first);
            errors.push(finding(
                Some(i + 1),
                None,
                format!("duplicate respondent id {id:?} (first seen on row {first})"),
            ));
        }
    }

    let mut codes: HashMap<&str, usize> = HashMap::new();
    for (j, q) in matrix.questions().iter().enumerate() {
        if codes.insert(q.code.as_str(), j).is_some() {
            errors.push(finding(None, Some(&q.code), "duplicate answer code"));
        }
        if let Some(problem) = question_problem(q) {
            errors.push(finding(None, Some(&q.code), problem));
        }
    }

    for (i, row) in matrix.rows().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > 1 {
                errors.push(finding(
                    Some(i + 1),
                    Some(&matrix.questions()[j].code),
                    format!("cell value {v} is not 0 or 1"),
                ));
            }
        }
    }

    if matrix.n_rows() > 0 {
        for (j, q) in matrix.questions().iter().enumerate() {
            let first = matrix.get(0, j);
            if matrix.rows().all(|r| r[j] == first) {
                warnings.push(finding(
                    None,
                    Some(&q.code),
                    format!("zero variance (every answer is {first})"),
                ));
            }
        }
    }

    ValidationReport {
        ok: errors.is_empty(),
        errors,
        warnings,
    }
}
