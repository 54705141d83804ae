//! Matrix CSV and schema JSON.
//!
//! The matrix file has an `id` column followed by one column per answer code,
//! cells literally `0` or `1`, UTF-8 with LF line endings. The schema is a JSON
//! array of `{"code", "group", "label"}` objects; matrix columns are reordered
//! to follow it.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::matrix::{question_problem, QuestionMeta, ResponseMatrix};
use crate::error::{Error, Result};

pub fn load_schema(path: impl AsRef<Path>) -> Result<Vec<QuestionMeta>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_schema(BufReader::new(file))
}

pub fn read_schema<R: Read>(reader: R) -> Result<Vec<QuestionMeta>> {
    let schema: Vec<QuestionMeta> = serde_json::from_reader(reader)?;
    let mut seen = HashSet::new();
    for q in &schema {
        if !seen.insert(q.code.clone()) {
            return Err(Error::DuplicateCode(q.code.clone()));
        }
        if let Some(message) = question_problem(q) {
            return Err(Error::InvalidQuestion {
                code: q.code.clone(),
                message,
            });
        }
    }
    if schema.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok(schema)
}

pub fn save_schema(questions: &[QuestionMeta], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(questions)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a response matrix, validating every cell against the schema.
pub fn load_matrix(
    matrix_path: impl AsRef<Path>,
    schema_path: impl AsRef<Path>,
) -> Result<ResponseMatrix> {
    let schema = load_schema(schema_path)?;
    let path = matrix_path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(BufReader::new(file), schema)
}

pub fn read_matrix<R: Read>(reader: R, schema: Vec<QuestionMeta>) -> Result<ResponseMatrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv.headers().map_err(Error::csv)?.clone();
    let mut header_iter = headers.iter();
    match header_iter.next() {
        Some("id") => {}
        other => {
            return Err(Error::Csv {
                line: 1,
                message: format!(
                    "first header must be \"id\", found {:?}",
                    other.unwrap_or("")
                ),
            })
        }
    }

    let position: HashMap<&str, usize> = schema
        .iter()
        .enumerate()
        .map(|(i, q)| (q.code.as_str(), i))
        .collect();
    // file column -> schema column
    let mut target = Vec::with_capacity(headers.len() - 1);
    let mut present = vec![false; schema.len()];
    for code in header_iter {
        let idx = *position
            .get(code)
            .ok_or_else(|| Error::UnknownCode(code.to_string()))?;
        if present[idx] {
            return Err(Error::DuplicateCode(code.to_string()));
        }
        present[idx] = true;
        target.push(idx);
    }
    if let Some(missing) = present.iter().position(|p| !p) {
        return Err(Error::MissingColumn(schema[missing].code.clone()));
    }

    let m = schema.len();
    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut cells = Vec::new();
    for (row_idx, record) in csv.records().enumerate() {
        let record = record.map_err(Error::csv)?;
        let row = row_idx + 1;
        let id = record.get(0).unwrap_or_default().to_string();
        if id.is_empty() {
            return Err(Error::Csv {
                line: row as u64 + 1,
                message: "empty respondent id".to_string(),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row });
        }
        let mut values = vec![0u8; m];
        for (field, &dest) in record.iter().skip(1).zip(&target) {
            values[dest] = match field {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::InvalidCell {
                        row,
                        id,
                        column: schema[dest].code.clone(),
                        value: other.to_string(),
                    })
                }
            };
        }
        cells.extend(values);
        ids.push(id);
    }
    ResponseMatrix::new(ids, schema, cells)
}

pub fn save_matrix(matrix: &ResponseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_matrix(matrix, &mut out).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_matrix<W: Write>(matrix: &ResponseMatrix, out: &mut W) -> std::io::Result<()> {
    let mut header = String::from("id");
    for code in matrix.codes() {
        header.push(',');
        header.push_str(code);
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for (id, row) in matrix.respondent_ids().iter().zip(matrix.rows()) {
        line.clear();
        line.push_str(id);
        for &v in row {
            line.push(',');
            line.push(if v == 1 { '1' } else { '0' });
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}
