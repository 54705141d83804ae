use crate::corpus::ResponseMatrix;
use crate::error::{Error, Result};

/// Dense real-valued items (rows of a matrix or its columns), row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    n: usize,
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(n: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * dim {
            return Err(Error::Shape(format!(
                "{n} points of dimension {dim} need {} values, got {}",
                n * dim,
                data.len()
            )));
        }
        Ok(Self { n, dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            n: rows.len(),
            dim,
            data,
        })
    }

    /// One point per respondent.
    pub fn matrix_rows(matrix: &ResponseMatrix) -> Self {
        Self {
            n: matrix.n_rows(),
            dim: matrix.n_cols(),
            data: matrix.cells().iter().map(|&v| f64::from(v)).collect(),
        }
    }

    /// One point per answer column.
    pub fn matrix_columns(matrix: &ResponseMatrix) -> Self {
        let (n, m) = (matrix.n_rows(), matrix.n_cols());
        let mut data = Vec::with_capacity(n * m);
        for j in 0..m {
            data.extend(matrix.rows().map(|r| f64::from(r[j])));
        }
        Self { n: m, dim: n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero chunk size
        (0..self.n).map(move |i| self.point(i))
    }
}

pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub fn manhattan(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Per-cluster means for labels in `0..k`. Empty clusters get `None`.
pub fn cluster_means(points: &Points, labels: &[usize], k: usize) -> Vec<Option<Vec<f64>>> {
    let mut sums = vec![vec![0.0; points.dim()]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .map(|(mut s, c)| {
            (c > 0).then(|| {
                let c = c as f64;
                s.iter_mut().for_each(|v| *v /= c);
                s
            })
        })
        .collect()
}
