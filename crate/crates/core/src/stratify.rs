//! Segment comparisons driven by external per-respondent covariates.
//!
//! A mask is a `Vec<bool>` aligned with the matrix rows. Numeric scores give
//! top-quantile masks; categorical covariates give one mask per category.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::corpus::ResponseMatrix;
use crate::error::{Error, Result};
use crate::stats::{column_stats, proportion_ztest, TestResult};

/// Raw `id,value` pairs in file order, duplicates rejected.
fn read_pairs<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = csv.headers().map_err(Error::csv)?.clone();
    if headers.len() != 2 || headers.get(0) != Some("id") {
        return Err(Error::Csv {
            line: 1,
            message: "expected header `id,<value>`".into(),
        });
    }
    let mut seen = HashSet::new();
    let mut pairs = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(Error::csv)?;
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, row: i + 1 });
        }
        pairs.push((id, record[1].to_string()));
    }
    Ok(pairs)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// Real-valued score per respondent.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScoreTable {
    pub values: BTreeMap<String, f64>,
}

impl ScoreTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(open(path.as_ref())?)
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (id, raw) in read_pairs(reader)? {
            match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    values.insert(id, v);
                }
                _ => return Err(Error::InvalidScore { id, value: raw }),
            }
        }
        Ok(Self { values })
    }

    /// Scores in row order; every row must be scored and every score must
    /// belong to a row.
    pub fn aligned(&self, ids: &[String]) -> Result<Vec<f64>> {
        let known: HashSet<&str> = ids.iter().map(String::as_str).collect();
        if let Some(id) = self.values.keys().find(|id| !known.contains(id.as_str())) {
            return Err(Error::UnknownRespondent(id.clone()));
        }
        ids.iter()
            .map(|id| {
                self.values
                    .get(id)
                    .copied()
                    .ok_or_else(|| Error::MissingScore(id.clone()))
            })
            .collect()
    }
}

/// Categorical value per respondent; rows may be unannotated.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CategoryTable {
    pub values: BTreeMap<String, String>,
}

impl CategoryTable {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(open(path.as_ref())?)
    }

    /// Blank values count as missing.
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let values = read_pairs(reader)?
            .into_iter()
            .filter(|(_, v)| !v.trim().is_empty())
            .map(|(id, v)| (id, v.trim().to_string()))
            .collect();
        Ok(Self { values })
    }
}

/// Selects the `ceil(q·N)` highest-scored rows, ties broken by ascending id.
pub fn top_quantile_mask(scores: &ScoreTable, ids: &[String], q: f64) -> Result<Vec<bool>> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidQuantile(q));
    }
    let values = scores.aligned(ids)?;
    let n = ids.len();
    let take = ((q * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .total_cmp(&values[a])
            .then_with(|| ids[a].cmp(&ids[b]))
    });
    let mut mask = vec![false; n];
    for &i in &order[..take] {
        mask[i] = true;
    }
    Ok(mask)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterShare {
    pub cluster: usize,
    pub cluster_size: usize,
    /// Segment members in this cluster.
    pub count: usize,
    /// `count / segment size`.
    pub share: f64,
    /// `cluster_size / N`, the share in the whole population.
    pub overall_share: f64,
    /// `count / cluster_size`; zero for empty clusters.
    pub within_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterDistribution {
    pub segment_size: usize,
    pub clusters: Vec<ClusterShare>,
}

pub fn cluster_distribution(
    labels: &[usize],
    k: usize,
    mask: &[bool],
) -> Result<ClusterDistribution> {
    if labels.len() != mask.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            found: mask.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(Error::InvalidClusterConfig(format!(
            "label {bad} outside 0..{k}"
        )));
    }
    let segment_size = mask.iter().filter(|&&m| m).count();
    if segment_size == 0 {
        return Err(Error::EmptyMask);
    }
    let mut sizes = vec![0usize; k];
    let mut counts = vec![0usize; k];
    for (&l, &m) in labels.iter().zip(mask) {
        sizes[l] += 1;
        counts[l] += usize::from(m);
    }
    let n = labels.len() as f64;
    let clusters = (0..k)
        .map(|c| ClusterShare {
            cluster: c,
            cluster_size: sizes[c],
            count: counts[c],
            share: counts[c] as f64 / segment_size as f64,
            overall_share: sizes[c] as f64 / n,
            within_rate: if sizes[c] == 0 {
                0.0
            } else {
                counts[c] as f64 / sizes[c] as f64
            },
        })
        .collect();
    Ok(ClusterDistribution {
        segment_size,
        clusters,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuestionProfile {
    pub code: String,
    pub yes_overall: usize,
    pub yes_segment: usize,
    pub p_overall: f64,
    pub p_segment: f64,
    /// `None` when the segment covers every row.
    pub p_complement: Option<f64>,
    pub difference: f64,
    /// `None` when the overall proportion is 0 or 1.
    pub test: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentProfile {
    pub segment_size: usize,
    pub questions: Vec<QuestionProfile>,
}

/// Per-question yes-proportion of the segment against the whole population,
/// tested with the one-sample proportion test at `alpha`.
pub fn segment_question_profile(
    matrix: &ResponseMatrix,
    mask: &[bool],
    alpha: f64,
) -> Result<SegmentProfile> {
    if mask.len() != matrix.n_rows() {
        return Err(Error::DimensionMismatch {
            expected: matrix.n_rows(),
            found: mask.len(),
        });
    }
    let n = matrix.n_rows();
    let size = mask.iter().filter(|&&m| m).count();
    if size == 0 {
        return Err(Error::EmptyMask);
    }
    let questions = (0..matrix.n_cols())
        .map(|j| {
            let overall = column_stats(matrix, j);
            let yes_segment = (0..n).filter(|&i| mask[i] && matrix.get(i, j) == 1).count();
            let p_segment = yes_segment as f64 / size as f64;
            let p_complement =
                (size < n).then(|| (overall.yes - yes_segment) as f64 / (n - size) as f64);
            let test = match proportion_ztest(overall.p, p_segment, size, alpha) {
                Ok(t) => Some(t),
                Err(Error::UndefinedTest(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(QuestionProfile {
                code: overall.code,
                yes_overall: overall.yes,
                yes_segment,
                p_overall: overall.p,
                p_segment,
                p_complement,
                difference: p_segment - overall.p,
                test,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SegmentProfile {
        segment_size: size,
        questions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoricalSegments {
    /// One mask per category value, in sorted value order.
    pub segments: Vec<(String, Vec<bool>)>,
    /// Matrix rows without a value, in row order.
    pub missing: Vec<String>,
}

pub fn categorical_segments(table: &CategoryTable, ids: &[String]) -> Result<CategoricalSegments> {
    let known: HashSet<&str> = ids.iter().map(String::as_str).collect();
    if let Some(id) = table.values.keys().find(|id| !known.contains(id.as_str())) {
        return Err(Error::UnknownRespondent(id.clone()));
    }
    let mut segments: BTreeMap<&str, Vec<bool>> = BTreeMap::new();
    let mut missing = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        match table.values.get(id) {
            Some(v) => segments.entry(v).or_insert_with(|| vec![false; ids.len()])[i] = true,
            None => missing.push(id.clone()),
        }
    }
    if segments.is_empty() {
        return Err(Error::NoCategories);
    }
    Ok(CategoricalSegments {
        segments: segments
            .into_iter()
            .map(|(v, m)| (v.to_string(), m))
            .collect(),
        missing,
    })
}

pub fn write_distribution_csv<W: Write>(
    segment: &str,
    dist: &ClusterDistribution,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "segment,cluster,cluster_size,count,share,overall_share,within_rate"
    )?;
    for c in &dist.clusters {
        writeln!(
            out,
            "{segment},{},{},{},{:.6},{:.6},{:.6}",
            c.cluster, c.cluster_size, c.count, c.share, c.overall_share, c.within_rate
        )?;
    }
    Ok(())
}

pub fn write_profile_csv<W: Write>(
    segment: &str,
    profile: &SegmentProfile,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(
        out,
        "segment,code,n_segment,p_overall,p_segment,p_complement,difference,z,p_value,significant"
    )?;
    for q in &profile.questions {
        let complement = q
            .p_complement
            .map(|p| format!("{p:.6}"))
            .unwrap_or_default();
        let (z, pv, sig) = match &q.test {
            Some(t) => (
                format!("{:.6}", t.z),
                format!("{:.6}", t.p_value),
                t.significant.to_string(),
            ),
            None => Default::default(),
        };
        writeln!(
            out,
            "{segment},{},{},{:.6},{:.6},{complement},{:.6},{z},{pv},{sig}",
            q.code, profile.segment_size, q.p_overall, q.p_segment, q.difference
        )?;
    }
    Ok(())
}
