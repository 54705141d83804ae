//! Internal cluster-validity indices and the method/k selection sweep.
//!
//! All three indices use Euclidean geometry, including for models fitted with
//! Manhattan distance, so rows of a sweep are comparable.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cluster::{
    dendrogram, kmeans_fit_points, ClusterConfig, Distance, Linkage, Orientation,
};
use crate::error::{Error, Result};
use crate::points::{cluster_means, euclidean, squared_euclidean, Points};

struct Groups {
    /// Distinct labels in ascending order.
    ids: Vec<usize>,
    /// Dense cluster index per point.
    dense: Vec<usize>,
    sizes: Vec<usize>,
}

fn groups(points: &Points, labels: &[usize]) -> Result<Groups> {
    if labels.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: labels.len(),
        });
    }
    let ids: Vec<usize> = labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if ids.len() < 2 {
        return Err(Error::SingleCluster);
    }
    let dense: Vec<usize> = labels
        .iter()
        .map(|l| ids.binary_search(l).expect("label present"))
        .collect();
    let mut sizes = vec![0; ids.len()];
    for &d in &dense {
        sizes[d] += 1;
    }
    Ok(Groups { ids, dense, sizes })
}

fn centroids(points: &Points, g: &Groups) -> Vec<Vec<f64>> {
    cluster_means(points, &g.dense, g.ids.len())
        .into_iter()
        .map(|c| c.expect("every dense cluster is nonempty"))
        .collect()
}

/// Mean silhouette width. Points alone in their cluster score 0.
pub fn silhouette(points: &Points, labels: &[usize]) -> Result<f64> {
    let g = groups(points, labels)?;
    let k = g.ids.len();
    let n = points.len();
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if i != j {
                sums[g.dense[j]] += euclidean(points.point(i), points.point(j));
            }
        }
        let own = g.dense[i];
        if g.sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (g.sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / g.sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Between-cluster to within-cluster dispersion ratio. Returns `f64::INFINITY`
/// when every cluster has zero scatter.
pub fn calinski_harabasz(points: &Points, labels: &[usize]) -> Result<f64> {
    let g = groups(points, labels)?;
    let (n, k) = (points.len(), g.ids.len());
    if k >= n {
        return Err(Error::AllSingletons);
    }
    let cents = centroids(points, &g);
    let overall: Vec<f64> = (0..points.dim())
        .map(|d| points.iter().map(|p| p[d]).sum::<f64>() / n as f64)
        .collect();
    let ssb: f64 = cents
        .iter()
        .zip(&g.sizes)
        .map(|(c, &s)| s as f64 * squared_euclidean(c, &overall))
        .sum();
    let ssw: f64 = points
        .iter()
        .zip(&g.dense)
        .map(|(p, &c)| squared_euclidean(p, &cents[c]))
        .sum();
    if ssw == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((ssb / (k - 1) as f64) / (ssw / (n - k) as f64))
}

/// Mean over clusters of the worst scatter-to-separation ratio.
pub fn davies_bouldin(points: &Points, labels: &[usize]) -> Result<f64> {
    let g = groups(points, labels)?;
    let k = g.ids.len();
    let cents = centroids(points, &g);
    let mut scatter = vec![0.0; k];
    for (p, &c) in points.iter().zip(&g.dense) {
        scatter[c] += euclidean(p, &cents[c]);
    }
    for (s, &size) in scatter.iter_mut().zip(&g.sizes) {
        *s /= size as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = euclidean(&cents[i], &cents[j]);
            if sep == 0.0 {
                return Err(Error::CoincidentCentroids(g.ids[i.min(j)], g.ids[i.max(j)]));
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidityScores {
    pub silhouette: Option<f64>,
    pub calinski_harabasz: Option<f64>,
    pub davies_bouldin: Option<f64>,
}

/// All three indices; a metric that cannot be computed is left empty.
pub fn score(points: &Points, labels: &[usize]) -> ValidityScores {
    ValidityScores {
        silhouette: silhouette(points, labels).ok(),
        calinski_harabasz: calinski_harabasz(points, labels).ok(),
        davies_bouldin: davies_bouldin(points, labels).ok(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMethod {
    Kmeans,
    AgglomerativeWard,
    AgglomerativeL1Complete,
}

impl SweepMethod {
    pub fn display_name(self) -> &'static str {
        match self {
            SweepMethod::Kmeans => "KMeans",
            SweepMethod::AgglomerativeWard => "Agglomerative",
            SweepMethod::AgglomerativeL1Complete => "Agglom.L1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Silhouette,
    CalinskiHarabasz,
    DaviesBouldin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub method: SweepMethod,
    pub k: usize,
    pub scores: ValidityScores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionTable {
    pub rows: Vec<SweepRow>,
    /// `(row index, metric)` for the best value of each metric.
    pub bold_marks: BTreeSet<(usize, Metric)>,
}

impl SelectionTable {
    fn from_rows(rows: Vec<SweepRow>) -> Self {
        let mut bold_marks = BTreeSet::new();
        // first row wins ties
        let pick = |get: &dyn Fn(&ValidityScores) -> Option<f64>, larger: bool| {
            let mut best: Option<(usize, f64)> = None;
            for (i, r) in rows.iter().enumerate() {
                if let Some(v) = get(&r.scores) {
                    let better = best.is_none_or(|(_, b)| if larger { v > b } else { v < b });
                    if better {
                        best = Some((i, v));
                    }
                }
            }
            best.map(|(i, _)| i)
        };
        if let Some(i) = pick(&|s| s.silhouette, true) {
            bold_marks.insert((i, Metric::Silhouette));
        }
        if let Some(i) = pick(&|s| s.calinski_harabasz, true) {
            bold_marks.insert((i, Metric::CalinskiHarabasz));
        }
        if let Some(i) = pick(&|s| s.davies_bouldin, false) {
            bold_marks.insert((i, Metric::DaviesBouldin));
        }
        SelectionTable { rows, bold_marks }
    }

    pub fn is_bold(&self, row: usize, metric: Metric) -> bool {
        self.bold_marks.contains(&(row, metric))
    }

    /// CSV with columns `method,Silhouette Score,Calinski Harabasz,Davies Bouldin`.
    /// Method cells read like `KMeans 3`; best values carry a trailing `*`, missing
    /// values are empty and an infinite Calinski-Harabasz prints as `inf`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(
            out,
            "method,Silhouette Score,Calinski Harabasz,Davies Bouldin"
        )?;
        for (i, row) in self.rows.iter().enumerate() {
            let cell = |v: Option<f64>, m: Metric| match v {
                None => String::new(),
                Some(x) => {
                    let text = if x.is_infinite() {
                        "inf".to_string()
                    } else {
                        format!("{x:.6}")
                    };
                    if self.is_bold(i, m) {
                        format!("{text}*")
                    } else {
                        text
                    }
                }
            };
            writeln!(
                out,
                "{} {},{},{},{}",
                row.method.display_name(),
                row.k,
                cell(row.scores.silhouette, Metric::Silhouette),
                cell(row.scores.calinski_harabasz, Metric::CalinskiHarabasz),
                cell(row.scores.davies_bouldin, Metric::DaviesBouldin)
            )?;
        }
        Ok(())
    }
}

/// Which `k` values to evaluate for each method.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub entries: Vec<(SweepMethod, Vec<usize>)>,
}

impl SweepPlan {
    /// Every method at every `k` in `k_min..=k_max`.
    pub fn grid(methods: &[SweepMethod], k_min: usize, k_max: usize) -> Self {
        SweepPlan {
            entries: methods
                .iter()
                .map(|&m| (m, (k_min..=k_max).collect()))
                .collect(),
        }
    }

    /// K-means over `k_min..=k_max` followed by one row per agglomerative method at `agglomerative_k`.
    pub fn kmeans_range_with_agglomerative(
        k_min: usize,
        k_max: usize,
        agglomerative_k: usize,
    ) -> Self {
        SweepPlan {
            entries: vec![
                (SweepMethod::Kmeans, (k_min..=k_max).collect()),
                (SweepMethod::AgglomerativeWard, vec![agglomerative_k]),
                (SweepMethod::AgglomerativeL1Complete, vec![agglomerative_k]),
            ],
        }
    }
}

/// Evaluates every method at every `k` in `k_min..=k_max`.
pub fn sweep(
    points: &Points,
    methods: &[SweepMethod],
    k_min: usize,
    k_max: usize,
    kmeans: &ClusterConfig,
) -> Result<SelectionTable> {
    sweep_plan(points, &SweepPlan::grid(methods, k_min, k_max), kmeans)
}

/// Runs a sweep plan. `kmeans` supplies restarts, seed, iteration cap and
/// distance for the k-means rows; its `k` is ignored. Failed cells are left empty.
pub fn sweep_plan(
    points: &Points,
    plan: &SweepPlan,
    kmeans: &ClusterConfig,
) -> Result<SelectionTable> {
    for (_, ks) in &plan.entries {
        if let Some(&k) = ks.iter().find(|&&k| k < 1 || k > points.len()) {
            return Err(Error::TooManyClusters {
                k,
                items: points.len(),
            });
        }
    }
    let mut rows = Vec::new();
    for (method, ks) in &plan.entries {
        let tree = match method {
            SweepMethod::Kmeans => None,
            SweepMethod::AgglomerativeWard => Some(dendrogram(
                points,
                Linkage::Ward,
                Distance::SquaredEuclidean,
            )?),
            SweepMethod::AgglomerativeL1Complete => {
                Some(dendrogram(points, Linkage::Complete, Distance::Manhattan)?)
            }
        };
        for &k in ks {
            let labels = match &tree {
                None => {
                    let config = ClusterConfig {
                        k,
                        orientation: Orientation::Rows,
                        ..kmeans.clone()
                    };
                    kmeans_fit_points(points, &config)?.labels
                }
                Some(t) => t.cut(k)?,
            };
            rows.push(SweepRow {
                method: *method,
                k,
                scores: score(points, &labels),
            });
        }
    }
    Ok(SelectionTable::from_rows(rows))
}
