use serde::{Deserialize, Serialize};

use super::kmeans::{items, objective};
use super::{ClusterConfig, ClusterModel, Distance, Orientation};
use crate::corpus::ResponseMatrix;
use crate::error::{Error, Result};
use crate::points::{cluster_means, euclidean, manhattan, squared_euclidean, Points};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Linkage {
    Ward,
    Complete,
}

/// Bottom-up merge sequence over `n` singletons. Each merge folds slot `b`
/// into slot `a` (`a < b`); slots are the lowest original index in the cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub n: usize,
    pub merges: Vec<(usize, usize, f64)>,
}

impl Dendrogram {
    /// Flat labels after replaying merges until `k` clusters remain. Clusters are
    /// numbered by their lowest member index.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        if k == 0 || k > self.n {
            return Err(Error::TooManyClusters { k, items: self.n });
        }
        let mut owner: Vec<usize> = (0..self.n).collect();
        for &(a, b, _) in self.merges.iter().take(self.n - k) {
            for o in owner.iter_mut() {
                if *o == b {
                    *o = a;
                }
            }
        }
        let mut ids = vec![usize::MAX; self.n];
        let mut next = 0;
        Ok(owner
            .iter()
            .map(|&o| {
                if ids[o] == usize::MAX {
                    ids[o] = next;
                    next += 1;
                }
                ids[o]
            })
            .collect())
    }
}

/// Full agglomerative merge sequence via Lance-Williams updates.
///
/// Ward works on squared Euclidean distances and rejects Manhattan. Complete
/// linkage uses Euclidean or Manhattan distance. Ties merge the lowest slot pair.
pub fn dendrogram(points: &Points, linkage: Linkage, distance: Distance) -> Result<Dendrogram> {
    if linkage == Linkage::Ward && distance == Distance::Manhattan {
        return Err(Error::InvalidClusterConfig(
            "ward linkage requires squared-euclidean distance".into(),
        ));
    }
    let n = points.len();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let base: fn(&[f64], &[f64]) -> f64 = match (linkage, distance) {
        (Linkage::Ward, _) => squared_euclidean,
        (Linkage::Complete, Distance::SquaredEuclidean) => euclidean,
        (Linkage::Complete, Distance::Manhattan) => manhattan,
    };
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = base(points.point(i), points.point(j));
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    while active.len() > 1 {
        let mut best = (0, 0, f64::INFINITY);
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let v = d[a * n + b];
                if v < best.2 {
                    best = (a, b, v);
                }
            }
        }
        let (a, b, height) = best;
        for &c in &active {
            if c == a || c == b {
                continue;
            }
            let (dac, dbc) = (d[a * n + c], d[b * n + c]);
            let v = match linkage {
                Linkage::Ward => {
                    let (na, nb, nc) = (size[a] as f64, size[b] as f64, size[c] as f64);
                    ((na + nc) * dac + (nb + nc) * dbc - nc * height) / (na + nb + nc)
                }
                Linkage::Complete => dac.max(dbc),
            };
            d[a * n + c] = v;
            d[c * n + a] = v;
        }
        size[a] += size[b];
        active.retain(|&c| c != b);
        merges.push((a, b, height));
    }
    Ok(Dendrogram { n, merges })
}

/// Agglomerative clustering of matrix rows down to `k` clusters; centroids are member means.
pub fn agglomerative_fit(
    matrix: &ResponseMatrix,
    k: usize,
    linkage: Linkage,
    distance: Distance,
) -> Result<ClusterModel> {
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    agglomerative_points(&items(matrix, Orientation::Rows), k, linkage, distance)
}

pub fn agglomerative_points(
    points: &Points,
    k: usize,
    linkage: Linkage,
    distance: Distance,
) -> Result<ClusterModel> {
    if k == 0 || k > points.len() {
        return Err(Error::TooManyClusters {
            k,
            items: points.len(),
        });
    }
    let tree = dendrogram(points, linkage, distance)?;
    model_from_labels(points, tree.cut(k)?, k, distance)
}

pub(crate) fn model_from_labels(
    points: &Points,
    labels: Vec<usize>,
    k: usize,
    distance: Distance,
) -> Result<ClusterModel> {
    let centroids = cluster_means(points, &labels, k)
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::InvalidClusterConfig("cut produced an empty cluster".into()))?;
    let inertia = objective(points, &labels, &centroids, distance);
    Ok(ClusterModel {
        config: ClusterConfig {
            restarts: 1,
            distance,
            ..ClusterConfig::new(k)
        },
        centroids,
        labels,
        inertia,
        converged: true,
    })
}
