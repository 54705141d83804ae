use rayon::prelude::*;

use super::{ClusterConfig, ClusterModel, Distance, Orientation};
use crate::corpus::ResponseMatrix;
use crate::error::{Error, Result};
use crate::points::{cluster_means, squared_euclidean, Points};
use crate::rng::SeededRng;

/// Outcome of one seeded Lloyd run.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub restart: u64,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub converged: bool,
    /// Objective after each centroid update, starting with the seeded assignment.
    pub history: Vec<f64>,
}

pub(crate) fn items(matrix: &ResponseMatrix, orientation: Orientation) -> Points {
    match orientation {
        Orientation::Rows => Points::matrix_rows(matrix),
        Orientation::Columns => Points::matrix_columns(matrix),
    }
}

/// Best-of-restarts k-means on the rows (or columns) of a binary matrix.
pub fn kmeans_fit(matrix: &ResponseMatrix, config: &ClusterConfig) -> Result<ClusterModel> {
    if matrix.n_rows() == 0 || matrix.n_cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    kmeans_fit_points(&items(matrix, config.orientation), config)
}

/// Runs `config.restarts` independent seeded runs and keeps the lowest inertia;
/// equal inertia keeps the lowest restart index. Restart `r` seeds its generator
/// with `config.seed ^ r`, so the result does not depend on thread count.
pub fn kmeans_fit_points(points: &Points, config: &ClusterConfig) -> Result<ClusterModel> {
    config.check(points.len())?;
    let best = (0..config.restarts as u64)
        .into_par_iter()
        .map(|r| lloyd(points, config, r, false))
        .reduce_with(|a, b| {
            if b.inertia < a.inertia || (b.inertia == a.inertia && b.restart < a.restart) {
                b
            } else {
                a
            }
        })
        .expect("at least one restart");
    Ok(ClusterModel {
        config: config.clone(),
        centroids: best.centroids,
        labels: best.labels,
        inertia: best.inertia,
        converged: best.converged,
    })
}

/// A single restart, with its per-iteration objective trace.
pub fn kmeans_single_run(
    points: &Points,
    config: &ClusterConfig,
    restart: u64,
) -> Result<LloydRun> {
    config.check(points.len())?;
    Ok(lloyd(points, config, restart, true))
}

fn lloyd(points: &Points, config: &ClusterConfig, restart: u64, trace: bool) -> LloydRun {
    let k = config.k;
    let dist = config.distance;
    let mut rng = SeededRng::new(config.seed ^ restart);
    let mut centers = kmeanspp(points, k, &mut rng);
    let mut labels = assign_points(points, &centers, dist);
    repair_empty(points, &mut labels, &mut centers, dist);

    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        centers = means(points, &labels, k);
        if trace {
            history.push(objective(points, &labels, &centers, dist));
        }
        let mut next = assign_points(points, &centers, dist);
        repair_empty(points, &mut next, &mut centers, dist);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    let centroids = means(points, &labels, k);
    let inertia = objective(points, &labels, &centroids, dist);
    if trace {
        history.push(inertia);
    }
    LloydRun {
        restart,
        centroids,
        labels,
        inertia,
        converged,
        history,
    }
}

/// k-means++ seeding with squared-Euclidean weights, whatever the assignment distance.
fn kmeanspp(points: &Points, k: usize, rng: &mut SeededRng) -> Vec<Vec<f64>> {
    let n = points.len();
    let first = rng.below(n);
    let mut centers = vec![points.point(first).to_vec()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_euclidean(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.next_f64() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_positive = 0;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    last_positive = i;
                    acc += w;
                    if acc > target {
                        chosen = Some(i);
                        break;
                    }
                }
            }
            chosen.unwrap_or(last_positive)
        } else {
            rng.below(n)
        };
        let c = points.point(pick).to_vec();
        for (w, p) in d2.iter_mut().zip(points.iter()) {
            *w = w.min(squared_euclidean(p, &c));
        }
        centers.push(c);
    }
    centers
}

pub(crate) fn nearest(p: &[f64], centers: &[Vec<f64>], dist: Distance) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = dist.eval(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign_points(points: &Points, centers: &[Vec<f64>], dist: Distance) -> Vec<usize> {
    points.iter().map(|p| nearest(p, centers, dist).0).collect()
}

/// Moves the point farthest from its centroid into each empty cluster.
fn repair_empty(points: &Points, labels: &mut [usize], centers: &mut [Vec<f64>], dist: Distance) {
    let k = centers.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let mut far: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let d = dist.eval(p, &centers[l]);
            if far.is_none_or(|(_, best)| d > best) {
                far = Some((i, d));
            }
        }
        let Some((i, _)) = far else { break };
        counts[labels[i]] -= 1;
        counts[empty] += 1;
        labels[i] = empty;
        centers[empty] = points.point(i).to_vec();
    }
}

fn means(points: &Points, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    cluster_means(points, labels, k)
        .into_iter()
        .map(|m| m.unwrap_or_else(|| vec![0.0; points.dim()]))
        .collect()
}

pub(crate) fn objective(
    points: &Points,
    labels: &[usize],
    centers: &[Vec<f64>],
    dist: Distance,
) -> f64 {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| dist.eval(p, &centers[l]))
        .sum()
}

/// Nearest-centroid labels for new items; ties go to the lowest cluster index.
pub fn assign(model: &ClusterModel, items: &Points) -> Result<Vec<usize>> {
    let dim = model.centroids.first().map_or(0, Vec::len);
    if items.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: items.dim(),
        });
    }
    Ok(assign_points(
        items,
        &model.centroids,
        model.config.distance,
    ))
}

/// Labels the rows or columns of `matrix`, following the model's orientation.
pub fn assign_matrix(model: &ClusterModel, matrix: &ResponseMatrix) -> Result<Vec<usize>> {
    assign(model, &items(matrix, model.config.orientation))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(rows: &[&[f64]]) -> Points {
        Points::from_rows(rows).unwrap()
    }

    fn config(k: usize, restarts: usize) -> ClusterConfig {
        ClusterConfig {
            restarts,
            ..ClusterConfig::new(k)
        }
    }

    #[test]
    fn separated_duplicates() {
        let p = pts(&[
            &[0., 0., 0.],
            &[0., 0., 0.],
            &[0., 0., 0.],
            &[1., 1., 1.],
            &[1., 1., 1.],
            &[1., 1., 1.],
        ]);
        let m = kmeans_fit_points(&p, &config(2, 20)).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut cs = m.centroids.clone();
        cs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(cs, vec![vec![0.0; 3], vec![1.0; 3]]);
    }

    #[test]
    fn five_point_instance() {
        let p = pts(&[&[0., 0.], &[0., 0.], &[1., 1.], &[1., 1.], &[1., 0.]]);
        let m = kmeans_fit_points(&p, &config(2, 50)).unwrap();
        assert!((m.inertia - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(m.labels[0], m.labels[1]);
        assert_eq!(m.labels[2], m.labels[3]);
        assert_ne!(m.labels[0], m.labels[2]);
    }

    #[test]
    fn one_point_per_cluster() {
        let p = pts(&[&[0., 1.], &[1., 1.], &[1., 0.], &[0., 0.]]);
        let m = kmeans_fit_points(&p, &config(4, 5)).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut labels = m.labels.clone();
        labels.sort();
        assert_eq!(labels, [0, 1, 2, 3]);
    }

    #[test]
    fn identical_points_with_more_clusters_than_values() {
        let p = pts(&[&[1., 1.], &[1., 1.], &[1., 1.]]);
        let m = kmeans_fit_points(&p, &config(3, 3)).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut labels = m.labels.clone();
        labels.sort();
        assert_eq!(labels, [0, 1, 2]);
    }

    #[test]
    fn invalid_configs() {
        let p = pts(&[&[0.], &[1.]]);
        assert!(matches!(
            kmeans_fit_points(&p, &config(3, 1)),
            Err(Error::TooManyClusters { k: 3, items: 2 })
        ));
        assert!(kmeans_fit_points(&p, &config(0, 1)).is_err());
        assert!(kmeans_fit_points(&p, &config(1, 0)).is_err());
    }

    fn model(centroids: Vec<Vec<f64>>, distance: Distance) -> ClusterModel {
        ClusterModel {
            config: ClusterConfig {
                distance,
                ..ClusterConfig::new(centroids.len())
            },
            labels: vec![],
            inertia: 0.0,
            converged: true,
            centroids,
        }
    }

    #[test]
    fn assign_examples() {
        let m = model(
            vec![vec![0., 0.], vec![1., 1.], vec![1., 0.]],
            Distance::SquaredEuclidean,
        );
        assert_eq!(assign(&m, &pts(&[&[1., 0.]])).unwrap(), [2]);

        let m = model(vec![vec![0., 0.], vec![1., 1.]], Distance::SquaredEuclidean);
        assert_eq!(assign(&m, &pts(&[&[0.5, 0.5]])).unwrap(), [0]);

        let m = model(vec![vec![0., 0.], vec![1., 1.]], Distance::Manhattan);
        assert_eq!(assign(&m, &pts(&[&[1., 0.]])).unwrap(), [0]);

        assert!(matches!(
            assign(&m, &pts(&[&[1., 0., 0.]])),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }
}
