//! K-means and agglomerative clustering of respondents or answers.
//!
//! Centroids of binary data are per-answer "yes" proportions, so a fitted
//! model doubles as a per-cluster Bernoulli profile.

mod agglomerative;
mod kmeans;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use agglomerative::{agglomerative_fit, agglomerative_points, dendrogram, Dendrogram, Linkage};
pub use kmeans::{
    assign, assign_matrix, kmeans_fit, kmeans_fit_points, kmeans_single_run, LloydRun,
};

use crate::error::{Error, Result};
use crate::points::{manhattan, squared_euclidean};
use crate::stats::QuestionStats;

pub const DEFAULT_RESTARTS: usize = 2000;
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Distance {
    #[default]
    SquaredEuclidean,
    Manhattan,
}

impl Distance {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::SquaredEuclidean => squared_euclidean(a, b),
            Distance::Manhattan => manhattan(a, b),
        }
    }
}

/// Whether respondents (rows) or answers (columns) are clustered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    Rows,
    Columns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub k: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub distance: Distance,
    pub orientation: Orientation,
}

impl ClusterConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            max_iter: DEFAULT_MAX_ITER,
            distance: Distance::default(),
            orientation: Orientation::default(),
        }
    }

    pub(crate) fn check(&self, items: usize) -> Result<()> {
        if items == 0 {
            return Err(Error::EmptyMatrix);
        }
        if self.k == 0 || self.k > items {
            return Err(Error::TooManyClusters { k: self.k, items });
        }
        if self.restarts == 0 {
            return Err(Error::InvalidClusterConfig(
                "restarts must be at least 1".into(),
            ));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidClusterConfig(
                "max_iter must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub config: ClusterConfig,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub inertia: f64,
    pub converged: bool,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Member indices of each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members().iter().map(Vec::len).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Picks one answer code per answer cluster: the override when given, otherwise
/// the member with the largest variance (ties by code).
///
/// `stats` must be in the clustered matrix's column order.
pub fn select_representatives(
    column_model: &ClusterModel,
    stats: &[QuestionStats],
    overrides: &BTreeMap<usize, String>,
) -> Result<Vec<String>> {
    if stats.len() != column_model.labels.len() {
        return Err(Error::DimensionMismatch {
            expected: column_model.labels.len(),
            found: stats.len(),
        });
    }
    if let Some((&cluster, code)) = overrides.iter().find(|(&c, _)| c >= column_model.k()) {
        return Err(Error::OverrideNotInCluster {
            cluster,
            code: code.clone(),
        });
    }
    column_model
        .members()
        .iter()
        .enumerate()
        .map(|(cluster, members)| {
            if let Some(code) = overrides.get(&cluster) {
                return if members.iter().any(|&j| &stats[j].code == code) {
                    Ok(code.clone())
                } else {
                    Err(Error::OverrideNotInCluster {
                        cluster,
                        code: code.clone(),
                    })
                };
            }
            members
                .iter()
                .map(|&j| &stats[j])
                .min_by(|a, b| {
                    b.variance
                        .total_cmp(&a.variance)
                        .then_with(|| a.code.cmp(&b.code))
                })
                .map(|s| s.code.clone())
                .ok_or_else(|| Error::InvalidClusterConfig(format!("cluster {cluster} is empty")))
        })
        .collect()
}
