use serde::{Deserialize, Serialize};

use super::DetectError;
use crate::embed::{euclidean, EmbeddingVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Core,
    Border,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_samples: usize,
}

/// Per-point cluster assignment and role, in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub ids: Vec<String>,
    /// Cluster id, or `None` for noise.
    pub assignments: Vec<Option<usize>>,
    pub roles: Vec<Role>,
    pub params: DbscanParams,
    pub n_clusters: usize,
}

impl ClusteringResult {
    pub fn noise_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.roles
            .iter()
            .enumerate()
            .filter(|(_, r)| **r == Role::Noise)
            .map(|(i, _)| i)
    }

    pub fn noise_count(&self) -> usize {
        self.noise_indices().count()
    }

    pub fn role_of(&self, id: &str) -> Option<Role> {
        self.ids.iter().position(|x| x == id).map(|i| self.roles[i])
    }

    /// Cluster a new point would join: the cluster of the first core point
    /// (in input order) within `eps`, or `None` (noise).
    pub fn predict(&self, training: &[EmbeddingVector], point: &[f64]) -> Option<usize> {
        training
            .iter()
            .zip(&self.roles)
            .zip(&self.assignments)
            .find(|((v, role), _)| **role == Role::Core && euclidean(&v.values, point) <= self.params.eps)
            .and_then(|(_, cluster)| *cluster)
    }
}

pub(crate) fn check_vectors(vectors: &[EmbeddingVector]) -> Result<usize, DetectError> {
    let first = vectors.first().ok_or(DetectError::Empty)?;
    let dim = first.dim();
    for v in vectors {
        if v.dim() != dim {
            return Err(DetectError::Dimension {
                id: v.record_id.clone(),
                found: v.dim(),
                expected: dim,
            });
        }
        if v.values.iter().any(|x| !x.is_finite()) {
            return Err(DetectError::NonFinite(v.record_id.clone()));
        }
    }
    Ok(dim)
}

/// DBSCAN over `n` points given a symmetric distance function. Returns
/// assignments, roles and the cluster count.
pub(crate) fn cluster_indices(
    n: usize,
    eps: f64,
    min_samples: usize,
    dist: impl Fn(usize, usize) -> f64,
) -> (Vec<Option<usize>>, Vec<Role>, usize) {
    let mut neighbors: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i + 1..n {
            if dist(i, j) <= eps {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    let is_core: Vec<bool> = neighbors.iter().map(|nb| nb.len() >= min_samples).collect();

    let mut assignments: Vec<Option<usize>> = vec![None; n];
    let mut n_clusters = 0;
    let mut queue = Vec::new();
    for seed in 0..n {
        if assignments[seed].is_some() || !is_core[seed] {
            continue;
        }
        let cluster = n_clusters;
        n_clusters += 1;
        assignments[seed] = Some(cluster);
        queue.push(seed);
        while let Some(p) = queue.pop() {
            for &q in &neighbors[p] {
                if assignments[q].is_none() {
                    assignments[q] = Some(cluster);
                    if is_core[q] {
                        queue.push(q);
                    }
                }
            }
        }
    }

    let roles = (0..n)
        .map(|i| match (is_core[i], assignments[i]) {
            (true, _) => Role::Core,
            (false, Some(_)) => Role::Border,
            (false, None) => Role::Noise,
        })
        .collect();
    (assignments, roles, n_clusters)
}

/// DBSCAN with Euclidean distance. A point is core when at least
/// `min_samples` points (itself included) lie within distance `<= eps`.
/// Clusters are numbered in the order their first core point appears in
/// the input; a border point reachable from several clusters joins the one
/// expanded first.
pub fn dbscan(vectors: &[EmbeddingVector], eps: f64, min_samples: usize) -> Result<ClusteringResult, DetectError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(DetectError::Params(format!("eps must be positive, got {eps}")));
    }
    if min_samples == 0 {
        return Err(DetectError::Params("min_samples must be at least 1".into()));
    }
    check_vectors(vectors)?;
    let (assignments, roles, n_clusters) = cluster_indices(vectors.len(), eps, min_samples, |i, j| {
        euclidean(&vectors[i].values, &vectors[j].values)
    });
    Ok(ClusteringResult {
        ids: vectors.iter().map(|v| v.record_id.clone()).collect(),
        assignments,
        roles,
        params: DbscanParams { eps, min_samples },
        n_clusters,
    })
}
