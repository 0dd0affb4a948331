//! Per-function-type anomaly detection: DBSCAN with border-distance
//! ranking, and ECOD as a baseline.

mod dbscan;
mod ecod;
mod rank;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub(crate) use dbscan::cluster_indices;
pub use dbscan::{dbscan, ClusteringResult, DbscanParams, Role};
pub use ecod::{ecod_components, ecod_scores, EcodComponents};
pub use rank::{rank_outliers, score_against, AnomalyRanking, RankedEntry};

use crate::embed::EmbeddingVector;

pub const DEFAULT_EPS: f64 = 0.3;
pub const DEFAULT_MIN_SAMPLES: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error("no vectors to cluster")]
    Empty,
    #[error("record {0:?} has a non-finite vector component")]
    NonFinite(String),
    #[error("record {id:?} has dimension {found}, expected {expected}")]
    Dimension { id: String, found: usize, expected: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("too few vectors: need {needed}, found {found}")]
    TooFew { needed: usize, found: usize },
    #[error("unknown detection method {0:?} (expected dbscan or ecod)")]
    UnknownMethod(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Dbscan,
    Ecod,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dbscan => "dbscan",
            Method::Ecod => "ecod",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = DetectError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dbscan" => Ok(Method::Dbscan),
            "ecod" => Ok(Method::Ecod),
            other => Err(DetectError::UnknownMethod(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectParams {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_min_samples")]
    pub min_samples: usize,
}

fn default_eps() -> f64 {
    DEFAULT_EPS
}

fn default_min_samples() -> usize {
    DEFAULT_MIN_SAMPLES
}

impl Default for DetectParams {
    fn default() -> Self {
        DetectParams {
            method: Method::Dbscan,
            eps: DEFAULT_EPS,
            min_samples: DEFAULT_MIN_SAMPLES,
        }
    }
}

/// Detection outcome for one function type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeDetection {
    pub params: DetectParams,
    pub ranking: AnomalyRanking,
    /// Present for DBSCAN.
    pub clustering: Option<ClusteringResult>,
}

/// One row of the per-type detection JSONL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionLine {
    pub record_id: String,
    pub rank: usize,
    #[serde(with = "rank::finite_or_null")]
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<Role>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
    pub method: Method,
    pub params: DbscanParams,
}

impl TypeDetection {
    /// Ranked entries as JSONL rows, in ranking order.
    pub fn lines(&self) -> Vec<DetectionLine> {
        let params = DbscanParams {
            eps: self.params.eps,
            min_samples: self.params.min_samples,
        };
        self.ranking
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (role, cluster) = match &self.clustering {
                    Some(c) => match c.ids.iter().position(|id| *id == e.record_id) {
                        Some(p) => (Some(c.roles[p]), c.assignments[p]),
                        None => (None, None),
                    },
                    None => (None, None),
                };
                DetectionLine {
                    record_id: e.record_id.clone(),
                    rank: i + 1,
                    score: e.score,
                    role,
                    cluster,
                    method: self.params.method,
                    params,
                }
            })
            .collect()
    }
}

/// Runs the configured detector on one function type's vectors.
pub fn detect_function_type(vectors: &[EmbeddingVector], params: &DetectParams) -> Result<TypeDetection, DetectError> {
    match params.method {
        Method::Dbscan => {
            if vectors.len() < params.min_samples {
                return Err(DetectError::TooFew {
                    needed: params.min_samples,
                    found: vectors.len(),
                });
            }
            let clustering = dbscan(vectors, params.eps, params.min_samples)?;
            let ranking = rank_outliers(&clustering, vectors)?;
            Ok(TypeDetection {
                params: *params,
                ranking,
                clustering: Some(clustering),
            })
        }
        Method::Ecod => {
            let scores = ecod_scores(vectors)?;
            let ranking = AnomalyRanking::from_scores(vectors.iter().map(|v| v.record_id.clone()), scores);
            Ok(TypeDetection {
                params: *params,
                ranking,
                clustering: None,
            })
        }
    }
}
