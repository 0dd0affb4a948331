//! Fixed-dimension function embeddings.
//!
//! The default encoder is signed feature hashing over serialized AST paths:
//! each path string `p` is hashed with XXH64 (seeded with the run seed),
//! `h mod dim` selects the coordinate and bit 63 of `h` selects the sign
//! (set bit means -1). Counts are accumulated and the vector is scaled to
//! unit L2 norm. Externally trained context vectors can be imported
//! instead and are used unchanged.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use twox_hash::XxHash64;

use crate::astpath::{serialize_path, AstPath};

pub const DEFAULT_DIM: usize = 320;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding dimension must be at least 2, got {0}")]
    Dimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    Mismatch { left: usize, right: usize },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error("line {line}: vector has dimension {found}, expected {expected}")]
    InconsistentDim { line: usize, found: usize, expected: usize },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub record_id: String,
    pub values: Vec<f64>,
    /// All-zero vector (no paths, or hashed counts cancelled out).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub degenerate: bool,
}

impl EmbeddingVector {
    pub fn new(record_id: impl Into<String>, values: Vec<f64>) -> Self {
        let degenerate = values.iter().all(|v| *v == 0.0);
        EmbeddingVector {
            record_id: record_id.into(),
            values,
            degenerate,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Bucket index and sign for one serialized path.
pub fn hash_feature(path: &str, dim: usize, seed: u64) -> (usize, f64) {
    let h = XxHash64::oneshot(seed, path.as_bytes());
    let index = (h % dim as u64) as usize;
    let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
    (index, sign)
}

/// Signed feature-hashing embedding of one function's path multiset.
pub fn embed_hashed(record_id: &str, paths: &[AstPath], dim: usize, seed: u64) -> Result<EmbeddingVector, EmbedError> {
    if dim < 2 {
        return Err(EmbedError::Dimension(dim));
    }
    let mut values = vec![0.0; dim];
    for p in paths {
        let (i, sign) = hash_feature(&serialize_path(p), dim, seed);
        values[i] += sign;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(EmbeddingVector::new(record_id, values))
}

/// Euclidean distance.
pub fn pairwise_distance(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::Mismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(euclidean(&a.values, &b.values))
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Serialize, Deserialize)]
struct EmbeddingLine {
    id: String,
    vector: Vec<f64>,
}

/// Reads `{id, vector}` JSONL. All vectors must share one dimension and
/// ids must be unique.
pub fn import_embeddings(path: &Path) -> Result<BTreeMap<String, EmbeddingVector>, EmbedError> {
    let text = std::fs::read_to_string(path).map_err(|source| EmbedError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_embeddings(&text)
}

pub fn parse_embeddings(text: &str) -> Result<BTreeMap<String, EmbeddingVector>, EmbedError> {
    let mut out = BTreeMap::new();
    let mut dim = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: EmbeddingLine = serde_json::from_str(line).map_err(|e| EmbedError::BadLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        if parsed.vector.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::BadLine {
                line: line_no,
                reason: "non-finite component".into(),
            });
        }
        let expected = *dim.get_or_insert(parsed.vector.len());
        if parsed.vector.len() != expected {
            return Err(EmbedError::InconsistentDim {
                line: line_no,
                found: parsed.vector.len(),
                expected,
            });
        }
        if out.contains_key(&parsed.id) {
            return Err(EmbedError::DuplicateId {
                line: line_no,
                id: parsed.id,
            });
        }
        out.insert(parsed.id.clone(), EmbeddingVector::new(parsed.id, parsed.vector));
    }
    Ok(out)
}

/// Drops imported entries whose id is not in `known_ids`, returning one
/// warning per dropped id.
pub fn retain_known(imports: &mut BTreeMap<String, EmbeddingVector>, known_ids: &HashSet<&str>) -> Vec<String> {
    let unknown: Vec<String> = imports
        .keys()
        .filter(|id| !known_ids.contains(id.as_str()))
        .cloned()
        .collect();
    for id in &unknown {
        imports.remove(id);
    }
    unknown
        .into_iter()
        .map(|id| format!("imported embedding {id:?} has no matching record; ignored"))
        .collect()
}

pub fn export_embeddings<'a>(vectors: impl IntoIterator<Item = &'a EmbeddingVector>) -> String {
    crate::io::to_jsonl(vectors.into_iter().map(|v| EmbeddingLine {
        id: v.record_id.clone(),
        vector: v.values.clone(),
    }))
}
