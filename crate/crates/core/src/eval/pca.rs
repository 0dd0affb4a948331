use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::embed::EmbeddingVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub points: Vec<ProjectedPoint>,
    /// Variance captured by each component.
    pub explained_variance: [f64; 2],
    /// The data has rank < 2; the missing components are zero.
    pub rank_deficient: bool,
}

/// Eigenvalues below this fraction of the total variance count as zero.
const RANK_TOL: f64 = 1e-10;

/// Projects vectors onto their top two principal directions. Each
/// direction's first non-negligible loading is made positive.
pub fn pca_2d(vectors: &[EmbeddingVector]) -> Result<Projection, EvalError> {
    let n = vectors.len();
    if n < 2 {
        return Err(EvalError::Input(format!("PCA needs at least 2 vectors, got {n}")));
    }
    let d = vectors[0].dim();
    if d < 2 {
        return Err(EvalError::Input(format!("PCA needs dimension >= 2, got {d}")));
    }
    if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
        return Err(EvalError::Input(format!(
            "record {:?} has dimension {}, expected {d}",
            v.record_id,
            v.dim()
        )));
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| vectors[i].values[j]);
    let mean = x.row_mean();
    for mut row in x.row_iter_mut() {
        row -= &mean;
    }

    // Eigen-decompose whichever of X^T X and X X^T is smaller; both share
    // their nonzero spectrum.
    let use_gram = n < d;
    let sym = if use_gram {
        &x * x.transpose()
    } else {
        x.transpose() * &x
    };
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let tol = RANK_TOL * total.max(f64::MIN_POSITIVE);

    let mut coords = [vec![0.0; n], vec![0.0; n]];
    let mut explained = [0.0; 2];
    let mut rank_deficient = false;
    for c in 0..2 {
        let lambda = eig.eigenvalues[order[c]];
        if total <= 0.0 || lambda <= tol {
            rank_deficient = true;
            continue;
        }
        let vec = eig.eigenvectors.column(order[c]).into_owned();
        let mut loading: DVector<f64> = if use_gram {
            let l = x.transpose() * vec;
            let norm = l.norm();
            l / norm
        } else {
            vec
        };
        let scale = loading.amax();
        if let Some(first) = loading.iter().find(|v| v.abs() > 1e-9 * scale) {
            if *first < 0.0 {
                loading.neg_mut();
            }
        }
        let proj = &x * loading;
        coords[c] = proj.iter().copied().collect();
        explained[c] = lambda / (n as f64 - 1.0);
    }

    let points = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| ProjectedPoint {
            id: v.record_id.clone(),
            x: coords[0][i],
            y: coords[1][i],
        })
        .collect();
    Ok(Projection {
        points,
        explained_variance: explained,
        rank_deficient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_are_flagged() {
        let vs: Vec<EmbeddingVector> = (0..4)
            .map(|i| EmbeddingVector::new(format!("p{i}"), vec![i as f64, 2.0 * i as f64, 0.0]))
            .collect();
        let p = pca_2d(&vs).unwrap();
        assert!(p.rank_deficient);
        assert!(p.points.iter().all(|q| q.y == 0.0));
        let d = (p.points[3].x - p.points[0].x).abs();
        assert!((d - 3.0 * 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn largest_variance_axis_comes_first() {
        let vs: Vec<EmbeddingVector> = [(-3.0, 0.5), (3.0, 0.5), (-1.0, -0.5), (1.0, -0.5)]
            .iter()
            .enumerate()
            .map(|(i, (a, b))| EmbeddingVector::new(format!("p{i}"), vec![*b, *a]))
            .collect();
        let p = pca_2d(&vs).unwrap();
        assert!(!p.rank_deficient);
        assert!(p.explained_variance[0] > p.explained_variance[1]);
        assert!(p.points[1].x > p.points[0].x);
    }

    #[test]
    fn duplicates_share_coordinates() {
        let vs = vec![
            EmbeddingVector::new("a", vec![1.0, 2.0, 3.0]),
            EmbeddingVector::new("b", vec![1.0, 2.0, 3.0]),
            EmbeddingVector::new("c", vec![0.0, -1.0, 4.0]),
            EmbeddingVector::new("d", vec![2.0, 0.0, 1.0]),
        ];
        let p = pca_2d(&vs).unwrap();
        assert_eq!(p.points[0].x, p.points[1].x);
        assert_eq!(p.points[0].y, p.points[1].y);
    }

    #[test]
    fn rejects_tiny_inputs() {
        assert!(pca_2d(&[EmbeddingVector::new("a", vec![1.0, 2.0])]).is_err());
    }
}
