//! ECOD: outlier scores from per-dimension empirical tail probabilities.

use super::dbscan::check_vectors;
use super::DetectError;
use crate::embed::EmbeddingVector;

/// Aggregated tail scores for one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcodComponents {
    pub left: f64,
    pub right: f64,
    pub auto: f64,
}

impl EcodComponents {
    pub fn score(&self) -> f64 {
        self.left.max(self.right).max(self.auto)
    }
}

/// Biased sample skewness `m3 / m2^1.5`; zero for constant columns.
pub(crate) fn skewness(column: &[f64]) -> f64 {
    let n = column.len() as f64;
    let mean = column.iter().sum::<f64>() / n;
    let m2 = column.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m3 = column.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}

/// Per-point left, right and skewness-selected tail sums.
pub fn ecod_components(vectors: &[EmbeddingVector]) -> Result<Vec<EcodComponents>, DetectError> {
    if vectors.len() < 2 {
        return Err(DetectError::TooFew {
            needed: 2,
            found: vectors.len(),
        });
    }
    let dim = check_vectors(vectors)?;
    let n = vectors.len();
    let nf = n as f64;
    let mut out = vec![
        EcodComponents {
            left: 0.0,
            right: 0.0,
            auto: 0.0
        };
        n
    ];
    let mut column = vec![0.0; n];
    let mut sorted = vec![0.0; n];
    for j in 0..dim {
        for (c, v) in column.iter_mut().zip(vectors) {
            *c = v.values[j];
        }
        sorted.copy_from_slice(&column);
        sorted.sort_by(f64::total_cmp);
        let use_left = skewness(&column) < 0.0;
        for (i, &x) in column.iter().enumerate() {
            let at_most = sorted.partition_point(|&s| s <= x);
            let at_least = n - sorted.partition_point(|&s| s < x);
            let left = -(at_most as f64 / nf).ln();
            let right = -(at_least as f64 / nf).ln();
            out[i].left += left;
            out[i].right += right;
            out[i].auto += if use_left { left } else { right };
        }
    }
    Ok(out)
}

/// ECOD outlier score per vector (input order); higher is more anomalous.
pub fn ecod_scores(vectors: &[EmbeddingVector]) -> Result<Vec<f64>, DetectError> {
    Ok(ecod_components(vectors)?.iter().map(EcodComponents::score).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(xs: &[f64]) -> Vec<EmbeddingVector> {
        xs.iter()
            .enumerate()
            .map(|(i, x)| EmbeddingVector::new(format!("p{i}"), vec![*x]))
            .collect()
    }

    #[test]
    fn three_point_fixture() {
        let comps = ecod_components(&column(&[1.0, 2.0, 100.0])).unwrap();
        let third = 3f64.ln();
        // point 100: left tail probability 1, right tail 1/3
        assert_eq!(comps[2].left, 0.0);
        assert!((comps[2].right - third).abs() < 1e-15);
        let scores: Vec<f64> = comps.iter().map(EcodComponents::score).collect();
        let max = scores.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(scores[2], max);
        assert!(scores[1] < scores[2]);
    }

    #[test]
    fn identical_points_score_equally() {
        let scores = ecod_scores(&column(&[4.0; 5])).unwrap();
        assert!(scores.iter().all(|s| *s == scores[0]));
        assert_eq!(scores[0], 0.0);
    }

    #[test]
    fn needs_two_points() {
        assert!(matches!(ecod_scores(&column(&[1.0])), Err(DetectError::TooFew { .. })));
    }

    #[test]
    fn skewness_sign() {
        assert!(skewness(&[1.0, 2.0, 100.0]) > 0.0);
        assert!(skewness(&[-100.0, 1.0, 2.0]) < 0.0);
        assert_eq!(skewness(&[3.0, 3.0]), 0.0);
    }
}
