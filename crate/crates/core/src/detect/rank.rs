use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::dbscan::{ClusteringResult, Role};
use super::DetectError;
use crate::embed::{euclidean, EmbeddingVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub record_id: String,
    /// Higher is more anomalous. Infinite scores serialize as `null`.
    #[serde(with = "finite_or_null")]
    pub score: f64,
}

/// Records ordered by decreasing anomaly score, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnomalyRanking {
    pub entries: Vec<RankedEntry>,
    /// Every point was noise, so no reference set existed.
    #[serde(default)]
    pub all_noise: bool,
    /// No border points existed; distances were taken to core points.
    #[serde(default)]
    pub fallback_to_core: bool,
}

impl AnomalyRanking {
    pub fn from_scores(ids: impl IntoIterator<Item = String>, scores: impl IntoIterator<Item = f64>) -> Self {
        let mut entries: Vec<RankedEntry> = ids
            .into_iter()
            .zip(scores)
            .map(|(record_id, score)| RankedEntry { record_id, score })
            .collect();
        entries.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.record_id.cmp(&b.record_id))
        });
        AnomalyRanking {
            entries,
            all_noise: false,
            fallback_to_core: false,
        }
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.record_id.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reference points for outlier distances: border points, or core points
/// when there are none. The flag reports the fallback.
fn reference_points<'a>(clustering: &ClusteringResult, training: &'a [EmbeddingVector]) -> (Vec<&'a [f64]>, bool) {
    let pick = |role: Role| -> Vec<&'a [f64]> {
        training
            .iter()
            .zip(&clustering.roles)
            .filter(|(_, r)| **r == role)
            .map(|(v, _)| v.values.as_slice())
            .collect()
    };
    let border = pick(Role::Border);
    if border.is_empty() {
        (pick(Role::Core), true)
    } else {
        (border, false)
    }
}

fn min_distance(refs: &[&[f64]], point: &[f64]) -> f64 {
    refs.iter().map(|r| euclidean(r, point)).fold(f64::INFINITY, f64::min)
}

/// Outlier score of an arbitrary point against a fitted clustering:
/// distance to the nearest border point (core if no border points exist,
/// `+inf` if everything was noise).
pub fn score_against(clustering: &ClusteringResult, training: &[EmbeddingVector], point: &[f64]) -> f64 {
    let (refs, _) = reference_points(clustering, training);
    min_distance(&refs, point)
}

/// Ranks the noise points of a clustering by distance to the nearest border
/// point. Only noise points appear in the ranking.
pub fn rank_outliers(
    clustering: &ClusteringResult,
    vectors: &[EmbeddingVector],
) -> Result<AnomalyRanking, DetectError> {
    if vectors.len() != clustering.ids.len() || vectors.iter().zip(&clustering.ids).any(|(v, id)| &v.record_id != id) {
        return Err(DetectError::Params("vectors do not match the clustering input".into()));
    }
    let (refs, fallback) = reference_points(clustering, vectors);
    let all_noise = refs.is_empty();
    let noise: Vec<usize> = clustering.noise_indices().collect();
    let mut ranking = AnomalyRanking::from_scores(
        noise.iter().map(|&i| clustering.ids[i].clone()),
        noise.iter().map(|&i| min_distance(&refs, &vectors[i].values)),
    );
    ranking.all_noise = all_noise;
    ranking.fallback_to_core = fallback && !all_noise;
    Ok(ranking)
}

pub(crate) mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::dbscan;

    fn points(xs: &[f64]) -> Vec<EmbeddingVector> {
        xs.iter()
            .enumerate()
            .map(|(i, x)| EmbeddingVector::new(format!("p{i}"), vec![*x]))
            .collect()
    }

    #[test]
    fn noise_scored_by_nearest_border() {
        let v = points(&[0.0, 0.2, 0.4, 0.6, 3.0, -2.0]);
        let c = dbscan(&v, 0.25, 3).unwrap();
        let r = rank_outliers(&c, &v).unwrap();
        assert_eq!(r.ids(), vec!["p4", "p5"]);
        assert!((r.entries[0].score - 2.4).abs() < 1e-12);
        assert!((r.entries[1].score - 2.0).abs() < 1e-12);
        assert!(!r.fallback_to_core && !r.all_noise);
    }

    #[test]
    fn falls_back_to_core_without_border() {
        let v = points(&[0.0, 0.1, 0.2, 5.0]);
        let c = dbscan(&v, 0.3, 3).unwrap();
        let r = rank_outliers(&c, &v).unwrap();
        assert!(r.fallback_to_core);
        assert!((r.entries[0].score - 4.8).abs() < 1e-12);
    }

    #[test]
    fn all_noise_gives_infinite_scores_serialized_as_null() {
        let v = points(&[0.0, 10.0, 20.0]);
        let c = dbscan(&v, 0.5, 2).unwrap();
        let r = rank_outliers(&c, &v).unwrap();
        assert!(r.all_noise);
        assert_eq!(r.ids(), vec!["p0", "p1", "p2"]);
        let json = serde_json::to_string(&r.entries[0]).unwrap();
        assert_eq!(json, r#"{"record_id":"p0","score":null}"#);
        let back: RankedEntry = serde_json::from_str(&json).unwrap();
        assert!(back.score.is_infinite());
    }

    #[test]
    fn ties_break_by_id() {
        let r = AnomalyRanking::from_scores(["b".into(), "a".into(), "c".into()], [1.0, 1.0, 2.0]);
        assert_eq!(r.ids(), vec!["c", "a", "b"]);
    }
}
