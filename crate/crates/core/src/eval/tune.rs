//! Cross-validated DBSCAN parameter search.
//!
//! Records of each tuning set are split into seeded folds, stratified by
//! label. For every fold, DBSCAN is fitted on the other folds and each
//! held-out record is classified: it is an outlier when no fitted core point
//! lies within `eps`, and its score is the distance to the nearest fitted
//! border point (core points if there are none). TPR, AP and outlier
//! precision are computed on the held-out labels and averaged over folds and
//! sets.

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{average_precision, detection_rates};
use super::EvalError;
use crate::detect::{cluster_indices, Role};
use crate::embed::{euclidean, EmbeddingVector};

/// Vectors of one function type (or type/attack cell) with ground truth.
#[derive(Debug, Clone)]
pub struct TuningSet {
    pub name: String,
    pub vectors: Vec<EmbeddingVector>,
    pub positives: HashSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub eps: Vec<f64>,
    pub min_samples: Vec<usize>,
}

impl Default for TuningGrid {
    /// eps 0.2..=1.0 in steps of 0.1, min_samples 2..=10.
    fn default() -> Self {
        TuningGrid {
            eps: (2..=10).map(|i| i as f64 / 10.0).collect(),
            min_samples: (2..=10).collect(),
        }
    }
}

impl TuningGrid {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.eps.is_empty() || self.min_samples.is_empty() {
            return Err(EvalError::Input("tuning grid is empty".into()));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(EvalError::Input(format!("grid eps must be positive, got {e}")));
        }
        if self.min_samples.contains(&0) {
            return Err(EvalError::Input("grid min_samples must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-fold metric values of one grid cell, one entry per evaluated
/// (set, fold) pair. Folds without positives have no TPR entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FoldMetrics {
    pub tpr: Vec<f64>,
    pub ap: Vec<f64>,
    pub outlier_precision: Vec<f64>,
    pub noise_fraction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub eps: f64,
    pub min_samples: usize,
    pub tpr: f64,
    pub ap: f64,
    pub outlier_precision: f64,
    /// Mean fraction of held-out records classified as outliers.
    pub noise_fraction: f64,
    pub folds_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub folds: usize,
    pub seed: u64,
    pub grid: Vec<GridCell>,
    pub best: GridCell,
    /// Sets left out because they have fewer records than folds.
    pub skipped: Vec<String>,
}

impl TuningReport {
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "eps",
            "min_samples",
            "tpr",
            "ap",
            "outlier_precision",
            "noise_fraction",
            "folds_evaluated",
        ])?;
        for c in &self.grid {
            w.write_record([
                c.eps.to_string(),
                c.min_samples.to_string(),
                c.tpr.to_string(),
                c.ap.to_string(),
                c.outlier_precision.to_string(),
                c.noise_fraction.to_string(),
                c.folds_evaluated.to_string(),
            ])?;
        }
        super::finish_csv(w)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// A set prepared for tuning: folds and the full distance matrix.
struct Prepared<'a> {
    set: &'a TuningSet,
    fold_of: Vec<usize>,
    dist: Vec<f64>,
}

impl Prepared<'_> {
    fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.set.vectors.len() + j]
    }
}

/// Seeded fold index per record, stratified by label: positives are dealt
/// round-robin first, negatives continue the rotation.
pub fn assign_folds(set: &TuningSet, folds: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) =
        (0..set.vectors.len()).partition(|&i| set.positives.contains(&set.vectors[i].record_id));
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut fold_of = vec![0; set.vectors.len()];
    for (slot, i) in pos.into_iter().chain(neg).enumerate() {
        fold_of[i] = slot % folds;
    }
    fold_of
}

fn prepare<'a>(set: &'a TuningSet, folds: usize, rng: &mut ChaCha8Rng) -> Prepared<'a> {
    let n = set.vectors.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = euclidean(&set.vectors[i].values, &set.vectors[j].values);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    Prepared {
        set,
        fold_of: assign_folds(set, folds, rng),
        dist,
    }
}

fn evaluate_fold(p: &Prepared, fold: usize, eps: f64, min_samples: usize, out: &mut FoldMetrics) {
    let (held_out, held_in): (Vec<usize>, Vec<usize>) = (0..p.fold_of.len()).partition(|&i| p.fold_of[i] == fold);
    if held_out.is_empty() {
        return;
    }
    let (_, roles, _) = cluster_indices(held_in.len(), eps, min_samples, |a, b| p.d(held_in[a], held_in[b]));
    let pick = |role: Role| -> Vec<usize> {
        held_in
            .iter()
            .zip(&roles)
            .filter(|(_, r)| **r == role)
            .map(|(i, _)| *i)
            .collect()
    };
    let core = pick(Role::Core);
    let border = pick(Role::Border);
    let refs = if border.is_empty() { &core } else { &border };

    let mut detected: Vec<(f64, &str)> = held_out
        .iter()
        .filter(|&&i| !core.iter().any(|&c| p.d(i, c) <= eps))
        .map(|&i| {
            let score = refs.iter().map(|&r| p.d(i, r)).fold(f64::INFINITY, f64::min);
            (score, p.set.vectors[i].record_id.as_str())
        })
        .collect();
    detected.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    let ranked: Vec<&str> = detected.iter().map(|(_, id)| *id).collect();

    let fold_positives: HashSet<String> = held_out
        .iter()
        .map(|&i| &p.set.vectors[i].record_id)
        .filter(|id| p.set.positives.contains(*id))
        .cloned()
        .collect();
    let rates = detection_rates(&ranked, &fold_positives);
    if let Some(t) = rates.tpr.get() {
        out.tpr.push(t);
    }
    out.outlier_precision.push(rates.outlier_precision.value);
    out.ap.push(average_precision(&ranked, &fold_positives).value);
    out.noise_fraction.push(ranked.len() as f64 / held_out.len() as f64);
}

fn evaluate_cell(prepared: &[Prepared], folds: usize, eps: f64, min_samples: usize) -> FoldMetrics {
    let mut out = FoldMetrics::default();
    for p in prepared {
        for fold in 0..folds {
            evaluate_fold(p, fold, eps, min_samples, &mut out);
        }
    }
    out
}

/// Per-fold metrics of a single grid cell.
pub fn cell_fold_metrics(
    sets: &[TuningSet],
    eps: f64,
    min_samples: usize,
    folds: usize,
    seed: u64,
) -> Result<FoldMetrics, EvalError> {
    let (prepared, _) = prepare_all(sets, folds, seed)?;
    Ok(evaluate_cell(&prepared, folds, eps, min_samples))
}

fn prepare_all(sets: &[TuningSet], folds: usize, seed: u64) -> Result<(Vec<Prepared<'_>>, Vec<String>), EvalError> {
    if folds < 2 {
        return Err(EvalError::Input(format!("folds must be at least 2, got {folds}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut skipped = Vec::new();
    let mut prepared = Vec::new();
    for set in sets {
        if set.vectors.len() < folds {
            skipped.push(format!(
                "{}: {} records, fewer than {folds} folds",
                set.name,
                set.vectors.len()
            ));
            continue;
        }
        prepared.push(prepare(set, folds, &mut rng));
    }
    if prepared.is_empty() {
        return Err(EvalError::Input("no set is large enough to fold".into()));
    }
    Ok((prepared, skipped))
}

fn better(a: &GridCell, b: &GridCell) -> bool {
    a.outlier_precision
        .total_cmp(&b.outlier_precision)
        .then(a.tpr.total_cmp(&b.tpr))
        .then(b.eps.total_cmp(&a.eps))
        .then(b.min_samples.cmp(&a.min_samples))
        == Ordering::Greater
}

/// Evaluates every (eps, min_samples) pair of the grid. The best cell
/// maximizes outlier precision, then TPR; remaining ties prefer smaller eps
/// and then smaller min_samples.
pub fn tune_dbscan(sets: &[TuningSet], grid: &TuningGrid, folds: usize, seed: u64) -> Result<TuningReport, EvalError> {
    grid.validate()?;
    let (prepared, skipped) = prepare_all(sets, folds, seed)?;
    let mut cells = Vec::with_capacity(grid.eps.len() * grid.min_samples.len());
    for &eps in &grid.eps {
        for &min_samples in &grid.min_samples {
            let m = evaluate_cell(&prepared, folds, eps, min_samples);
            cells.push(GridCell {
                eps,
                min_samples,
                tpr: mean(&m.tpr),
                ap: mean(&m.ap),
                outlier_precision: mean(&m.outlier_precision),
                noise_fraction: mean(&m.noise_fraction),
                folds_evaluated: m.ap.len(),
            });
        }
    }
    let mut best = &cells[0];
    for c in &cells[1..] {
        if better(c, best) {
            best = c;
        }
    }
    Ok(TuningReport {
        folds,
        seed,
        best: best.clone(),
        grid: cells,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_set() -> TuningSet {
        // twenty tight points and two far ones
        let mut vectors: Vec<EmbeddingVector> = (0..20)
            .map(|i| EmbeddingVector::new(format!("b{i:02}"), vec![i as f64 * 0.01, 0.0]))
            .collect();
        vectors.push(EmbeddingVector::new("m0", vec![5.0, 5.0]));
        vectors.push(EmbeddingVector::new("m1", vec![-5.0, 5.0]));
        TuningSet {
            name: "t".into(),
            vectors,
            positives: ["m0".to_string(), "m1".to_string()].into_iter().collect(),
        }
    }

    #[test]
    fn default_grid_has_81_cells() {
        let g = TuningGrid::default();
        assert_eq!(g.eps.len() * g.min_samples.len(), 81);
        assert_eq!(g.eps[1], 0.3);
    }

    #[test]
    fn separable_set_is_perfect() {
        let grid = TuningGrid {
            eps: vec![0.3],
            min_samples: vec![3],
        };
        let r = tune_dbscan(&[line_set()], &grid, 2, 1).unwrap();
        assert_eq!(r.grid.len(), 1);
        assert_eq!(r.best.tpr, 1.0);
        assert_eq!(r.best.outlier_precision, 1.0);
        assert_eq!(r.best.ap, 1.0);
    }

    #[test]
    fn folds_are_stratified() {
        let set = line_set();
        let folds = assign_folds(&set, 2, &mut ChaCha8Rng::seed_from_u64(3));
        assert_ne!(folds[20], folds[21]);
        assert_eq!(folds.iter().filter(|f| **f == 0).count(), 11);
    }

    #[test]
    fn small_sets_are_skipped() {
        let mut small = line_set();
        small.name = "small".into();
        small.vectors.truncate(3);
        let grid = TuningGrid {
            eps: vec![0.3],
            min_samples: vec![3],
        };
        let r = tune_dbscan(&[line_set(), small], &grid, 5, 1).unwrap();
        assert_eq!(r.skipped.len(), 1);
        assert!(tune_dbscan(&[line_set()], &grid, 1, 1).is_err());
        let empty = TuningGrid {
            eps: vec![],
            min_samples: vec![3],
        };
        assert!(tune_dbscan(&[line_set()], &empty, 2, 1).is_err());
    }

    #[test]
    fn best_prefers_precision_then_tpr() {
        let cell = |eps, p, t| GridCell {
            eps,
            min_samples: 2,
            tpr: t,
            ap: 0.0,
            outlier_precision: p,
            noise_fraction: 0.0,
            folds_evaluated: 1,
        };
        assert!(better(&cell(0.5, 0.9, 0.1), &cell(0.3, 0.8, 1.0)));
        assert!(better(&cell(0.5, 0.9, 0.5), &cell(0.3, 0.9, 0.1)));
        assert!(better(&cell(0.3, 0.9, 0.5), &cell(0.5, 0.9, 0.5)));
    }
}
