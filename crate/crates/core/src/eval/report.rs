use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::metrics::{average_precision, detection_rates, precision_at_k, spearman_rho};
use super::EvalError;
use crate::detect::{AnomalyRanking, Method};

/// Ranking and ground truth of one (function type, attack) cell.
#[derive(Debug, Clone)]
pub struct CellInput {
    pub function_name: String,
    pub attack: String,
    pub ranking: AnomalyRanking,
    /// Records the detector flags as anomalous (the full DBSCAN noise set,
    /// or the top of an ECOD ranking).
    pub detected: Vec<String>,
    pub positives: HashSet<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub precision_at_k: BTreeMap<usize, f64>,
    pub ap: f64,
    pub tpr: f64,
    pub outlier_precision: f64,
    pub ranking_length: usize,
    pub positives: usize,
    /// Metrics that were undefined for this cell and reported as 0.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undefined: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanPair {
    pub function_name: String,
    /// Mean TPR over the type's attack cells.
    pub detection_rate: f64,
    pub implementations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpearmanSummary {
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undefined: bool,
    pub pairs: Vec<SpearmanPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub k_max: usize,
    pub per_type: BTreeMap<String, BTreeMap<String, CellMetrics>>,
    pub mean_precision_at_k: BTreeMap<usize, f64>,
    pub mean_ap: f64,
    pub mean_tpr: f64,
    pub spearman: SpearmanSummary,
    /// Snapshot of the run configuration.
    pub params: serde_json::Value,
}

pub fn cell_metrics(cell: &CellInput, k_max: usize) -> CellMetrics {
    let ranked = cell.ranking.ids();
    let mut undefined = Vec::new();
    let mut precision = BTreeMap::new();
    for k in 1..=k_max {
        let p = precision_at_k(&ranked, &cell.positives, k);
        precision.insert(k, p.value);
        if p.undefined && undefined.is_empty() {
            undefined.push("precision_at_k".to_string());
        }
    }
    let ap = average_precision(&ranked, &cell.positives);
    if ap.undefined {
        undefined.push("ap".into());
    }
    let rates = detection_rates(&cell.detected, &cell.positives);
    if rates.tpr.undefined {
        undefined.push("tpr".into());
    }
    if rates.outlier_precision.undefined {
        undefined.push("outlier_precision".into());
    }
    CellMetrics {
        precision_at_k: precision,
        ap: ap.value,
        tpr: rates.tpr.value,
        outlier_precision: rates.outlier_precision.value,
        ranking_length: ranked.len(),
        positives: cell.positives.len(),
        undefined,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Builds the evaluation report. Means are unweighted over cells;
/// Spearman pairs each type's mean TPR with its implementation count.
pub fn evaluate(
    cells: &[CellInput],
    implementations: &BTreeMap<String, usize>,
    k_max: usize,
    method: Method,
    params: serde_json::Value,
) -> Result<EvalReport, EvalError> {
    if k_max == 0 {
        return Err(EvalError::Input("k_max must be at least 1".into()));
    }
    let mut per_type: BTreeMap<String, BTreeMap<String, CellMetrics>> = BTreeMap::new();
    for cell in cells {
        let m = cell_metrics(cell, k_max);
        if per_type
            .entry(cell.function_name.clone())
            .or_default()
            .insert(cell.attack.clone(), m)
            .is_some()
        {
            return Err(EvalError::Input(format!(
                "duplicate cell {}/{}",
                cell.function_name, cell.attack
            )));
        }
    }
    let all = || per_type.values().flat_map(|m| m.values());
    let mean_precision_at_k = (1..=k_max)
        .map(|k| (k, mean(all().map(|c| c.precision_at_k[&k]))))
        .collect();

    let pairs: Vec<SpearmanPair> = per_type
        .iter()
        .map(|(name, attacks)| SpearmanPair {
            function_name: name.clone(),
            detection_rate: mean(attacks.values().map(|c| c.tpr)),
            implementations: implementations.get(name).copied().unwrap_or(0),
        })
        .collect();
    let spearman = if pairs.len() < 2 {
        SpearmanSummary {
            rho: None,
            undefined: true,
            pairs,
        }
    } else {
        let xs: Vec<f64> = pairs.iter().map(|p| p.detection_rate).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.implementations as f64).collect();
        let rho = spearman_rho(&xs, &ys)?;
        SpearmanSummary {
            rho: rho.get(),
            undefined: rho.undefined,
            pairs,
        }
    };

    Ok(EvalReport {
        method,
        k_max,
        mean_ap: mean(all().map(|c| c.ap)),
        mean_tpr: mean(all().map(|c| c.tpr)),
        mean_precision_at_k,
        per_type,
        spearman,
        params,
    })
}

impl EvalReport {
    /// Mean precision@k over the cells of one attack.
    pub fn attack_mean_precision(&self, attack: &str, k: usize) -> Option<f64> {
        let vals: Vec<f64> = self
            .per_type
            .values()
            .filter_map(|m| m.get(attack))
            .filter_map(|c| c.precision_at_k.get(&k).copied())
            .collect();
        (!vals.is_empty()).then(|| mean(vals.into_iter()))
    }

    /// One row per type x attack x k.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "function_name",
            "attack_type",
            "k",
            "precision_at_k",
            "ap",
            "tpr",
            "outlier_precision",
        ])?;
        for (name, attacks) in &self.per_type {
            for (attack, c) in attacks {
                for (k, p) in &c.precision_at_k {
                    w.write_record([
                        name.clone(),
                        attack.clone(),
                        k.to_string(),
                        p.to_string(),
                        c.ap.to_string(),
                        c.tpr.to_string(),
                        c.outlier_precision.to_string(),
                    ])?;
                }
            }
        }
        super::finish_csv(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(name: &str, attack: &str, ranked: &[&str], positives: &[&str]) -> CellInput {
        let n = ranked.len();
        CellInput {
            function_name: name.into(),
            attack: attack.into(),
            ranking: AnomalyRanking::from_scores(ranked.iter().map(|s| s.to_string()), (0..n).map(|i| (n - i) as f64)),
            detected: ranked.iter().map(|s| s.to_string()).collect(),
            positives: positives.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn means_are_over_cells() {
        let cells = vec![
            cell("get", "a", &["m", "b"], &["m"]),
            cell("set", "a", &["b", "m"], &["m"]),
        ];
        let counts = BTreeMap::from([("get".to_string(), 5), ("set".to_string(), 9)]);
        let r = evaluate(&cells, &counts, 2, Method::Dbscan, serde_json::Value::Null).unwrap();
        assert_eq!(r.mean_precision_at_k[&1], 0.5);
        assert_eq!(r.mean_precision_at_k[&2], 0.5);
        assert_eq!(r.mean_ap, 0.75);
        assert!(r.spearman.undefined);
        assert_eq!(r.attack_mean_precision("a", 1), Some(0.5));
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 1 + 2 * 2);
    }

    #[test]
    fn empty_ranking_is_flagged() {
        let c = cell_metrics(&cell("get", "a", &[], &["m"]), 3);
        assert_eq!(c.precision_at_k[&3], 0.0);
        assert!(c.undefined.contains(&"precision_at_k".to_string()));
        assert!(c.undefined.contains(&"outlier_precision".to_string()));
    }
}
