use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// A metric value with a flag for inputs where the metric is undefined
/// (the value is then 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undefined: bool,
}

impl MetricValue {
    pub fn defined(value: f64) -> Self {
        MetricValue {
            value,
            undefined: false,
        }
    }

    pub fn undefined() -> Self {
        MetricValue {
            value: 0.0,
            undefined: true,
        }
    }

    pub fn get(self) -> Option<f64> {
        (!self.undefined).then_some(self.value)
    }
}

/// Fraction of injected records among the first `min(k, len)` entries.
pub fn precision_at_k<S: AsRef<str>>(ranked: &[S], positives: &HashSet<String>, k: usize) -> MetricValue {
    let cut = k.min(ranked.len());
    if cut == 0 {
        return MetricValue::undefined();
    }
    let found = ranked[..cut]
        .iter()
        .filter(|id| positives.contains(id.as_ref()))
        .count();
    MetricValue::defined(found as f64 / cut as f64)
}

/// Mean of precision@i over the positions `i` holding a positive.
pub fn average_precision<S: AsRef<str>>(ranked: &[S], positives: &HashSet<String>) -> MetricValue {
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, id) in ranked.iter().enumerate() {
        if positives.contains(id.as_ref()) {
            found += 1;
            sum += found as f64 / (i + 1) as f64;
        }
    }
    if found == 0 {
        MetricValue::undefined()
    } else {
        MetricValue::defined(sum / found as f64)
    }
}

/// True positive rate and outlier precision of a detected set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRates {
    pub tpr: MetricValue,
    pub outlier_precision: MetricValue,
}

pub fn detection_rates<S: AsRef<str>>(detected: &[S], positives: &HashSet<String>) -> DetectionRates {
    let detected: HashSet<&str> = detected.iter().map(|s| s.as_ref()).collect();
    let caught = detected.iter().filter(|id| positives.contains(**id)).count();
    let tpr = if positives.is_empty() {
        MetricValue::undefined()
    } else {
        MetricValue::defined(caught as f64 / positives.len() as f64)
    };
    let outlier_precision = if detected.is_empty() {
        MetricValue::undefined()
    } else {
        MetricValue::defined(caught as f64 / detected.len() as f64)
    };
    DetectionRates { tpr, outlier_precision }
}

pub fn tpr<S: AsRef<str>>(detected: &[S], positives: &HashSet<String>) -> MetricValue {
    detection_rates(detected, positives).tpr
}

/// 1-based ranks with ties sharing the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = mean;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation; undefined when either input is constant.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<MetricValue, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::Input(format!(
            "spearman inputs differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(EvalError::Input("spearman needs at least two pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(EvalError::Input("spearman inputs must be finite".into()));
    }
    Ok(match pearson(&average_ranks(xs), &average_ranks(ys)) {
        Some(rho) => MetricValue::defined(rho),
        None => MetricValue::undefined(),
    })
}
