//! Reference implementations used as test oracles. They follow the
//! textbook formulations literally and favor clarity over speed.

#![allow(dead_code)]

use injdetect_core::{EmbeddingVector, Role};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn vectors(points: &[Vec<f64>]) -> Vec<EmbeddingVector> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| EmbeddingVector::new(format!("p{i:03}"), p.clone()))
        .collect()
}

fn region_query(points: &[Vec<f64>], i: usize, eps: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&j| euclid(&points[i], &points[j]) <= eps)
        .collect()
}

/// Textbook DBSCAN: visit points in order, expand each new cluster from an
/// unvisited core point through a seed list.
pub fn brute_dbscan(points: &[Vec<f64>], eps: f64, min_samples: usize) -> (Vec<Option<usize>>, Vec<Role>) {
    let n = points.len();
    let mut visited = vec![false; n];
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for p in 0..n {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        let nb = region_query(points, p, eps);
        if nb.len() < min_samples {
            continue; // noise for now; may become a border point later
        }
        let c = next;
        next += 1;
        label[p] = Some(c);
        let mut seeds = nb;
        let mut k = 0;
        while k < seeds.len() {
            let q = seeds[k];
            k += 1;
            if !visited[q] {
                visited[q] = true;
                let nq = region_query(points, q, eps);
                if nq.len() >= min_samples {
                    seeds.extend(nq);
                }
            }
            if label[q].is_none() {
                label[q] = Some(c);
            }
        }
    }
    let roles = (0..n)
        .map(|i| {
            if region_query(points, i, eps).len() >= min_samples {
                Role::Core
            } else if label[i].is_some() {
                Role::Border
            } else {
                Role::Noise
            }
        })
        .collect();
    (label, roles)
}

/// Sample skewness with population moments.
pub fn skew(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return 0.0;
    }
    xs.iter().map(|x| ((x - mean) / var.sqrt()).powi(3)).sum::<f64>() / n
}

/// ECOD computed straight from the empirical CDFs by counting.
pub fn brute_ecod(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows.len();
    let d = rows[0].len();
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    let mut auto = vec![0.0; n];
    for j in 0..d {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        let negative_skew = skew(&col) < 0.0;
        for i in 0..n {
            let le = col.iter().filter(|&&x| x <= col[i]).count() as f64 / n as f64;
            let ge = col.iter().filter(|&&x| x >= col[i]).count() as f64 / n as f64;
            left[i] -= le.ln();
            right[i] -= ge.ln();
            auto[i] -= if negative_skew { le.ln() } else { ge.ln() };
        }
    }
    (0..n).map(|i| left[i].max(right[i]).max(auto[i])).collect()
}

/// AP by summing precision at every rank that holds a positive.
pub fn brute_ap(ranked: &[bool]) -> Option<f64> {
    let hits = ranked.iter().filter(|x| **x).count();
    if hits == 0 {
        return None;
    }
    let mut total = 0.0;
    for pos in 0..ranked.len() {
        if ranked[pos] {
            let above = ranked[..=pos].iter().filter(|x| **x).count();
            total += above as f64 / (pos + 1) as f64;
        }
    }
    Some(total / hits as f64)
}

/// Random 2-D point set: a few Gaussian-ish blobs plus uniform noise, with
/// coordinates on a 1/64 grid so that distances between translated copies
/// are computed exactly.
pub fn random_blobs(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let q = |x: f64| (x * 64.0).round() / 64.0;
    let centers: Vec<(f64, f64)> = (0..rng.gen_range(1..5))
        .map(|_| (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)))
        .collect();
    (0..n)
        .map(|_| {
            if rng.gen_bool(0.8) {
                let (cx, cy) = centers[rng.gen_range(0..centers.len())];
                vec![q(cx + rng.gen_range(-0.8..0.8)), q(cy + rng.gen_range(-0.8..0.8))]
            } else {
                vec![q(rng.gen_range(-7.0..7.0)), q(rng.gen_range(-7.0..7.0))]
            }
        })
        .collect()
}
