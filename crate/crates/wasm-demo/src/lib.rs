//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string; the page parses it. The plain Rust
//! functions behind the exports are public so they can be tested natively.

use std::cell::OnceCell;
use std::collections::HashSet;

use injdetect_core::config::EmbeddingSection;
use injdetect_core::corpus::{parse_corpus, CorpusFormat};
use injdetect_core::eval::{average_precision, pca_2d, precision_at_k};
use injdetect_core::pipeline::embed_source;
use injdetect_core::synth::{function_names, synthetic_corpus_jsonl, SYNTH_SEED};
use injdetect_core::{
    dbscan, embed_hashed, extract_ast_paths, inject_function, make_payload, normalize_source, parse_function,
    rank_outliers, serialize_path, simulate_campaign, AttackType, CampaignConfig, CorpusIndex, EmbeddingVector,
    FunctionRecord, Role,
};
use serde::Serialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Paths beyond this many are counted but not listed.
const MAX_LISTED_PATHS: usize = 400;

thread_local! {
    static CORPUS: OnceCell<CorpusIndex> = const { OnceCell::new() };
}

fn with_corpus<T>(f: impl FnOnce(&CorpusIndex) -> T) -> T {
    CORPUS.with(|cell| {
        let index = cell.get_or_init(|| {
            parse_corpus(&synthetic_corpus_jsonl(SYNTH_SEED), "synthetic", CorpusFormat::Jsonl)
                .expect("built-in corpus parses")
                .0
        });
        f(index)
    })
}

fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Option<f64> {
    let (na, nb) = (a.norm(), b.norm());
    (na > 0.0 && nb > 0.0).then(|| a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

fn attack(name: &str) -> Result<AttackType, String> {
    name.parse()
}

/// Parses one function and lists its AST paths under the given limits.
pub fn analyze(source: &str, max_path_length: usize, max_path_width: usize) -> Result<Value, String> {
    let normalized = normalize_source(source);
    let tree = parse_function(&normalized).map_err(|e| e.to_string())?;
    let paths = extract_ast_paths(&tree, max_path_length, max_path_width);
    let emb = EmbeddingSection::default();
    let vector = embed_hashed("input", &paths, emb.dim, emb.seed).map_err(|e| e.to_string())?;
    let listed: Vec<String> = paths.iter().take(MAX_LISTED_PATHS).map(serialize_path).collect();
    Ok(json!({
        "normalized": normalized,
        "tree": tree,
        "leaves": tree.leaf_count(),
        "path_count": paths.len(),
        "paths": listed,
        "active_dims": vector.values.iter().filter(|v| **v != 0.0).count(),
        "dim": vector.dim(),
        "degenerate": vector.degenerate,
    }))
}

/// Splices an attack payload into `source` and reports how far the
/// embedding moved.
pub fn preview_injection(source: &str, attack_name: &str) -> Result<Value, String> {
    let attack = attack(attack_name)?;
    let record = FunctionRecord::benign("input", "input", source);
    let injected = inject_function(&record, &make_payload(attack)).map_err(|e| e.to_string())?;
    let emb = EmbeddingSection::default();
    let before = embed_source("before", &record.normalized_source, &emb)?;
    let after = embed_source("after", &injected.normalized_source, &emb)?;
    Ok(json!({
        "attack": attack.as_str(),
        "original": record.normalized_source,
        "injected": injected.normalized_source,
        "fallback_prologue": injected.fallback_prologue,
        "cosine": cosine(&before, &after),
        "distance": injdetect_core::pairwise_distance(&before, &after).map_err(|e| e.to_string())?,
    }))
}

#[derive(Serialize)]
struct Point {
    id: String,
    x: f64,
    y: f64,
    role: Role,
    cluster: Option<usize>,
    injected: bool,
    rank: Option<usize>,
    score: Option<f64>,
    source: String,
}

/// Injects one attack into a built-in function type, clusters the type with
/// DBSCAN and projects it to 2-D.
pub fn explore(
    function_name: &str,
    attack_name: &str,
    eps: f64,
    min_samples: usize,
    seed: u64,
) -> Result<Value, String> {
    let attack = attack(attack_name)?;
    if !(eps > 0.0 && eps.is_finite()) || min_samples == 0 {
        return Err("eps must be positive and min_samples at least 1".into());
    }
    let campaign = with_corpus(|index| {
        simulate_campaign(
            index,
            &CampaignConfig {
                rate: 0.1,
                attacks: vec![attack],
                seed,
                target_types: vec![function_name.to_string()],
            },
        )
    })
    .map_err(|e| e.to_string())?;

    let emb = EmbeddingSection::default();
    let records = campaign.index.records_of(function_name);
    let mut vectors = Vec::with_capacity(records.len());
    for r in &records {
        vectors.push(embed_source(&r.id, &r.normalized_source, &emb)?);
    }
    let clustering = dbscan(&vectors, eps, min_samples).map_err(|e| e.to_string())?;
    let ranking = rank_outliers(&clustering, &vectors).map_err(|e| e.to_string())?;
    let projection = pca_2d(&vectors).map_err(|e| e.to_string())?;

    let positives: HashSet<String> = records
        .iter()
        .filter(|r| r.is_injected())
        .map(|r| r.id.clone())
        .collect();
    let ranked = ranking.ids();
    let points: Vec<Point> = records
        .iter()
        .zip(&projection.points)
        .enumerate()
        .map(|(i, (r, p))| {
            let pos = ranked.iter().position(|id| *id == r.id);
            Point {
                id: r.id.clone(),
                x: p.x,
                y: p.y,
                role: clustering.roles[i],
                cluster: clustering.assignments[i],
                injected: r.is_injected(),
                rank: pos.map(|k| k + 1),
                score: pos.map(|k| ranking.entries[k].score).filter(|s| s.is_finite()),
                source: r.normalized_source.clone(),
            }
        })
        .collect();
    let metric = |m: injdetect_core::eval::MetricValue| m.get();
    Ok(json!({
        "function_name": function_name,
        "attack": attack.as_str(),
        "points": points,
        "clusters": clustering.n_clusters,
        "noise": clustering.noise_count(),
        "injected": positives.len(),
        "all_noise": ranking.all_noise,
        "fallback_to_core": ranking.fallback_to_core,
        "precision_at_10": metric(precision_at_k(&ranked, &positives, 10)),
        "average_precision": metric(average_precision(&ranked, &positives)),
        "explained_variance": projection.explained_variance,
    }))
}

fn to_js(result: Result<Value, String>) -> Result<String, JsError> {
    result.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn analyze_function(source: &str, max_path_length: usize, max_path_width: usize) -> Result<String, JsError> {
    to_js(analyze(source, max_path_length, max_path_width))
}

#[wasm_bindgen]
pub fn inject_preview(source: &str, attack: &str) -> Result<String, JsError> {
    to_js(preview_injection(source, attack))
}

#[wasm_bindgen]
pub fn explore_type(
    function_name: &str,
    attack: &str,
    eps: f64,
    min_samples: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_js(explore(function_name, attack, eps, min_samples, u64::from(seed)))
}

/// Function types and attack names available to the page.
#[wasm_bindgen]
pub fn catalog() -> String {
    json!({
        "function_types": function_names(),
        "attacks": AttackType::ALL.iter().map(|a| a.as_str()).collect::<Vec<_>>(),
    })
    .to_string()
}
