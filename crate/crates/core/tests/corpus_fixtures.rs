use std::collections::BTreeMap;
use std::path::Path;

use injdetect_core::corpus::{load_corpus, normalize_source, parse_corpus, top_k_function_types, CorpusFormat};
use serde::Deserialize;

#[derive(Deserialize)]
struct NormCase {
    input: String,
    expected: String,
}

fn norm_cases() -> Vec<NormCase> {
    include_str!("fixtures/normalize_cases.jsonl")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn shipped_corpus() -> &'static Path {
    Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/synthetic_corpus.jsonl"
    ))
}

/// Name counts from the raw file, without going through the loader.
fn count_names_directly() -> BTreeMap<String, usize> {
    let text = std::fs::read_to_string(shipped_corpus()).unwrap();
    let mut counts = BTreeMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        *counts.entry(v["name"].as_str().unwrap().to_string()).or_insert(0) += 1;
    }
    counts
}

#[test]
fn normalization_matches_hand_computed_outputs() {
    let cases = norm_cases();
    assert_eq!(cases.len(), 20);
    for (i, c) in cases.iter().enumerate() {
        assert_eq!(normalize_source(&c.input), c.expected, "case {}", i + 1);
    }
}

#[test]
fn normalization_is_idempotent_on_fixtures() {
    for c in norm_cases() {
        let once = normalize_source(&c.input);
        assert_eq!(normalize_source(&once), once);
    }
}

#[test]
fn shipped_corpus_buckets_match_direct_count() {
    let (index, skips) = load_corpus(shipped_corpus(), CorpusFormat::Jsonl).unwrap();
    assert!(skips.is_empty());
    let direct = count_names_directly();
    assert_eq!(direct.len(), 12);
    assert_eq!(direct.values().sum::<usize>(), 1200);
    let buckets: BTreeMap<String, usize> = index.by_type().iter().map(|(k, v)| (k.clone(), v.len())).collect();
    assert_eq!(buckets, direct);
    assert_eq!(buckets.values().sum::<usize>(), index.len());
}

#[test]
fn top_three_types_match_direct_count() {
    let (index, _) = load_corpus(shipped_corpus(), CorpusFormat::Jsonl).unwrap();
    let mut direct: Vec<(String, usize)> = count_names_directly().into_iter().collect();
    direct.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    direct.truncate(3);
    assert_eq!(top_k_function_types(&index, 3), direct);
}

#[test]
fn load_serialize_load_round_trips() {
    let (index, _) = load_corpus(shipped_corpus(), CorpusFormat::Jsonl).unwrap();
    let (again, skips) = parse_corpus(&index.to_jsonl(), "other", CorpusFormat::Jsonl).unwrap();
    assert!(skips.is_empty());
    assert_eq!(again, index);
}
