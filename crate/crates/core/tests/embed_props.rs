use injdetect_core::astpath::{extract_ast_paths, parse_function};
use injdetect_core::{embed_hashed, pairwise_distance, AstPath, EmbeddingVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BASE: &str = "def get(self, key):\n    value = self._data.get(key)\n    return value\n";
const WITH_EXEC: &str =
    "def get(self, key):\n    value = self._data.get(key)\n    return value\n    exec(\"print(1)\")\n";

fn paths(src: &str) -> Vec<AstPath> {
    extract_ast_paths(&parse_function(src).unwrap(), 8, 2)
}

fn fixture_sources() -> Vec<String> {
    include_str!("fixtures/grammar_cases.jsonl")
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["source"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect()
}

fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum::<f64>() / (a.norm() * b.norm())
}

#[test]
fn appended_exec_lowers_similarity() {
    let a = embed_hashed("a", &paths(BASE), 320, 7).unwrap();
    let dup = embed_hashed("b", &paths(BASE), 320, 7).unwrap();
    let inj = embed_hashed("c", &paths(WITH_EXEC), 320, 7).unwrap();
    let same = cosine(&a, &dup);
    let changed = cosine(&a, &inj);
    assert!((same - 1.0).abs() < 1e-12);
    assert!(changed < 1.0 && changed < same);
    // regression baseline recorded from the first verified run
    assert!(
        (changed - 0.853_912_563_829_966_6).abs() < 1e-12,
        "cosine = {changed:.16}"
    );
}

#[test]
fn triangle_inequality_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let dim = rng.gen_range(2..40);
        let mut v = || EmbeddingVector::new("v", (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect());
        let (a, b, c) = (v(), v(), v());
        let ab = pairwise_distance(&a, &b).unwrap();
        let bc = pairwise_distance(&b, &c).unwrap();
        let ac = pairwise_distance(&a, &c).unwrap();
        assert!(ac <= ab + bc + 1e-12);
        assert_eq!(ab, pairwise_distance(&b, &a).unwrap());
        assert_eq!(pairwise_distance(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn hashed_vectors_have_unit_or_zero_norm() {
    for src in fixture_sources() {
        let v = embed_hashed("x", &paths(&src), 320, 7).unwrap();
        let n = v.norm();
        assert!(n == 0.0 || (n - 1.0).abs() < 1e-9, "norm {n}");
        assert_eq!(v.degenerate, n == 0.0);
    }
    assert!(embed_hashed("x", &[], 320, 7).unwrap().degenerate);
}

#[test]
fn seed_changes_vectors_but_keeps_duplicates_equal() {
    let sources = fixture_sources();
    for src in &sources {
        let p = paths(src);
        if p.is_empty() {
            continue;
        }
        let a7 = embed_hashed("a", &p, 320, 7).unwrap();
        let b7 = embed_hashed("b", &paths(src), 320, 7).unwrap();
        let a8 = embed_hashed("a", &p, 320, 8).unwrap();
        let b8 = embed_hashed("b", &paths(src), 320, 8).unwrap();
        assert_eq!(a7.values, b7.values);
        assert_eq!(a8.values, b8.values);
        assert_ne!(a7.values, a8.values);
    }
}

proptest! {
    #[test]
    fn path_order_does_not_matter(case in 0usize..40, shuffle_seed in any::<u64>(), seed in any::<u64>(), dim in 2usize..400) {
        let src = &fixture_sources()[case];
        let p = paths(src);
        let mut shuffled = p.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let a = embed_hashed("a", &p, dim, seed).unwrap();
        let b = embed_hashed("a", &shuffled, dim, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
