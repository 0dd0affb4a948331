use injdetect_wasm_demo::{analyze, catalog, explore, preview_injection};

const GETTER: &str = "def get(self, key):\n    value = self._data.get(key)\n    return value\n";

#[test]
fn analyze_lists_paths_and_vector_stats() {
    let v = analyze(GETTER, 8, 2).unwrap();
    let leaves = v["leaves"].as_u64().unwrap();
    assert!(v["path_count"].as_u64().unwrap() <= leaves * (leaves - 1) / 2);
    let unlimited = analyze(GETTER, 1000, 1000).unwrap();
    assert_eq!(unlimited["path_count"].as_u64().unwrap(), leaves * (leaves - 1) / 2);
    assert_eq!(v["dim"], 320);
    assert_eq!(v["degenerate"], false);
    assert!(v["paths"]
        .as_array()
        .unwrap()
        .iter()
        .all(|p| p.as_str().unwrap().contains('|')));
}

#[test]
fn analyze_reports_parse_errors() {
    assert!(analyze("def broken(:\n    pass\n", 8, 2).is_err());
}

#[test]
fn preview_injects_and_moves_the_embedding() {
    let v = preview_injection(GETTER, "exec_obfuscated").unwrap();
    assert!(v["injected"].as_str().unwrap().contains("exec("));
    let cos = v["cosine"].as_f64().unwrap();
    assert!(cos < 1.0 && cos > 0.0);
    assert!(preview_injection(GETTER, "nope").is_err());
}

#[test]
fn explore_clusters_a_built_in_type() {
    let cat: serde_json::Value = serde_json::from_str(&catalog()).unwrap();
    assert_eq!(cat["function_types"].as_array().unwrap().len(), 12);
    let v = explore("get", "exec_obfuscated", 0.3, 10, 42).unwrap();
    let points = v["points"].as_array().unwrap();
    assert_eq!(points.len(), 100);
    assert_eq!(v["injected"], 10);
    assert_eq!(points.iter().filter(|p| p["injected"] == true).count(), 10);
    let ranked = points.iter().filter(|p| !p["rank"].is_null()).count() as u64;
    assert_eq!(ranked, v["noise"].as_u64().unwrap());
    // same inputs, same answer
    assert_eq!(v, explore("get", "exec_obfuscated", 0.3, 10, 42).unwrap());
    assert!(explore("get", "exec_obfuscated", 0.0, 10, 42).is_err());
}
