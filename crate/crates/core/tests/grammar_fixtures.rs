//! Parser and path extraction checked against the 40-function grammar suite.
//! Expected trees were produced by `scripts/ast_oracle.py` from CPython's
//! own parser.

use std::collections::{BTreeSet, HashSet};

use injdetect_core::astpath::{extract_ast_paths, parse_function, serialize_path, AstNode, NodeKind};
use serde::Deserialize;

#[derive(Deserialize)]
struct Case {
    name: String,
    source: String,
    tree: AstNode,
}

fn cases() -> Vec<Case> {
    let text = include_str!("fixtures/grammar_cases.jsonl");
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

/// Flat node table with parent links, built independently of the library's
/// own leaf walk.
struct Flat {
    kind: Vec<NodeKind>,
    parent: Vec<Option<usize>>,
    child_index: Vec<usize>,
    depth: Vec<usize>,
    leaves: Vec<usize>,
}

impl Flat {
    fn new(root: &AstNode) -> Self {
        let mut f = Flat {
            kind: vec![],
            parent: vec![],
            child_index: vec![],
            depth: vec![],
            leaves: vec![],
        };
        f.add(root, None, 0, 0);
        f
    }

    fn add(&mut self, n: &AstNode, parent: Option<usize>, idx: usize, depth: usize) {
        let id = self.kind.len();
        self.kind.push(n.kind);
        self.parent.push(parent);
        self.child_index.push(idx);
        self.depth.push(depth);
        if n.token.is_some() {
            self.leaves.push(id);
        }
        for (i, c) in n.children.iter().enumerate() {
            self.add(c, Some(id), i, depth + 1);
        }
    }

    /// (edge count, junction width) for a leaf pair.
    fn measure(&self, a: usize, b: usize) -> (usize, usize) {
        let (mut x, mut y) = (a, b);
        let (mut last_x, mut last_y) = (a, b);
        let mut edges = 0;
        while x != y {
            if self.depth[x] >= self.depth[y] {
                last_x = x;
                x = self.parent[x].unwrap();
            } else {
                last_y = y;
                y = self.parent[y].unwrap();
            }
            edges += 1;
        }
        (edges, self.child_index[last_y] - self.child_index[last_x])
    }
}

#[test]
fn suite_has_forty_cases() {
    assert_eq!(cases().len(), 40);
}

#[test]
fn parse_trees_match_reference_parser() {
    for case in cases() {
        let tree = parse_function(&case.source).unwrap_or_else(|e| panic!("{}: {e}", case.name));
        assert_eq!(tree, case.tree, "tree mismatch for {}", case.name);
    }
}

#[test]
fn unlimited_extraction_yields_every_leaf_pair() {
    for case in cases() {
        let tree = parse_function(&case.source).unwrap();
        let l = tree.leaf_count();
        let paths = extract_ast_paths(&tree, usize::MAX, usize::MAX);
        assert_eq!(paths.len(), l * (l - 1) / 2, "{}", case.name);
        let pairs: HashSet<(usize, usize)> = paths.iter().map(|p| (p.start_leaf, p.end_leaf)).collect();
        assert_eq!(pairs.len(), paths.len());
        assert!(paths.iter().all(|p| p.start_leaf < p.end_leaf));
    }
}

#[test]
fn limited_extraction_matches_brute_force_filter() {
    for case in cases() {
        let tree = parse_function(&case.source).unwrap();
        let flat = Flat::new(&tree);
        let got: BTreeSet<(usize, usize)> = extract_ast_paths(&tree, 8, 2)
            .iter()
            .map(|p| (p.start_leaf, p.end_leaf))
            .collect();
        let mut want = BTreeSet::new();
        for i in 0..flat.leaves.len() {
            for j in i + 1..flat.leaves.len() {
                let (len, width) = flat.measure(flat.leaves[i], flat.leaves[j]);
                if len <= 8 && width <= 2 {
                    want.insert((i, j));
                }
            }
        }
        assert_eq!(got, want, "{}", case.name);
    }
}

#[test]
fn path_nodes_follow_the_tree_walk() {
    for case in cases() {
        let tree = parse_function(&case.source).unwrap();
        let flat = Flat::new(&tree);
        for p in extract_ast_paths(&tree, usize::MAX, usize::MAX) {
            let a = flat.leaves[p.start_leaf];
            let b = flat.leaves[p.end_leaf];
            let (edges, _) = flat.measure(a, b);
            assert_eq!(p.length(), edges);
            let mut x = a;
            for kind in &p.up_nodes {
                x = flat.parent[x].unwrap();
                assert_eq!(flat.kind[x], *kind);
            }
            assert_eq!(*p.down_nodes.last().unwrap(), flat.kind[b]);
        }
    }
}

#[test]
fn limited_output_is_subset_and_monotone() {
    for case in cases() {
        let tree = parse_function(&case.source).unwrap();
        let set = |len, width| -> BTreeSet<String> {
            extract_ast_paths(&tree, len, width)
                .iter()
                .map(serialize_path)
                .collect()
        };
        let all = set(usize::MAX, usize::MAX);
        assert!(set(8, 2).is_subset(&all));
        for len in 2..12 {
            for width in 1..5 {
                let base = set(len, width);
                assert!(base.is_subset(&set(len + 1, width)), "{} length {len}", case.name);
                assert!(base.is_subset(&set(len, width + 1)), "{} width {width}", case.name);
            }
        }
    }
}

#[test]
fn serialization_is_injective_per_function() {
    for case in cases() {
        let tree = parse_function(&case.source).unwrap();
        let paths = extract_ast_paths(&tree, usize::MAX, usize::MAX);
        let mut by_string = std::collections::HashMap::new();
        for p in &paths {
            let walk = (&p.start_token, &p.up_nodes, &p.down_nodes, &p.end_token);
            let prev = by_string.insert(serialize_path(p), walk);
            if let Some(prev) = prev {
                assert_eq!(prev, walk, "{}: two different paths share a string", case.name);
            }
        }
    }
}

#[test]
fn if_condition_connects_to_call_argument() {
    let case = cases().into_iter().find(|c| c.name == "if_print_hello").unwrap();
    let tree = parse_function(&case.source).unwrap();
    let paths = extract_ast_paths(&tree, 8, 2);
    let s: Vec<String> = paths.iter().map(serialize_path).collect();
    assert!(
        s.contains(&"x|compare ^ if_stmt v call v string|\"Hello\"".to_string()),
        "{s:#?}"
    );
}
