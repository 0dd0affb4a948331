//! Leaf-to-leaf path extraction.

use serde::{Deserialize, Serialize};

use super::{AstNode, NodeKind};

/// A walk from one leaf up to the lowest common ancestor and down to a
/// later leaf. `up_nodes` lists the nodes reached by each upward edge
/// (ending with the junction); `down_nodes` lists the nodes reached by each
/// downward edge (ending with the end leaf's kind).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AstPath {
    pub start_token: String,
    pub up_nodes: Vec<NodeKind>,
    pub down_nodes: Vec<NodeKind>,
    pub end_token: String,
    /// Source-order positions of the two leaves.
    pub start_leaf: usize,
    pub end_leaf: usize,
}

impl AstPath {
    /// Number of edges walked.
    pub fn length(&self) -> usize {
        self.up_nodes.len() + self.down_nodes.len()
    }

    pub fn junction(&self) -> NodeKind {
        *self.up_nodes.last().expect("paths always have a junction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLimits {
    pub max_path_length: usize,
    pub max_path_width: usize,
}

impl PathLimits {
    pub const UNLIMITED: PathLimits = PathLimits {
        max_path_length: usize::MAX,
        max_path_width: usize::MAX,
    };
}

impl Default for PathLimits {
    fn default() -> Self {
        PathLimits {
            max_path_length: 8,
            max_path_width: 2,
        }
    }
}

struct LeafChain<'a> {
    /// (node, index of that node among its parent's children), root first.
    chain: Vec<(&'a AstNode, usize)>,
}

fn collect<'a>(
    node: &'a AstNode,
    child_idx: usize,
    stack: &mut Vec<(&'a AstNode, usize)>,
    out: &mut Vec<LeafChain<'a>>,
) {
    stack.push((node, child_idx));
    if node.is_leaf() {
        out.push(LeafChain { chain: stack.clone() });
    }
    for (i, c) in node.children.iter().enumerate() {
        collect(c, i, stack, out);
    }
    stack.pop();
}

/// Every leaf pair (in source order) whose path has at most
/// `max_path_length` edges and whose child-index spread at the junction is
/// at most `max_path_width`.
pub fn extract_ast_paths(tree: &AstNode, max_path_length: usize, max_path_width: usize) -> Vec<AstPath> {
    let mut leaves = Vec::new();
    collect(tree, 0, &mut Vec::new(), &mut leaves);
    let mut paths = Vec::new();
    for i in 0..leaves.len() {
        for j in i + 1..leaves.len() {
            let a = &leaves[i].chain;
            let b = &leaves[j].chain;
            let common = a
                .iter()
                .zip(b.iter())
                .take_while(|(x, y)| std::ptr::eq(x.0, y.0))
                .count();
            // neither leaf is an ancestor of the other, so both extend past `common`
            let length = a.len() + b.len() - 2 * common;
            if length > max_path_length {
                continue;
            }
            let width = b[common].1 - a[common].1;
            if width > max_path_width {
                continue;
            }
            let up_nodes = a[common - 1..a.len() - 1].iter().rev().map(|(n, _)| n.kind).collect();
            let down_nodes = b[common..].iter().map(|(n, _)| n.kind).collect();
            paths.push(AstPath {
                start_token: a.last().unwrap().0.token.clone().unwrap_or_default(),
                up_nodes,
                down_nodes,
                end_token: b.last().unwrap().0.token.clone().unwrap_or_default(),
                start_leaf: i,
                end_leaf: j,
            });
        }
    }
    paths
}

fn escape_token(token: &str, out: &mut String) {
    for c in token.chars() {
        if c == '|' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
}

/// Canonical text form: `start|k1 ^ k2 v k3 v k4|end`, where `^` precedes
/// nodes reached going up (after the first) and `v` nodes reached going
/// down. `|` and `\` inside tokens are backslash-escaped.
pub fn serialize_path(path: &AstPath) -> String {
    let mut out = String::new();
    escape_token(&path.start_token, &mut out);
    out.push('|');
    for (i, kind) in path.up_nodes.iter().enumerate() {
        if i > 0 {
            out.push_str(" ^ ");
        }
        out.push_str(kind.as_str());
    }
    for kind in &path.down_nodes {
        out.push_str(" v ");
        out.push_str(kind.as_str());
    }
    out.push('|');
    escape_token(&path.end_token, &mut out);
    out
}
