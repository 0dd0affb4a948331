//! Python-subset AST and leaf-to-leaf AST paths.
//!
//! Leaves carry tokens (identifiers, literals, bare keyword statements);
//! internal nodes carry only their kind. The one structural exception is an
//! empty parameter list, which stays an internal `params` node without
//! children so that it contributes no leaf.

mod lexer;
mod parser;
mod paths;

use serde::{Deserialize, Serialize};

pub use parser::{parse_function, parse_function_layout, BodyLayout, StmtSpan};
pub use paths::{extract_ast_paths, serialize_path, AstPath, PathLimits};

/// Node kinds of the supported grammar subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Module,
    FuncDef,
    Params,
    IfStmt,
    ForStmt,
    WhileStmt,
    ReturnStmt,
    Assign,
    AugAssign,
    ExprStmt,
    Call,
    Attribute,
    Subscript,
    Binop,
    Unaryop,
    Compare,
    Name,
    Number,
    String,
    Bool,
    None,
    ListLit,
    DictLit,
    TupleLit,
    ImportStmt,
    RaiseStmt,
    TryStmt,
    WithStmt,
    PassStmt,
    BreakStmt,
    ContinueStmt,
    ExceptHandler,
    Orelse,
    Finalbody,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        use NodeKind::*;
        match self {
            Module => "module",
            FuncDef => "func_def",
            Params => "params",
            IfStmt => "if_stmt",
            ForStmt => "for_stmt",
            WhileStmt => "while_stmt",
            ReturnStmt => "return_stmt",
            Assign => "assign",
            AugAssign => "aug_assign",
            ExprStmt => "expr_stmt",
            Call => "call",
            Attribute => "attribute",
            Subscript => "subscript",
            Binop => "binop",
            Unaryop => "unaryop",
            Compare => "compare",
            Name => "name",
            Number => "number",
            String => "string",
            Bool => "bool",
            None => "none",
            ListLit => "list_lit",
            DictLit => "dict_lit",
            TupleLit => "tuple_lit",
            ImportStmt => "import_stmt",
            RaiseStmt => "raise_stmt",
            TryStmt => "try_stmt",
            WithStmt => "with_stmt",
            PassStmt => "pass_stmt",
            BreakStmt => "break_stmt",
            ContinueStmt => "continue_stmt",
            ExceptHandler => "except_handler",
            Orelse => "orelse",
            Finalbody => "finalbody",
        }
    }
}

impl std::fmt::Display for NodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub kind: NodeKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AstNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

impl AstNode {
    pub fn leaf(kind: NodeKind, token: impl Into<String>) -> Self {
        AstNode {
            kind,
            children: Vec::new(),
            token: Some(token.into()),
        }
    }

    pub fn internal(kind: NodeKind, children: Vec<AstNode>) -> Self {
        AstNode {
            kind,
            children,
            token: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.token.is_some()
    }

    /// Leaf tokens in left-to-right order.
    pub fn leaf_tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk_leaves(&mut |n| out.push(n.token.as_deref().unwrap_or_default()));
        out
    }

    pub fn leaf_count(&self) -> usize {
        let mut n = 0;
        self.walk_leaves(&mut |_| n += 1);
        n
    }

    fn walk_leaves<'a>(&'a self, f: &mut impl FnMut(&'a AstNode)) {
        if self.is_leaf() {
            f(self);
        }
        for c in &self.children {
            c.walk_leaves(f);
        }
    }

    /// Checks the structural invariants of a tree received from outside
    /// (for example the JSON ingestion format).
    pub fn validate(&self) -> Result<(), ParseError> {
        if self.kind != NodeKind::FuncDef {
            return Err(ParseError::structural(format!(
                "root must be func_def, found {}",
                self.kind
            )));
        }
        self.validate_node()
    }

    fn validate_node(&self) -> Result<(), ParseError> {
        let empty_params = self.kind == NodeKind::Params && self.children.is_empty();
        if self.token.is_some() && !self.children.is_empty() {
            return Err(ParseError::structural(format!(
                "{} node has both token and children",
                self.kind
            )));
        }
        if self.token.is_none() && self.children.is_empty() && !empty_params {
            return Err(ParseError::structural(format!(
                "{} node has neither token nor children",
                self.kind
            )));
        }
        self.children.iter().try_for_each(AstNode::validate_node)
    }

    /// Parses and validates the JSON tree format.
    pub fn from_json(text: &str) -> Result<AstNode, ParseError> {
        let node: AstNode =
            serde_json::from_str(text).map_err(|e| ParseError::structural(format!("invalid AST JSON: {e}")))?;
        node.validate()?;
        Ok(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message} (at {token:?})")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    fn structural(message: String) -> Self {
        ParseError {
            line: 0,
            col: 0,
            token: String::new(),
            message,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_validation() {
        let tree = parse_function("def f(a):\n    return a\n").unwrap();
        let json = serde_json::to_string(&tree).unwrap();
        assert_eq!(AstNode::from_json(&json).unwrap(), tree);

        let bad =
            r#"{"kind":"func_def","children":[{"kind":"name","token":"f","children":[{"kind":"name","token":"g"}]}]}"#;
        assert!(AstNode::from_json(bad).is_err());
        let not_def = r#"{"kind":"name","token":"f"}"#;
        assert!(AstNode::from_json(not_def).is_err());
    }

    #[test]
    fn kind_names_match_serde() {
        for kind in [
            NodeKind::FuncDef,
            NodeKind::ExceptHandler,
            NodeKind::None,
            NodeKind::ListLit,
        ] {
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.as_str()));
        }
    }
}
