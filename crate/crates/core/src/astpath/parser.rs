//! Recursive-descent parser for single Python function definitions.

use super::lexer::{tokenize, TokKind, Token};
use super::{AstNode, NodeKind, ParseError};

/// String leaves longer than this many characters are replaced by
/// `str:len=N`.
pub const MAX_STRING_TOKEN: usize = 64;

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

const AUG_OPS: &[&str] = &[
    "+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@=",
];

/// Byte span of one top-level statement of the function body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StmtSpan {
    pub start: usize,
    pub end: usize,
    /// No other statement precedes this one on its first line.
    pub first_on_line: bool,
    pub is_docstring: bool,
}

/// Where the body of the parsed function sits in its source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BodyLayout {
    /// Body written on the header line (`def f(): return 1`).
    pub inline_suite: bool,
    /// Byte offset just after the header's `:`.
    pub header_end: usize,
    /// Column (0-based) of the `def` keyword.
    pub def_indent: usize,
    pub body: Vec<StmtSpan>,
}

/// Parses normalized source holding exactly one function definition and
/// returns its `func_def` root.
pub fn parse_function(source: &str) -> Result<AstNode, ParseError> {
    parse_function_layout(source).map(|(tree, _)| tree)
}

/// Like [`parse_function`], also returning the body statement layout.
pub fn parse_function_layout(source: &str) -> Result<(AstNode, BodyLayout), ParseError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        src: source,
        toks: tokens,
        pos: 0,
        last_end: 0,
    };
    if !p.peek().is_keyword("def") {
        return Err(p.error("expected a function definition"));
    }
    let mut layout = BodyLayout {
        inline_suite: false,
        header_end: 0,
        def_indent: p.peek().col - 1,
        body: Vec::new(),
    };
    let tree = p.func_def(Some(&mut layout))?;
    while p.peek().kind == TokKind::Newline {
        p.advance();
    }
    if p.peek().kind != TokKind::Eof {
        return Err(p.error("expected end of input after the function"));
    }
    Ok((tree, layout))
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    last_end: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i]
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        if matches!(t.kind, TokKind::Name | TokKind::Number | TokKind::Str | TokKind::Op) {
            self.last_end = t.end;
        }
        t
    }

    fn error(&self, message: &str) -> ParseError {
        let t = self.peek();
        let token = match t.kind {
            TokKind::Newline => "NEWLINE".to_string(),
            TokKind::Indent => "INDENT".to_string(),
            TokKind::Dedent => "DEDENT".to_string(),
            TokKind::Eof => "EOF".to_string(),
            _ => t.text.clone(),
        };
        ParseError {
            line: t.line,
            col: t.col,
            token,
            message: message.to_string(),
        }
    }

    fn at_op(&self, op: &str) -> bool {
        self.peek().is_op(op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().is_keyword(kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{kw}'")))
        }
    }

    fn expect_name(&mut self) -> PResult<Token> {
        let t = self.peek();
        if t.kind == TokKind::Name && !KEYWORDS.contains(&t.text.as_str()) {
            Ok(self.advance())
        } else {
            Err(self.error("expected an identifier"))
        }
    }

    fn at_stmt_end(&self) -> bool {
        matches!(self.peek().kind, TokKind::Newline | TokKind::Eof | TokKind::Dedent) || self.at_op(";")
    }

    // ---- statements ----

    fn func_def(&mut self, layout: Option<&mut BodyLayout>) -> PResult<AstNode> {
        self.expect_kw("def")?;
        let name = self.expect_name()?;
        self.expect_op("(")?;
        let params = self.params()?;
        self.expect_op(")")?;
        if self.at_op("->") {
            return Err(self.error("return annotations are not supported"));
        }
        self.expect_op(":")?;
        let header_end = self.last_end;
        let mut children = vec![AstNode::leaf(NodeKind::Name, name.text), params];
        match layout {
            Some(layout) => {
                layout.header_end = header_end;
                layout.inline_suite = self.peek().kind != TokKind::Newline;
                let mut spans = Vec::new();
                children.extend(self.suite(Some(&mut spans))?);
                if let Some(first) = spans.first_mut() {
                    first.is_docstring = children
                        .get(2)
                        .is_some_and(|n| n.kind == NodeKind::ExprStmt && n.children[0].kind == NodeKind::String);
                }
                layout.body = spans;
            }
            None => children.extend(self.suite(None)?),
        }
        Ok(AstNode::internal(NodeKind::FuncDef, children))
    }

    fn params(&mut self) -> PResult<AstNode> {
        let mut children = Vec::new();
        while !self.at_op(")") {
            if !self.eat_op("/") {
                let starred = self.eat_op("*") || self.eat_op("**");
                if !(starred && (self.at_op(",") || self.at_op(")"))) {
                    let name = self.expect_name()?;
                    if self.at_op(":") {
                        return Err(self.error("parameter annotations are not supported"));
                    }
                    let leaf = AstNode::leaf(NodeKind::Name, name.text);
                    if self.eat_op("=") {
                        let default = self.test()?;
                        children.push(AstNode::internal(NodeKind::Assign, vec![leaf, default]));
                    } else {
                        children.push(leaf);
                    }
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(AstNode::internal(NodeKind::Params, children))
    }

    /// Parses a block after `:`; records top-level spans when asked.
    fn suite(&mut self, mut spans: Option<&mut Vec<StmtSpan>>) -> PResult<Vec<AstNode>> {
        let mut body = Vec::new();
        if self.peek().kind == TokKind::Newline {
            self.advance();
            if self.peek().kind != TokKind::Indent {
                return Err(self.error("expected an indented block"));
            }
            self.advance();
            while !matches!(self.peek().kind, TokKind::Dedent | TokKind::Eof) {
                self.statement(&mut body, spans.as_deref_mut())?;
            }
            if self.peek().kind == TokKind::Dedent {
                self.advance();
            }
        } else {
            self.simple_stmts(&mut body, spans)?;
        }
        if body.is_empty() {
            return Err(self.error("empty block"));
        }
        Ok(body)
    }

    fn statement(&mut self, out: &mut Vec<AstNode>, spans: Option<&mut Vec<StmtSpan>>) -> PResult<()> {
        let t = self.peek().clone();
        let compound = ["if", "for", "while", "try", "with", "def"];
        if t.kind == TokKind::Name && compound.contains(&t.text.as_str()) {
            let node = match t.text.as_str() {
                "if" => self.if_stmt()?,
                "for" => self.for_stmt()?,
                "while" => self.while_stmt()?,
                "try" => self.try_stmt()?,
                "with" => self.with_stmt()?,
                _ => self.func_def(None)?,
            };
            if let Some(spans) = spans {
                spans.push(self.span(t.start, self.last_end));
            }
            out.push(node);
            Ok(())
        } else if t.is_op("@") {
            Err(self.error("decorators are not supported"))
        } else {
            self.simple_stmts(out, spans)
        }
    }

    fn span(&self, start: usize, end: usize) -> StmtSpan {
        let line_start = self.src[..start].rfind('\n').map_or(0, |i| i + 1);
        StmtSpan {
            start,
            end,
            first_on_line: self.src[line_start..start].trim().is_empty(),
            is_docstring: false,
        }
    }

    fn simple_stmts(&mut self, out: &mut Vec<AstNode>, mut spans: Option<&mut Vec<StmtSpan>>) -> PResult<()> {
        loop {
            let start = self.peek().start;
            out.push(self.small_stmt()?);
            if let Some(spans) = spans.as_deref_mut() {
                spans.push(self.span(start, self.last_end));
            }
            if !self.eat_op(";") || matches!(self.peek().kind, TokKind::Newline | TokKind::Eof) {
                break;
            }
        }
        match self.peek().kind {
            TokKind::Newline => {
                self.advance();
                Ok(())
            }
            TokKind::Eof | TokKind::Dedent => Ok(()),
            _ => Err(self.error("expected end of statement")),
        }
    }

    fn small_stmt(&mut self) -> PResult<AstNode> {
        let t = self.peek().clone();
        if t.kind == TokKind::Name {
            match t.text.as_str() {
                "pass" => {
                    self.advance();
                    return Ok(AstNode::leaf(NodeKind::PassStmt, "pass"));
                }
                "break" => {
                    self.advance();
                    return Ok(AstNode::leaf(NodeKind::BreakStmt, "break"));
                }
                "continue" => {
                    self.advance();
                    return Ok(AstNode::leaf(NodeKind::ContinueStmt, "continue"));
                }
                "return" => {
                    self.advance();
                    if self.at_stmt_end() {
                        return Ok(AstNode::leaf(NodeKind::ReturnStmt, "return"));
                    }
                    let value = self.testlist()?;
                    return Ok(AstNode::internal(NodeKind::ReturnStmt, vec![value]));
                }
                "raise" => {
                    self.advance();
                    if self.at_stmt_end() {
                        return Ok(AstNode::leaf(NodeKind::RaiseStmt, "raise"));
                    }
                    let mut children = vec![self.test()?];
                    if self.eat_kw("from") {
                        children.push(self.test()?);
                    }
                    return Ok(AstNode::internal(NodeKind::RaiseStmt, children));
                }
                "import" => return self.import_stmt(),
                "from" => return self.import_from(),
                "global" | "nonlocal" | "del" | "assert" | "class" | "yield" | "async" | "await" | "lambda" => {
                    return Err(self.error(&format!("'{}' is outside the supported subset", t.text)));
                }
                _ => {}
            }
        }
        self.expr_stmt()
    }

    fn dotted_name(&mut self, out: &mut Vec<AstNode>) -> PResult<()> {
        loop {
            let n = self.expect_name()?;
            out.push(AstNode::leaf(NodeKind::Name, n.text));
            if !self.eat_op(".") {
                return Ok(());
            }
        }
    }

    fn import_stmt(&mut self) -> PResult<AstNode> {
        self.expect_kw("import")?;
        let mut children = Vec::new();
        loop {
            self.dotted_name(&mut children)?;
            if self.eat_kw("as") {
                children.push(AstNode::leaf(NodeKind::Name, self.expect_name()?.text));
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(AstNode::internal(NodeKind::ImportStmt, children))
    }

    fn import_from(&mut self) -> PResult<AstNode> {
        self.expect_kw("from")?;
        let mut children = Vec::new();
        let mut relative = false;
        while self.eat_op(".") || self.eat_op("...") {
            relative = true;
        }
        if !(relative && self.at_kw("import")) {
            self.dotted_name(&mut children)?;
        }
        self.expect_kw("import")?;
        if self.eat_op("*") {
            children.push(AstNode::leaf(NodeKind::Name, "*"));
        } else {
            let parens = self.eat_op("(");
            loop {
                if parens && self.at_op(")") {
                    break;
                }
                children.push(AstNode::leaf(NodeKind::Name, self.expect_name()?.text));
                if self.eat_kw("as") {
                    children.push(AstNode::leaf(NodeKind::Name, self.expect_name()?.text));
                }
                if !self.eat_op(",") {
                    break;
                }
            }
            if parens {
                self.expect_op(")")?;
            }
        }
        Ok(AstNode::internal(NodeKind::ImportStmt, children))
    }

    fn expr_stmt(&mut self) -> PResult<AstNode> {
        let first = self.testlist_star()?;
        if self.at_op("=") {
            let mut children = vec![first];
            while self.eat_op("=") {
                children.push(self.testlist_star()?);
            }
            return Ok(AstNode::internal(NodeKind::Assign, children));
        }
        if let Some(op) = AUG_OPS.iter().find(|op| self.at_op(op)) {
            let _ = op;
            self.advance();
            let value = self.testlist()?;
            return Ok(AstNode::internal(NodeKind::AugAssign, vec![first, value]));
        }
        if self.at_op(":") {
            return Err(self.error("annotated assignments are not supported"));
        }
        if first.kind == NodeKind::Call {
            Ok(first)
        } else {
            Ok(AstNode::internal(NodeKind::ExprStmt, vec![first]))
        }
    }

    fn block_tail(&mut self, children: &mut Vec<AstNode>) -> PResult<()> {
        self.expect_op(":")?;
        children.extend(self.suite(None)?);
        Ok(())
    }

    fn else_block(&mut self, children: &mut Vec<AstNode>) -> PResult<()> {
        if self.eat_kw("else") {
            self.expect_op(":")?;
            children.push(AstNode::internal(NodeKind::Orelse, self.suite(None)?));
        }
        Ok(())
    }

    fn if_stmt(&mut self) -> PResult<AstNode> {
        // `if` or `elif`
        self.advance();
        let mut children = vec![self.test()?];
        self.block_tail(&mut children)?;
        if self.at_kw("elif") {
            let nested = self.if_stmt()?;
            children.push(AstNode::internal(NodeKind::Orelse, vec![nested]));
        } else {
            self.else_block(&mut children)?;
        }
        Ok(AstNode::internal(NodeKind::IfStmt, children))
    }

    fn for_stmt(&mut self) -> PResult<AstNode> {
        self.expect_kw("for")?;
        let target = self.exprlist()?;
        self.expect_kw("in")?;
        let iter = self.testlist()?;
        let mut children = vec![target, iter];
        self.block_tail(&mut children)?;
        self.else_block(&mut children)?;
        Ok(AstNode::internal(NodeKind::ForStmt, children))
    }

    fn while_stmt(&mut self) -> PResult<AstNode> {
        self.expect_kw("while")?;
        let mut children = vec![self.test()?];
        self.block_tail(&mut children)?;
        self.else_block(&mut children)?;
        Ok(AstNode::internal(NodeKind::WhileStmt, children))
    }

    fn try_stmt(&mut self) -> PResult<AstNode> {
        self.expect_kw("try")?;
        let mut children = Vec::new();
        self.block_tail(&mut children)?;
        let mut handlers = 0;
        while self.eat_kw("except") {
            handlers += 1;
            let mut h = Vec::new();
            if !self.at_op(":") {
                h.push(self.test()?);
                if self.eat_kw("as") {
                    h.push(AstNode::leaf(NodeKind::Name, self.expect_name()?.text));
                }
            }
            self.block_tail(&mut h)?;
            children.push(AstNode::internal(NodeKind::ExceptHandler, h));
        }
        if handlers > 0 {
            self.else_block(&mut children)?;
        }
        if self.eat_kw("finally") {
            self.expect_op(":")?;
            children.push(AstNode::internal(NodeKind::Finalbody, self.suite(None)?));
        } else if handlers == 0 {
            return Err(self.error("expected 'except' or 'finally'"));
        }
        Ok(AstNode::internal(NodeKind::TryStmt, children))
    }

    fn with_stmt(&mut self) -> PResult<AstNode> {
        self.expect_kw("with")?;
        let mut children = Vec::new();
        loop {
            children.push(self.test()?);
            if self.eat_kw("as") {
                children.push(self.expr()?);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.block_tail(&mut children)?;
        Ok(AstNode::internal(NodeKind::WithStmt, children))
    }

    // ---- expressions ----

    fn at_expr_list_end(&self) -> bool {
        self.at_stmt_end()
            || self.at_op("=")
            || self.at_op(")")
            || self.at_op("]")
            || self.at_op("}")
            || self.at_op(":")
            || self.at_kw("in")
            || AUG_OPS.iter().any(|op| self.at_op(op))
    }

    fn comma_list(&mut self, item: fn(&mut Self) -> PResult<AstNode>) -> PResult<AstNode> {
        let first = item(self)?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_expr_list_end() {
                break;
            }
            items.push(item(self)?);
        }
        Ok(AstNode::internal(NodeKind::TupleLit, items))
    }

    fn testlist(&mut self) -> PResult<AstNode> {
        self.comma_list(Self::star_or_test)
    }

    fn testlist_star(&mut self) -> PResult<AstNode> {
        self.comma_list(Self::star_or_test)
    }

    fn exprlist(&mut self) -> PResult<AstNode> {
        self.comma_list(Self::star_or_expr)
    }

    fn star_or_test(&mut self) -> PResult<AstNode> {
        if self.eat_op("*") {
            return self.expr();
        }
        self.test()
    }

    fn star_or_expr(&mut self) -> PResult<AstNode> {
        self.eat_op("*");
        self.expr()
    }

    fn test(&mut self) -> PResult<AstNode> {
        if self.at_kw("lambda") {
            return Err(self.error("lambda is outside the supported subset"));
        }
        let e = self.bool_chain("or", Self::and_test)?;
        if self.at_kw("if") {
            return Err(self.error("conditional expressions are outside the supported subset"));
        }
        Ok(e)
    }

    fn and_test(&mut self) -> PResult<AstNode> {
        self.bool_chain("and", Self::not_test)
    }

    /// `a or b or c` becomes a single binop with all operands.
    fn bool_chain(&mut self, kw: &str, next: fn(&mut Self) -> PResult<AstNode>) -> PResult<AstNode> {
        let first = next(self)?;
        if !self.at_kw(kw) {
            return Ok(first);
        }
        let mut operands = vec![first];
        while self.eat_kw(kw) {
            operands.push(next(self)?);
        }
        Ok(AstNode::internal(NodeKind::Binop, operands))
    }

    fn not_test(&mut self) -> PResult<AstNode> {
        if self.eat_kw("not") {
            let inner = self.not_test()?;
            return Ok(AstNode::internal(NodeKind::Unaryop, vec![inner]));
        }
        self.comparison()
    }

    fn comp_op(&mut self) -> bool {
        for op in ["<", ">", "==", ">=", "<=", "!="] {
            if self.eat_op(op) {
                return true;
            }
        }
        if self.eat_kw("in") {
            return true;
        }
        if self.at_kw("not") && self.peek_at(1).is_keyword("in") {
            self.advance();
            self.advance();
            return true;
        }
        if self.eat_kw("is") {
            self.eat_kw("not");
            return true;
        }
        false
    }

    fn comparison(&mut self) -> PResult<AstNode> {
        let first = self.expr()?;
        let mut operands = vec![first];
        while self.comp_op() {
            operands.push(self.expr()?);
        }
        if operands.len() == 1 {
            Ok(operands.pop().unwrap())
        } else {
            Ok(AstNode::internal(NodeKind::Compare, operands))
        }
    }

    fn left_assoc(&mut self, ops: &[&str], next: fn(&mut Self) -> PResult<AstNode>) -> PResult<AstNode> {
        let mut left = next(self)?;
        while ops.iter().any(|op| self.at_op(op)) {
            self.advance();
            let right = next(self)?;
            left = AstNode::internal(NodeKind::Binop, vec![left, right]);
        }
        Ok(left)
    }

    fn expr(&mut self) -> PResult<AstNode> {
        self.left_assoc(&["|"], Self::xor_expr)
    }

    fn xor_expr(&mut self) -> PResult<AstNode> {
        self.left_assoc(&["^"], Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<AstNode> {
        self.left_assoc(&["&"], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<AstNode> {
        self.left_assoc(&["<<", ">>"], Self::arith_expr)
    }

    fn arith_expr(&mut self) -> PResult<AstNode> {
        self.left_assoc(&["+", "-"], Self::term)
    }

    fn term(&mut self) -> PResult<AstNode> {
        self.left_assoc(&["*", "/", "//", "%", "@"], Self::factor)
    }

    fn factor(&mut self) -> PResult<AstNode> {
        if self.at_op("+") || self.at_op("-") || self.at_op("~") {
            self.advance();
            let inner = self.factor()?;
            return Ok(AstNode::internal(NodeKind::Unaryop, vec![inner]));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<AstNode> {
        let base = self.atom_expr()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(AstNode::internal(NodeKind::Binop, vec![base, exp]));
        }
        Ok(base)
    }

    fn atom_expr(&mut self) -> PResult<AstNode> {
        let mut node = self.atom()?;
        loop {
            if self.eat_op("(") {
                let mut children = vec![node];
                self.arguments(&mut children)?;
                self.expect_op(")")?;
                node = AstNode::internal(NodeKind::Call, children);
            } else if self.eat_op("[") {
                let index = self.subscript()?;
                self.expect_op("]")?;
                node = AstNode::internal(NodeKind::Subscript, vec![node, index]);
            } else if self.eat_op(".") {
                let attr = self.expect_name()?;
                node = AstNode::internal(
                    NodeKind::Attribute,
                    vec![node, AstNode::leaf(NodeKind::Name, attr.text)],
                );
            } else {
                return Ok(node);
            }
        }
    }

    fn arguments(&mut self, out: &mut Vec<AstNode>) -> PResult<()> {
        while !self.at_op(")") {
            if self.eat_op("*") || self.eat_op("**") {
                out.push(self.test()?);
            } else if self.peek().kind == TokKind::Name && self.peek_at(1).is_op("=") {
                let key = self.expect_name()?;
                self.advance();
                let value = self.test()?;
                out.push(AstNode::internal(
                    NodeKind::Assign,
                    vec![AstNode::leaf(NodeKind::Name, key.text), value],
                ));
            } else {
                out.push(self.test()?);
                if self.at_kw("for") {
                    return Err(self.error("generator expressions are outside the supported subset"));
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        Ok(())
    }

    fn subscript(&mut self) -> PResult<AstNode> {
        if self.at_op(":") {
            return Err(self.error("slices are outside the supported subset"));
        }
        let index = self.testlist()?;
        if self.at_op(":") {
            return Err(self.error("slices are outside the supported subset"));
        }
        Ok(index)
    }

    fn collection_items(&mut self, close: &str, items: &mut Vec<AstNode>) -> PResult<bool> {
        let mut saw_comma = false;
        while !self.at_op(close) {
            items.push(self.star_or_test()?);
            if self.at_kw("for") {
                return Err(self.error("comprehensions are outside the supported subset"));
            }
            if !self.eat_op(",") {
                break;
            }
            saw_comma = true;
        }
        self.expect_op(close)?;
        Ok(saw_comma)
    }

    fn atom(&mut self) -> PResult<AstNode> {
        let t = self.peek().clone();
        match t.kind {
            TokKind::Number => {
                self.advance();
                Ok(AstNode::leaf(NodeKind::Number, t.text))
            }
            TokKind::Str => {
                let start = t.start;
                let mut end = t.end;
                self.advance();
                while self.peek().kind == TokKind::Str {
                    end = self.advance().end;
                }
                Ok(AstNode::leaf(NodeKind::String, string_token(&self.src[start..end])))
            }
            TokKind::Name => match t.text.as_str() {
                "True" | "False" => {
                    self.advance();
                    Ok(AstNode::leaf(NodeKind::Bool, t.text))
                }
                "None" => {
                    self.advance();
                    Ok(AstNode::leaf(NodeKind::None, "None"))
                }
                kw if KEYWORDS.contains(&kw) => Err(self.error(&format!("unexpected keyword '{kw}'"))),
                _ => {
                    self.advance();
                    Ok(AstNode::leaf(NodeKind::Name, t.text))
                }
            },
            TokKind::Op => match t.text.as_str() {
                "(" => {
                    self.advance();
                    if self.eat_op(")") {
                        return Ok(AstNode::leaf(NodeKind::TupleLit, "()"));
                    }
                    if self.at_kw("yield") {
                        return Err(self.error("yield is outside the supported subset"));
                    }
                    let mut items = Vec::new();
                    let saw_comma = self.collection_items(")", &mut items)?;
                    if items.len() == 1 && !saw_comma {
                        Ok(items.pop().unwrap())
                    } else {
                        Ok(AstNode::internal(NodeKind::TupleLit, items))
                    }
                }
                "[" => {
                    self.advance();
                    if self.eat_op("]") {
                        return Ok(AstNode::leaf(NodeKind::ListLit, "[]"));
                    }
                    let mut items = Vec::new();
                    self.collection_items("]", &mut items)?;
                    Ok(AstNode::internal(NodeKind::ListLit, items))
                }
                "{" => {
                    self.advance();
                    if self.eat_op("}") {
                        return Ok(AstNode::leaf(NodeKind::DictLit, "{}"));
                    }
                    let mut items = Vec::new();
                    while !self.at_op("}") {
                        if self.at_op("**") {
                            return Err(self.error("dict unpacking is outside the supported subset"));
                        }
                        items.push(self.test()?);
                        if !self.eat_op(":") {
                            return Err(self.error("set literals are outside the supported subset"));
                        }
                        items.push(self.test()?);
                        if self.at_kw("for") {
                            return Err(self.error("comprehensions are outside the supported subset"));
                        }
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    self.expect_op("}")?;
                    Ok(AstNode::internal(NodeKind::DictLit, items))
                }
                _ => Err(self.error("unexpected token")),
            },
            _ => Err(self.error("unexpected token")),
        }
    }
}

/// Leaf text for a string literal (including quotes and prefixes).
pub(crate) fn string_token(raw: &str) -> String {
    let len = raw.chars().count();
    if len > MAX_STRING_TOKEN {
        format!("str:len={len}")
    } else {
        raw.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use NodeKind::*;

    fn leaf(kind: NodeKind, t: &str) -> AstNode {
        AstNode::leaf(kind, t)
    }

    fn node(kind: NodeKind, children: Vec<AstNode>) -> AstNode {
        AstNode::internal(kind, children)
    }

    #[test]
    fn smallest_function() {
        let tree = parse_function("def f():\n    return 1\n").unwrap();
        assert_eq!(
            tree,
            node(
                FuncDef,
                vec![
                    leaf(Name, "f"),
                    node(Params, vec![]),
                    node(ReturnStmt, vec![leaf(Number, "1")])
                ]
            )
        );
    }

    #[test]
    fn if_with_call_has_expected_shape() {
        let tree = parse_function("def f(x):\n    if x == 3: print(\"Hello\")\n").unwrap();
        let if_stmt = &tree.children[2];
        assert_eq!(
            *if_stmt,
            node(
                IfStmt,
                vec![
                    node(Compare, vec![leaf(Name, "x"), leaf(Number, "3")]),
                    node(Call, vec![leaf(Name, "print"), leaf(String, "\"Hello\"")]),
                ]
            )
        );
    }

    #[test]
    fn leaves_follow_source_order() {
        let src = "def g(self, key, default=None):\n    value = self.data.get(key, default)\n    return value\n";
        let tree = parse_function(src).unwrap();
        assert_eq!(
            tree.leaf_tokens(),
            vec!["g", "self", "key", "default", "None", "value", "self", "data", "get", "key", "default", "value"]
        );
    }

    #[test]
    fn long_strings_are_replaced_by_length() {
        let blob = "a".repeat(100);
        let tree = parse_function(&format!("def f():\n    exec(\"{blob}\")\n")).unwrap();
        assert_eq!(tree.leaf_tokens()[2], "str:len=102");
    }

    #[test]
    fn errors_carry_position_and_token() {
        let err = parse_function("def f():\n    x = [i for i in y]\n").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.token, "for");
        let err = parse_function("class A:\n    pass\n").unwrap_err();
        assert_eq!((err.line, err.col), (1, 1));
        assert!(parse_function("def f():\n    return 1\ndef g():\n    pass\n").is_err());
        assert!(parse_function("def f():\n    x = a[1:2]\n").is_err());
    }

    #[test]
    fn layout_tracks_body_statements() {
        let src = "def f(a):\n    \"\"\"doc\"\"\"\n    x = 1; y = 2\n    if a:\n        pass\n";
        let (_, layout) = parse_function_layout(src).unwrap();
        assert!(!layout.inline_suite);
        assert_eq!(layout.body.len(), 4);
        assert!(layout.body[0].is_docstring);
        assert!(layout.body[1].first_on_line);
        assert!(!layout.body[2].first_on_line);
        assert_eq!(&src[layout.body[3].start..layout.body[3].end], "if a:\n        pass");

        let (_, inline) = parse_function_layout("def f(): return 1\n").unwrap();
        assert!(inline.inline_suite);
        assert_eq!(&"def f(): return 1\n"[..inline.header_end], "def f():");
    }

    #[test]
    fn elif_nests_inside_orelse() {
        let tree =
            parse_function("def f(a):\n    if a:\n        pass\n    elif b:\n        pass\n    else:\n        pass\n")
                .unwrap();
        let if_stmt = &tree.children[2];
        assert_eq!(if_stmt.children[2].kind, Orelse);
        assert_eq!(if_stmt.children[2].children[0].kind, IfStmt);
        assert_eq!(if_stmt.children[2].children[0].children[2].kind, Orelse);
    }
}
