//! Tokenizer for the supported Python subset, including INDENT/DEDENT
//! tracking and implicit line joining inside brackets.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokKind {
    Name,
    Number,
    Str,
    Op,
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokKind,
    pub text: String,
    pub line: usize,
    pub col: usize,
    /// Byte offsets into the source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokKind::Op && self.text == op
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        self.kind == TokKind::Name && self.text == kw
    }
}

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", "**", "//", "==", "!=", "<=", ">=", "<<", ">>", "+=", "-=", "*=", "/=",
    "%=", "&=", "|=", "^=", "@=", ":=", "+", "-", "*", "/", "%", "@", "<", ">", "=", "&", "|", "^", "~", "(", ")", "[",
    "]", "{", "}", ",", ":", ".", ";",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(src).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: usize,
    line_start: usize,
    indents: Vec<usize>,
    base_indent: Option<usize>,
    depth: usize,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            line_start: 0,
            indents: vec![0],
            base_indent: None,
            depth: 0,
            out: Vec::new(),
        }
    }

    fn err(&self, at: usize, token: &str, message: &str) -> ParseError {
        ParseError {
            line: self.line,
            col: at.saturating_sub(self.line_start) + 1,
            token: token.to_string(),
            message: message.to_string(),
        }
    }

    fn push(&mut self, kind: TokKind, start: usize, end: usize) {
        self.out.push(Token {
            kind,
            text: self.src[start..end].to_string(),
            line: self.line,
            col: start - self.line_start + 1,
            start,
            end,
        });
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut at_line_start = true;
        while self.pos < self.bytes.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let c = self.bytes[self.pos];
            match c {
                b' ' | b'\t' | b'\x0c' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b'\\' if self.bytes.get(self.pos + 1) == Some(&b'\n') => {
                    self.pos += 2;
                    self.new_line();
                }
                b'\n' => {
                    if self.depth == 0 {
                        let last_is_newline = matches!(
                            self.out.last().map(|t| &t.kind),
                            None | Some(TokKind::Newline) | Some(TokKind::Indent) | Some(TokKind::Dedent)
                        );
                        if !last_is_newline {
                            self.push(TokKind::Newline, self.pos, self.pos);
                        }
                        at_line_start = true;
                    }
                    self.pos += 1;
                    self.new_line();
                }
                b'"' | b'\'' => self.string(self.pos)?,
                b'0'..=b'9' => self.number(),
                b'.' if self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit) => self.number(),
                _ if c == b'_' || c.is_ascii_alphabetic() || c >= 0x80 => self.name_or_prefixed_string()?,
                _ => self.operator()?,
            }
        }
        if !matches!(
            self.out.last().map(|t| &t.kind),
            None | Some(TokKind::Newline) | Some(TokKind::Dedent)
        ) {
            self.push(TokKind::Newline, self.pos, self.pos);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokKind::Dedent, self.pos, self.pos);
        }
        self.push(TokKind::Eof, self.pos, self.pos);
        Ok(self.out)
    }

    fn new_line(&mut self) {
        self.line += 1;
        self.line_start = self.pos;
    }

    /// Measures leading whitespace and emits INDENT/DEDENT. Returns true when
    /// the line is blank or comment-only and was consumed.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        let mut width = 0;
        let mut p = self.pos;
        while p < self.bytes.len() {
            match self.bytes[p] {
                b' ' => width += 1,
                b'\t' => width = (width / 8 + 1) * 8,
                b'\x0c' => width = 0,
                _ => break,
            }
            p += 1;
        }
        if p >= self.bytes.len() || self.bytes[p] == b'\n' || self.bytes[p] == b'#' {
            // blank line: consume through newline
            while p < self.bytes.len() && self.bytes[p] != b'\n' {
                p += 1;
            }
            self.pos = p;
            if p < self.bytes.len() {
                self.pos += 1;
                self.new_line();
            }
            return Ok(true);
        }
        self.pos = p;
        let base = *self.base_indent.get_or_insert(width);
        if width < base {
            return Err(self.err(p, "", "line is indented less than the function header"));
        }
        let width = width - base;
        let current = *self.indents.last().unwrap();
        if width > current {
            self.indents.push(width);
            self.push(TokKind::Indent, p, p);
        } else {
            while width < *self.indents.last().unwrap() {
                self.indents.pop();
                self.push(TokKind::Dedent, p, p);
            }
            if width != *self.indents.last().unwrap() {
                return Err(self.err(p, "", "inconsistent dedent"));
            }
        }
        Ok(false)
    }

    fn name_or_prefixed_string(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let mut p = self.pos;
        while p < self.bytes.len() {
            let c = self.bytes[p];
            if c == b'_' || c.is_ascii_alphanumeric() || c >= 0x80 {
                p += 1;
            } else {
                break;
            }
        }
        let word = &self.src[start..p];
        let next = self.bytes.get(p).copied();
        let is_prefix = word.len() <= 2
            && word
                .chars()
                .all(|ch| matches!(ch.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'));
        if is_prefix && matches!(next, Some(b'"') | Some(b'\'')) {
            self.pos = p;
            return self.string(start);
        }
        self.pos = p;
        self.push(TokKind::Name, start, p);
        Ok(())
    }

    fn string(&mut self, start: usize) -> Result<(), ParseError> {
        let quote = self.bytes[self.pos];
        let triple = self.bytes.get(self.pos + 1) == Some(&quote) && self.bytes.get(self.pos + 2) == Some(&quote);
        let start_line = self.line;
        let start_col = start - self.line_start + 1;
        self.pos += if triple { 3 } else { 1 };
        loop {
            let Some(&c) = self.bytes.get(self.pos) else {
                return Err(ParseError {
                    line: start_line,
                    col: start_col,
                    token: self.src[start..].chars().take(20).collect(),
                    message: "unterminated string literal".into(),
                });
            };
            match c {
                b'\\' => {
                    self.pos += 2;
                    if self.bytes.get(self.pos - 1) == Some(&b'\n') {
                        self.new_line();
                    }
                }
                b'\n' if !triple => {
                    return Err(ParseError {
                        line: start_line,
                        col: start_col,
                        token: self.src[start..self.pos].to_string(),
                        message: "unterminated string literal".into(),
                    });
                }
                b'\n' => {
                    self.pos += 1;
                    self.new_line();
                }
                _ if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.bytes.get(self.pos + 1) == Some(&quote) && self.bytes.get(self.pos + 2) == Some(&quote) {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                _ => self.pos += 1,
            }
        }
        self.out.push(Token {
            kind: TokKind::Str,
            text: self.src[start..self.pos].to_string(),
            line: start_line,
            col: start_col,
            start,
            end: self.pos,
        });
        Ok(())
    }

    fn number(&mut self) {
        let start = self.pos;
        let mut p = self.pos;
        while p < self.bytes.len() {
            let c = self.bytes[p];
            let exp_sign = matches!(c, b'+' | b'-')
                && p > start
                && matches!(self.bytes[p - 1], b'e' | b'E')
                && !self.src[start..p].starts_with("0x")
                && !self.src[start..p].starts_with("0X");
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || exp_sign {
                p += 1;
            } else {
                break;
            }
        }
        self.pos = p;
        self.push(TokKind::Number, start, p);
    }

    fn operator(&mut self) -> Result<(), ParseError> {
        let rest = &self.src[self.pos..];
        let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) else {
            let ch: String = rest.chars().take(1).collect();
            return Err(self.err(self.pos, &ch, "unexpected character"));
        };
        match *op {
            "(" | "[" | "{" => self.depth += 1,
            ")" | "]" | "}" => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        let start = self.pos;
        self.pos += op.len();
        self.push(TokKind::Op, start, self.pos);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn indent_and_dedent_are_balanced() {
        use TokKind::*;
        assert_eq!(
            kinds("def f():\n    return 1\n"),
            vec![Name, Name, Op, Op, Op, Newline, Indent, Name, Number, Newline, Dedent, Eof]
        );
    }

    #[test]
    fn brackets_join_lines() {
        let toks = tokenize("def f():\n    return g(1,\n        2)\n").unwrap();
        let newlines = toks.iter().filter(|t| t.kind == TokKind::Newline).count();
        assert_eq!(newlines, 2);
    }

    #[test]
    fn prefixed_and_triple_strings() {
        let toks = tokenize("x = rb'a' + \"\"\"b\nc\"\"\"\n").unwrap();
        let strs: Vec<_> = toks
            .iter()
            .filter(|t| t.kind == TokKind::Str)
            .map(|t| t.text.as_str())
            .collect();
        assert_eq!(strs, vec!["rb'a'", "\"\"\"b\nc\"\"\""]);
    }

    #[test]
    fn base_indentation_of_methods_is_ignored() {
        assert_eq!(kinds("    def f():\n        pass\n"), kinds("def f():\n    pass\n"));
    }

    #[test]
    fn numbers_with_exponents() {
        let toks = tokenize("1e-3 + 0x1F\n").unwrap();
        assert_eq!(toks[0].text, "1e-3");
        assert_eq!(toks[2].text, "0x1F");
    }
}
