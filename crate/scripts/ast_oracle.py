#!/usr/bin/env python3
"""Builds expected trees for the grammar fixtures from CPython's own parser.

Reads fixture sources from crates/core/tests/fixtures/grammar_sources.txt
(cases separated by lines of the form "### <name>") and writes
grammar_cases.jsonl next to it: one {name, source, tree} object per case,
where tree follows the crate's AstNode JSON layout.

The mapping from Python's ast to our node kinds is written out here by hand
so the Rust parser is checked against an independent implementation.
"""

import ast
import json
import sys
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures"
MAX_STRING_TOKEN = 64


def leaf(kind, token):
    return {"kind": kind, "token": token}


def node(kind, children):
    out = {"kind": kind}
    if children:
        out["children"] = children
    return out


class Converter:
    def __init__(self, source):
        self.source = source

    def segment(self, n):
        return ast.get_source_segment(self.source, n)

    def func(self, f):
        return node("func_def", [leaf("name", f.name), self.params(f.args)] + self.body(f.body))

    def params(self, a):
        out = []
        positional = a.posonlyargs + a.args
        defaults = [None] * (len(positional) - len(a.defaults)) + list(a.defaults)
        for arg, default in zip(positional, defaults):
            out.append(self.param(arg, default))
        if a.vararg:
            out.append(leaf("name", a.vararg.arg))
        for arg, default in zip(a.kwonlyargs, a.kw_defaults):
            out.append(self.param(arg, default))
        if a.kwarg:
            out.append(leaf("name", a.kwarg.arg))
        return node("params", out)

    def param(self, arg, default):
        name = leaf("name", arg.arg)
        return name if default is None else node("assign", [name, self.expr(default)])

    def body(self, stmts):
        return [self.stmt(s) for s in stmts]

    def stmt(self, s):
        if isinstance(s, ast.FunctionDef):
            return self.func(s)
        if isinstance(s, ast.Pass):
            return leaf("pass_stmt", "pass")
        if isinstance(s, ast.Break):
            return leaf("break_stmt", "break")
        if isinstance(s, ast.Continue):
            return leaf("continue_stmt", "continue")
        if isinstance(s, ast.Return):
            if s.value is None:
                return leaf("return_stmt", "return")
            return node("return_stmt", [self.expr(s.value)])
        if isinstance(s, ast.Raise):
            if s.exc is None:
                return leaf("raise_stmt", "raise")
            kids = [self.expr(s.exc)]
            if s.cause is not None:
                kids.append(self.expr(s.cause))
            return node("raise_stmt", kids)
        if isinstance(s, ast.Import):
            kids = []
            for alias in s.names:
                kids += self.dotted(alias.name)
                if alias.asname:
                    kids.append(leaf("name", alias.asname))
            return node("import_stmt", kids)
        if isinstance(s, ast.ImportFrom):
            kids = self.dotted(s.module) if s.module else []
            for alias in s.names:
                kids.append(leaf("name", alias.name))
                if alias.asname:
                    kids.append(leaf("name", alias.asname))
            return node("import_stmt", kids)
        if isinstance(s, ast.Assign):
            return node("assign", [self.expr(t) for t in s.targets] + [self.expr(s.value)])
        if isinstance(s, ast.AugAssign):
            return node("aug_assign", [self.expr(s.target), self.expr(s.value)])
        if isinstance(s, ast.Expr):
            e = self.expr(s.value)
            return e if isinstance(s.value, ast.Call) else node("expr_stmt", [e])
        if isinstance(s, ast.If):
            kids = [self.expr(s.test)] + self.body(s.body)
            if s.orelse:
                kids.append(node("orelse", self.body(s.orelse)))
            return node("if_stmt", kids)
        if isinstance(s, ast.For):
            kids = [self.expr(s.target), self.expr(s.iter)] + self.body(s.body)
            if s.orelse:
                kids.append(node("orelse", self.body(s.orelse)))
            return node("for_stmt", kids)
        if isinstance(s, ast.While):
            kids = [self.expr(s.test)] + self.body(s.body)
            if s.orelse:
                kids.append(node("orelse", self.body(s.orelse)))
            return node("while_stmt", kids)
        if isinstance(s, ast.Try):
            kids = self.body(s.body)
            for h in s.handlers:
                hk = []
                if h.type is not None:
                    hk.append(self.expr(h.type))
                if h.name:
                    hk.append(leaf("name", h.name))
                kids.append(node("except_handler", hk + self.body(h.body)))
            if s.orelse:
                kids.append(node("orelse", self.body(s.orelse)))
            if s.finalbody:
                kids.append(node("finalbody", self.body(s.finalbody)))
            return node("try_stmt", kids)
        if isinstance(s, ast.With):
            kids = []
            for item in s.items:
                kids.append(self.expr(item.context_expr))
                if item.optional_vars is not None:
                    kids.append(self.expr(item.optional_vars))
            return node("with_stmt", kids + self.body(s.body))
        raise ValueError(f"statement outside the subset: {type(s).__name__}")

    def dotted(self, name):
        return [leaf("name", part) for part in name.split(".")]

    def expr(self, e):
        if isinstance(e, ast.Name):
            return leaf("name", e.id)
        if isinstance(e, ast.Constant):
            if e.value is None:
                return leaf("none", "None")
            if isinstance(e.value, bool):
                return leaf("bool", str(e.value))
            text = self.segment(e)
            if isinstance(e.value, (str, bytes)):
                n = len(text)
                return leaf("string", text if n <= MAX_STRING_TOKEN else f"str:len={n}")
            return leaf("number", text)
        if isinstance(e, ast.JoinedStr):
            # f-strings stay opaque string tokens
            text = self.segment(e)
            n = len(text)
            return leaf("string", text if n <= MAX_STRING_TOKEN else f"str:len={n}")
        if isinstance(e, ast.Starred):
            return self.expr(e.value)
        if isinstance(e, ast.Call):
            items = [(a.lineno, a.col_offset, self.expr(a)) for a in e.args]
            for k in e.keywords:
                value = self.expr(k.value)
                if k.arg is None:
                    items.append((k.lineno, k.col_offset, value))
                else:
                    items.append((k.lineno, k.col_offset, node("assign", [leaf("name", k.arg), value])))
            items.sort(key=lambda t: (t[0], t[1]))
            return node("call", [self.expr(e.func)] + [t[2] for t in items])
        if isinstance(e, ast.Attribute):
            return node("attribute", [self.expr(e.value), leaf("name", e.attr)])
        if isinstance(e, ast.Subscript):
            if isinstance(e.slice, ast.Slice):
                raise ValueError("slice")
            return node("subscript", [self.expr(e.value), self.expr(e.slice)])
        if isinstance(e, ast.BinOp):
            return node("binop", [self.expr(e.left), self.expr(e.right)])
        if isinstance(e, ast.BoolOp):
            return node("binop", [self.expr(v) for v in e.values])
        if isinstance(e, ast.UnaryOp):
            return node("unaryop", [self.expr(e.operand)])
        if isinstance(e, ast.Compare):
            return node("compare", [self.expr(e.left)] + [self.expr(c) for c in e.comparators])
        if isinstance(e, ast.List):
            if not e.elts:
                return leaf("list_lit", "[]")
            return node("list_lit", [self.expr(x) for x in e.elts])
        if isinstance(e, ast.Tuple):
            if not e.elts:
                return leaf("tuple_lit", "()")
            return node("tuple_lit", [self.expr(x) for x in e.elts])
        if isinstance(e, ast.Dict):
            if not e.keys:
                return leaf("dict_lit", "{}")
            kids = []
            for k, v in zip(e.keys, e.values):
                if k is None:
                    raise ValueError("dict unpacking")
                kids += [self.expr(k), self.expr(v)]
            return node("dict_lit", kids)
        raise ValueError(f"expression outside the subset: {type(e).__name__}")


def read_cases(path):
    cases, name, lines = [], None, []
    for line in path.read_text().splitlines(keepends=True):
        if line.startswith("### "):
            if name is not None:
                cases.append((name, "".join(lines)))
            name, lines = line[4:].strip(), []
        else:
            lines.append(line)
    if name is not None:
        cases.append((name, "".join(lines)))
    return cases


def main():
    out = []
    for name, source in read_cases(FIXTURES / "grammar_sources.txt"):
        module = ast.parse(source)
        assert len(module.body) == 1 and isinstance(module.body[0], ast.FunctionDef), name
        tree = Converter(source).func(module.body[0])
        out.append(json.dumps({"name": name, "source": source, "tree": tree}, ensure_ascii=False))
    (FIXTURES / "grammar_cases.jsonl").write_text("\n".join(out) + "\n")
    print(f"wrote {len(out)} cases", file=sys.stderr)


if __name__ == "__main__":
    main()
