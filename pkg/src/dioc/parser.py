"""Concrete syntax: a recursive-descent parser for DIOC programs and updates,
plus pretty-printers for both DIOC and DPOC terms."""
from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .ast import (
    Assign, Binary, Call, Code, If, Interaction, LAssign, LIf, Lit, LWhile, NoToken,
    One, Operation, Par, Recv, Scope, ScopeLead, ScopePlain, Send, SendHO, Seq, Unary,
    Var, While, Zero, format_value, is_initial,
)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    span: tuple  # (line, column, length)
    message: str
    code: str = "PARSE"

    def __str__(self):
        line, col, _ = self.span
        return "%d:%d: %s [%s] %s" % (line, col, self.severity.lower(), self.code, self.message)


class ParseError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class SourceFile:
    path: str
    text: str

    @classmethod
    def read(cls, path):
        return cls(str(path), Path(path).read_text(encoding="utf-8"))


KEYWORDS = {"if", "else", "while", "scope", "not", "and", "or", "true", "false", "null"}
AUX_VAR = re.compile(r"x_\d+$")

TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+|//[^\n]*)
  | (?P<nl>\n)
  | (?P<num>\d+\.\d+|\d+)
  | (?P<str>"(?:[^"\\\n]|\\.)*")
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>->|→|==|!=|<=|>=|&&|\|\||[<>=@:;|{}(),+\-*/!])
    """,
    re.VERBOSE,
)


@dataclass
class Tok:
    kind: str
    text: str
    line: int
    col: int

    @property
    def span(self):
        return (self.line, self.col, max(len(self.text), 1))


def tokenize(text: str):
    toks = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = TOKEN_RE.match(text, pos)
        if not m:
            col = pos - line_start + 1
            raise ParseError([Diagnostic("Error", (line, col, 1), "unexpected character %r" % text[pos])])
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind != "ws":
            t = m.group()
            if kind == "id" and t in KEYWORDS:
                kind = "kw"
            toks.append(Tok(kind, t, line, pos - line_start + 1))
        pos = m.end()
    toks.append(Tok("eof", "", line, pos - line_start + 1))
    return toks


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None, code="PARSE"):
        tok = tok or self.tok
        raise ParseError([Diagnostic("Error", tok.span, msg, code)])

    def at(self, text):
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def eat(self, text):
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error("expected %r, found %r" % (text, found))
        t = self.tok
        self.i += 1
        return t

    def ident(self, what="identifier"):
        if self.tok.kind != "id":
            self.error("expected %s, found %r" % (what, self.tok.text or "end of input"))
        t = self.tok
        self.i += 1
        return t

    # statements

    def program(self, closers=("eof",)):
        parts = [self.stmt()]
        while self.at(";"):
            self.i += 1
            if self.tok.kind == "eof" or self.at("}") or self.at("|"):
                break  # trailing separator
            parts.append(self.stmt())
        out = parts[-1]
        for p in reversed(parts[:-1]):
            out = Seq(p, out)
        return out

    def block(self):
        self.eat("{")
        branches = [self.program()]
        while self.at("|"):
            self.i += 1
            branches.append(self.program())
        self.eat("}")
        out = branches[-1]
        for b in reversed(branches[:-1]):
            out = Par(b, out)
        return out

    def stmt(self):
        t = self.tok
        if t.kind == "num" and t.text in ("0", "1"):
            self.i += 1
            return One() if t.text == "1" else Zero()
        if self.at("{"):
            return self.block()
        if self.at("if"):
            self.i += 1
            guard = self.expr()
            role = self.at_role()
            then = self.block()
            else_ = One()
            if self.at("else"):
                self.i += 1
                else_ = self.block()
            return If(guard, role, then, else_, span=t.span)
        if self.at("while"):
            self.i += 1
            guard = self.expr()
            role = self.at_role()
            return While(guard, role, self.block(), span=t.span)
        if self.at("scope"):
            self.i += 1
            name = None
            if self.tok.kind == "id":
                name = self.ident().text
            role = self.at_role()
            return Scope(role, self.block(), name, span=t.span)
        if t.kind == "id":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "@":
                return self.assign()
            if nxt.kind == "op" and nxt.text == ":":
                return self.interaction()
        self.error("expected a statement, found %r" % (t.text or "end of input"))

    def at_role(self):
        self.eat("@")
        return self.ident("role name").text

    def user_var(self, tok):
        if AUX_VAR.match(tok.text):
            self.error("variable %r is reserved for auxiliary communication" % tok.text, tok)
        return tok.text

    def assign(self):
        start = self.tok
        var = self.user_var(self.ident())
        role = self.at_role()
        self.eat("=")
        e = self.expr()
        return Assign(var, role, e, span=start.span)

    def interaction(self):
        start = self.tok
        op = self.ident("operation").text
        self.eat(":")
        sender = self.ident("sender role").text
        self.eat("(")
        e = self.expr()
        self.eat(")")
        if self.at("→"):
            self.i += 1
        else:
            self.eat("->")
        rtok = self.ident("receiver role")
        self.eat("(")
        var = self.user_var(self.ident("receiver variable"))
        self.eat(")")
        if sender == rtok.text:
            self.error("an interaction needs two distinct roles", rtok)
        return Interaction(Operation(op), sender, e, rtok.text, var, span=start.span)

    # expressions, loosest first

    def expr(self):
        left = self.conj()
        while self.at("or") or self.at("||"):
            self.i += 1
            left = Binary("or", left, self.conj())
        return left

    def conj(self):
        left = self.comparison()
        while self.at("and") or self.at("&&"):
            self.i += 1
            left = Binary("and", left, self.comparison())
        return left

    def comparison(self):
        left = self.additive()
        while self.tok.kind == "op" and self.tok.text in ("==", "!=", "<", "<=", ">", ">="):
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.additive())
        return left

    def additive(self):
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            op = self.tok.text
            self.i += 1
            left = Binary(op, left, self.unary())
        return left

    def unary(self):
        if self.at("not") or self.at("!"):
            self.i += 1
            return Unary("not", self.unary())
        if self.at("-"):
            self.i += 1
            if self.tok.kind == "num":
                v = self.number()
                return Lit(-v)
            return Unary("neg", self.unary())
        return self.atom()

    def number(self):
        t = self.tok
        self.i += 1
        return float(t.text) if "." in t.text else int(t.text)

    def atom(self):
        t = self.tok
        if t.kind == "num":
            return Lit(self.number())
        if t.kind == "str":
            self.i += 1
            return Lit(re.sub(r"\\(.)", r"\1", t.text[1:-1]))
        if t.kind == "kw" and t.text in ("true", "false", "null"):
            self.i += 1
            return Lit({"true": True, "false": False, "null": None}[t.text])
        if self.at("("):
            self.i += 1
            e = self.expr()
            self.eat(")")
            return e
        if t.kind == "id":
            self.i += 1
            if self.at("("):
                self.i += 1
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.i += 1
                        args.append(self.expr())
                self.eat(")")
                return Call(t.text, tuple(args))
            return Var(t.text)
        self.error("expected an expression, found %r" % (t.text or "end of input"))


def _text(src):
    return src.text if isinstance(src, SourceFile) else src


def parse_dioc(src):
    """Parse a program. Raises ParseError carrying diagnostics."""
    p = Parser(_text(src))
    if p.tok.kind == "eof":
        p.error("empty program")
    prog = p.program()
    if p.tok.kind != "eof":
        p.error("unexpected %r" % p.tok.text)
    return prog


def parse_expr(text: str):
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("unexpected %r" % p.tok.text)
    return e


def parse_update(src, name=None):
    """Parse an update file; returns ``(name, body)``."""
    if name is None:
        name = Path(src.path).stem if isinstance(src, SourceFile) else "update"
    body = parse_dioc(src)
    if not is_initial(body):
        raise ParseError([Diagnostic("Error", (1, 1, 1), "updates must be initial", "INITIAL")])
    return name, body


# pretty printing

BINARY_SYMBOLS = {"and": "and", "or": "or"}


def pretty_expr(e) -> str:
    if isinstance(e, Lit):
        return format_value(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return ("not(%s)" if e.op == "not" else "-(%s)") % pretty_expr(e.arg)
    if isinstance(e, Binary):
        return "%s %s %s" % (_operand(e.left), e.op, _operand(e.right))
    if isinstance(e, Call):
        return "%s(%s)" % (e.name, ", ".join(pretty_expr(a) for a in e.args))
    raise TypeError("not an expression: %r" % (e,))


def _operand(e):
    s = pretty_expr(e)
    return "(%s)" % s if isinstance(e, Binary) else s


def _chain(p, kind):
    items = []
    while isinstance(p, kind):
        items.append(p.left)
        p = p.right
    items.append(p)
    return items


def pretty(p, indent: int = 0) -> str:
    """Render a DIOC or DPOC term; the DIOC output parses back to the same tree."""
    return _pp(p, indent)


def _pad(n):
    return "  " * n


def _block(p, ind):
    return "{\n%s\n%s}" % (_pp(p, ind + 1), _pad(ind))


def _pp(p, ind):
    pad = _pad(ind)
    if isinstance(p, Seq):
        parts = []
        for item in _chain(p, Seq):
            if isinstance(item, Seq):
                parts.append(pad + _block(item, ind))
            else:
                parts.append(_pp(item, ind))
        return ";\n".join(parts)
    if isinstance(p, Par):
        branches = [_pp(b, ind + 1) for b in _chain(p, Par)]
        return "%s{\n%s\n%s}" % (pad, ("\n%s|\n" % _pad(ind)).join(branches), pad)
    if isinstance(p, One):
        return pad + "1"
    if isinstance(p, Zero):
        return pad + "0"
    if isinstance(p, Interaction):
        return "%s%s : %s( %s ) -> %s( %s )" % (
            pad, p.op, p.sender, pretty_expr(p.expr), p.receiver, p.var)
    if isinstance(p, Assign):
        return "%s%s@%s = %s" % (pad, p.var, p.role, pretty_expr(p.expr))
    if isinstance(p, If):
        out = "%sif ( %s ) @%s %s" % (pad, pretty_expr(p.guard), p.role, _block(p.then, ind))
        if not isinstance(p.else_, One):
            out += " else " + _block(p.else_, ind)
        return out
    if isinstance(p, While):
        return "%swhile ( %s ) @%s %s" % (pad, pretty_expr(p.guard), p.role, _block(p.body, ind))
    if isinstance(p, Scope):
        name = " " + p.name if p.name else ""
        return "%sscope%s @%s %s" % (pad, name, p.coordinator, _block(p.body, ind))
    # DPOC
    if isinstance(p, Send):
        return "%s%s : %s to %s" % (pad, p.op, pretty_expr(p.expr), p.to)
    if isinstance(p, Recv):
        return "%s%s : %s from %s" % (pad, p.op, p.var, p.frm)
    if isinstance(p, SendHO):
        if isinstance(p.payload, NoToken):
            payload = "no"
        else:
            payload = _block(p.payload.proc, ind)
        return "%s%s : %s to %s" % (pad, p.op, payload, p.to)
    if isinstance(p, LAssign):
        return "%s%s = %s" % (pad, p.var, pretty_expr(p.expr))
    if isinstance(p, LIf):
        out = "%sif ( %s ) %s" % (pad, pretty_expr(p.guard), _block(p.then, ind))
        if not isinstance(p.else_, One):
            out += " else " + _block(p.else_, ind)
        return out
    if isinstance(p, LWhile):
        return "%swhile ( %s ) %s" % (pad, pretty_expr(p.guard), _block(p.body, ind))
    if isinstance(p, (ScopeLead, ScopePlain)):
        name = " " + p.name if p.name else ""
        out = "%s%s : scope%s @%s %s" % (pad, p.index, name, p.coordinator, _block(p.body, ind))
        if isinstance(p, ScopeLead):
            out += " roles { %s }" % ", ".join(sorted(p.roles))
        return out
    if isinstance(p, Code):
        return _pp(p.proc, ind)
    raise TypeError("cannot print %r" % (p,))


def squash(text: str) -> str:
    """Whitespace-insensitive form used for golden comparisons."""
    return re.sub(r"\s+", "", text)


# hand-written DPOC networks: role NAME { process } ...

class DpocParser(Parser):
    def stmt(self):
        t = self.tok
        if t.kind == "num" and t.text in ("0", "1"):
            self.i += 1
            return One() if t.text == "1" else Zero()
        if self.at("{"):
            return self.block()
        if self.at("if"):
            self.i += 1
            guard = self.expr()
            then = self.block()
            else_ = One()
            if self.at("else"):
                self.i += 1
                else_ = self.block()
            return LIf(guard, then, else_)
        if self.at("while"):
            self.i += 1
            guard = self.expr()
            return LWhile(guard, self.block())
        if t.kind == "id":
            nxt = self.peek()
            if nxt.kind == "op" and nxt.text == "=":
                self.i += 2
                return LAssign(t.text, self.expr())
            if nxt.kind == "op" and nxt.text == ":":
                self.i += 2
                e = self.expr()
                kw = self.ident("'to' or 'from'")
                peer = self.ident("role name").text
                if kw.text == "to":
                    return Send(Operation(t.text), e, peer)
                if kw.text == "from" and isinstance(e, Var):
                    return Recv(Operation(t.text), e.name, peer)
                self.error("expected 'to' or 'from'", kw)
        self.error("expected a statement, found %r" % (t.text or "end of input"))


def parse_network(src) -> dict:
    """Parse ``role NAME { P } ...`` into ``{role: process}``."""
    p = DpocParser(_text(src))
    out = {}
    if p.tok.kind == "eof":
        p.error("empty network")
    while p.tok.kind != "eof":
        kw = p.ident("'role'")
        if kw.text != "role":
            p.error("expected 'role'", kw)
        name = p.ident("role name")
        if name.text in out:
            p.error("duplicate role %r" % name.text, name)
        out[name.text] = p.block()
    return out
