"""Recursive-descent parser for RandML concrete syntax.

Sugar is expanded while parsing, so the result only contains core nodes:

* ``fun x -> e``            becomes ``rec _ x = e``
* ``let x = e1 in e2``      becomes ``(fun x -> e2) e1``
* ``e1; e2``                becomes ``(fun _ -> e2) e1``
* ``flip``                  becomes ``rand 1 = 1``
* ``ref e``                 becomes ``allocN 1 e``
* ``not e``                 becomes ``if e then false else true``
* ``let (x, y) = e in b``   binds a fresh name and projects with fst/snd

A line of the form ``#include NAME`` splices in the tokens of another source
obtained from the include resolver (by default the corpus directory).
"""
from __future__ import annotations

import itertools
import re
from typing import Callable, NamedTuple, Optional

from .syntax import (
    FALSE,
    TRUE,
    UNIT,
    AllocN,
    App,
    BinOp,
    Bool,
    Expr,
    Fst,
    If,
    Inl,
    Inr,
    Int,
    Load,
    Match,
    Offset,
    Pair,
    Rand,
    Rec,
    Snd,
    Store,
    Tick,
    Var,
)


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0, source: str = "<input>"):
        self.msg = msg
        self.line = line
        self.col = col
        self.source = source
        super().__init__(f"{source}:{line}:{col}: {msg}")


class UnboundVariableError(ParseError):
    pass


KEYWORDS = {
    "let", "rec", "in", "fun", "if", "then", "else", "match", "with", "end",
    "inl", "inr", "fst", "snd", "ref", "tick", "rand", "flip", "allocN",
    "true", "false", "not", "quot", "rem",
}


class Tok(NamedTuple):
    kind: str  # INT, IDENT, KW, SYM, EOF
    text: str
    line: int
    col: int
    source: str


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)"
    r"|(?P<nl>\n)"
    r"|(?P<int>\d+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<sym>\.\[|->|<-|<=|==|[()\[\],;=<+\-*!|])"
)
_INCLUDE_RE = re.compile(r"#include[ \t]+([A-Za-z0-9_./-]+)[ \t]*")

Resolver = Callable[[str], str]


def _default_resolver(name: str) -> str:
    from ..corpus.loader import read_include

    return read_include(name)


def tokenize(text: str, source: str = "<input>", resolver: Optional[Resolver] = None,
             _active: tuple = ()) -> list:
    toks: list = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        if text.startswith("(*", i):
            depth, start = 0, (line, col)
            while i < n:
                if text.startswith("(*", i):
                    depth += 1
                    i += 2
                    col += 2
                elif text.startswith("*)", i):
                    depth -= 1
                    i += 2
                    col += 2
                    if depth == 0:
                        break
                elif text[i] == "\n":
                    i += 1
                    line += 1
                    col = 1
                else:
                    i += 1
                    col += 1
            if depth:
                raise ParseError("unterminated comment", *start, source)
            continue
        if text[i] == "#" and col == 1:
            m = _INCLUDE_RE.match(text, i)
            if not m:
                raise ParseError("unknown directive", line, col, source)
            name = m.group(1)
            if name in _active:
                raise ParseError(f"recursive include of {name}", line, col, source)
            res = resolver or _default_resolver
            try:
                inc = res(name)
            except (OSError, KeyError) as exc:
                raise ParseError(f"cannot include {name}: {exc}", line, col, source) from None
            toks.extend(t for t in tokenize(inc, name, resolver, _active + (name,))
                        if t.kind != "EOF")
            col += m.end() - i
            i = m.end()
            continue
        m = _TOKEN_RE.match(text, i)
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line, col, source)
        kind = m.lastgroup
        s = m.group()
        if kind == "nl":
            line += 1
            col = 1
        elif kind != "ws":
            if kind == "int":
                toks.append(Tok("INT", s, line, col, source))
            elif kind == "ident":
                toks.append(Tok("KW" if s in KEYWORDS else "IDENT", s, line, col, source))
            else:
                toks.append(Tok("SYM", s, line, col, source))
            col += len(s)
        else:
            col += len(s)
        i = m.end()
    toks.append(Tok("EOF", "", line, col, source))
    return toks


_CMP = {"=": "=", "==": "=", "<": "<", "<=": "<="}
# tokens that may begin an application argument
_ARG_START_KW = {"true", "false", "flip", "fst", "snd", "inl", "inr", "ref", "tick",
                 "rand", "allocN", "not", "match"}


class _Parser:
    def __init__(self, toks: list):
        self.toks = toks
        self.pos = 0
        self.scope: list = []
        self._fresh = itertools.count()

    # -- token helpers ----------------------------------------------------
    @property
    def tok(self) -> Tok:
        return self.toks[self.pos]

    def error(self, msg: str, tok: Optional[Tok] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col, t.source)

    def at(self, text: str) -> bool:
        t = self.tok
        return t.text == text and t.kind in ("SYM", "KW")

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}' but found '{found}'")
        t = self.tok
        self.pos += 1
        return t

    def ident(self) -> str:
        t = self.tok
        if t.kind != "IDENT":
            raise self.error(f"expected identifier but found '{t.text or 'end of input'}'")
        self.pos += 1
        return t.text

    def binder(self) -> Optional[str]:
        if self.at("(") and self.toks[self.pos + 1].text == ")":
            self.pos += 2
            return None
        name = self.ident()
        return None if name == "_" else name

    def at_binder(self) -> bool:
        t = self.tok
        return t.kind == "IDENT" or (self.at("(") and self.toks[self.pos + 1].text == ")")

    # -- scoping ------------------------------------------------------------
    def bind(self, *names) -> int:
        n = 0
        for x in names:
            if x is not None:
                self.scope.append(x)
                n += 1
        return n

    def unbind(self, n: int) -> None:
        if n:
            del self.scope[-n:]

    # -- grammar --------------------------------------------------------------
    def program(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected '{self.tok.text}'")
        return e

    def expr(self) -> Expr:
        e = self.nonseq()
        if self.accept(";"):
            if self.tok.kind == "EOF" or self.at(")") or self.at("end") or self.at("in"):
                return e  # trailing semicolon
            rest = self.expr()
            return App(Rec(None, None, rest), e)
        return e

    def nonseq(self) -> Expr:
        if self.at("let"):
            return self.let_expr()
        if self.at("fun"):
            self.pos += 1
            params = [self.binder()]
            while self.at_binder():
                params.append(self.binder())
            self.expect("->")
            k = self.bind(*params)
            body = self.expr()
            self.unbind(k)
            return self.curry(None, params, body)
        if self.at("rec"):
            self.pos += 1
            return self.rec_tail()
        if self.at("if"):
            self.pos += 1
            c = self.expr()
            self.expect("then")
            t = self.nonseq()
            e = self.nonseq() if self.accept("else") else UNIT
            return If(c, t, e)
        return self.store()

    def rec_tail(self) -> Expr:
        f = self.binder()
        params = [self.binder()]
        while self.at_binder():
            params.append(self.binder())
        self.expect("=")
        k = self.bind(f, *params)
        body = self.expr()
        self.unbind(k)
        return self.curry(f, params, body)

    @staticmethod
    def curry(f, params, body) -> Rec:
        for x in reversed(params[1:]):
            body = Rec(None, x, body)
        return Rec(f, params[0], body)

    def let_expr(self) -> Expr:
        self.expect("let")
        if self.accept("rec"):
            f_tok = self.tok
            fn = self.rec_tail()
            if fn.f is None:
                raise self.error("let rec needs a function name", f_tok)
            self.expect("in")
            k = self.bind(fn.f)
            body = self.expr()
            self.unbind(k)
            return App(Rec(None, fn.f, body), fn)
        if self.at("(") and self.toks[self.pos + 1].kind == "IDENT" \
                and self.toks[self.pos + 2].text == ",":
            self.pos += 1
            names = [self.binder()]
            while self.accept(","):
                names.append(self.binder())
            self.expect(")")
            self.expect("=")
            rhs = self.expr()
            self.expect("in")
            k = self.bind(*names)
            body = self.expr()
            self.unbind(k)
            tmp = f"tuple__{next(self._fresh)}"
            # tuples nest to the right: (x, (y, z))
            bindings = []
            cur: Expr = Var(tmp)
            for i, x in enumerate(names):
                if i == len(names) - 1:
                    bindings.append((x, cur))
                else:
                    bindings.append((x, Fst(cur)))
                    cur = Snd(cur)
            for x, pe in reversed(bindings):
                body = App(Rec(None, x, body), pe)
            return App(Rec(None, tmp, body), rhs)
        x = self.binder()
        params = []
        while self.at_binder():
            params.append(self.binder())
        self.expect("=")
        k = self.bind(*params)
        rhs = self.expr()
        self.unbind(k)
        if params:
            rhs = self.curry(None, params, rhs)
        self.expect("in")
        k = self.bind(x)
        body = self.expr()
        self.unbind(k)
        return App(Rec(None, x, body), rhs)

    def store(self) -> Expr:
        e = self.cmp()
        if self.accept("<-"):
            return Store(e, self.nonseq())
        return e

    def cmp(self) -> Expr:
        e = self.add()
        t = self.tok
        if t.kind == "SYM" and t.text in _CMP:
            self.pos += 1
            e = BinOp(_CMP[t.text], e, self.add())
            t = self.tok
            if t.kind == "SYM" and t.text in _CMP:
                raise self.error("comparison operators do not associate; add parentheses")
        return e

    def add(self) -> Expr:
        e = self.mul()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.pos += 1
            e = BinOp(op, e, self.mul())
        return e

    def mul(self) -> Expr:
        e = self.app()
        while self.at("*") or self.at("quot") or self.at("rem"):
            op = self.tok.text
            self.pos += 1
            e = BinOp(op, e, self.app())
        return e

    def starts_arg(self) -> bool:
        t = self.tok
        if t.kind in ("INT", "IDENT"):
            return True
        if t.kind == "KW":
            return t.text in _ARG_START_KW
        return t.kind == "SYM" and t.text in ("(", "!")

    def app(self) -> Expr:
        e = self.prefix()
        while self.starts_arg():
            e = App(e, self.prefix())
        return e

    def prefix(self) -> Expr:
        t = self.tok
        if t.kind == "SYM":
            if t.text == "!":
                self.pos += 1
                return Load(self.prefix())
            if t.text == "-":
                self.pos += 1
                if self.tok.kind == "INT":
                    n = int(self.tok.text)
                    self.pos += 1
                    return self.postfix_tail(Int(-n))
                return BinOp("-", Int(0), self.prefix())
        if t.kind == "KW":
            kw = t.text
            simple = {"fst": Fst, "snd": Snd, "inl": Inl, "inr": Inr, "tick": Tick}
            if kw in simple:
                self.pos += 1
                return simple[kw](self.prefix())
            if kw == "ref":
                self.pos += 1
                return AllocN(Int(1), self.prefix())
            if kw == "not":
                self.pos += 1
                return If(self.prefix(), FALSE, TRUE)
            if kw == "allocN":
                self.pos += 1
                n = self.prefix()
                return AllocN(n, self.prefix())
            if kw == "rand":
                self.pos += 1
                label = self.label()
                return Rand(self.prefix(), label)
        return self.postfix_tail(self.atom())

    def label(self) -> Optional[str]:
        if self.at("["):
            self.pos += 1
            name = self.ident()
            self.expect("]")
            return name
        return None

    def postfix_tail(self, e: Expr) -> Expr:
        while self.accept(".["):
            idx = self.expr()
            self.expect("]")
            e = Offset(e, idx)
        return e

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "INT":
            self.pos += 1
            return Int(int(t.text))
        if t.kind == "IDENT":
            self.pos += 1
            if t.text == "_":
                raise self.error("'_' cannot be used as an expression", t)
            if t.text not in self.scope:
                raise UnboundVariableError(f"unbound variable '{t.text}'", t.line, t.col, t.source)
            return Var(t.text)
        if t.kind == "KW":
            if t.text == "true":
                self.pos += 1
                return TRUE
            if t.text == "false":
                self.pos += 1
                return FALSE
            if t.text == "flip":
                self.pos += 1
                return BinOp("=", Rand(Int(1), self.label()), Int(1))
            if t.text == "match":
                return self.match_expr()
        if self.accept("("):
            if self.accept(")"):
                return UNIT
            e = self.expr()
            if self.at(","):
                items = [e]
                while self.accept(","):
                    items.append(self.expr())
                self.expect(")")
                out = items[-1]
                for x in reversed(items[:-1]):
                    out = Pair(x, out)
                return out
            self.expect(")")
            return e
        raise self.error(f"unexpected '{t.text or 'end of input'}'")

    def match_expr(self) -> Expr:
        self.expect("match")
        scrut = self.expr()
        self.expect("with")
        self.accept("|")
        arms = {}
        for i in range(2):
            if i:
                self.expect("|")
            t = self.tok
            if not (self.at("inl") or self.at("inr")):
                raise self.error("expected 'inl' or 'inr' branch")
            self.pos += 1
            x = self.binder()
            self.expect("->")
            k = self.bind(x)
            body = self.expr()
            self.unbind(k)
            if t.text in arms:
                raise self.error(f"duplicate {t.text} branch", t)
            arms[t.text] = (x, body)
        self.expect("end")
        (lx, lb), (rx, rb) = arms["inl"], arms["inr"]
        return Match(scrut, lx, lb, rx, rb)


def parse_program(text: str, source: str = "<input>",
                  resolver: Optional[Resolver] = None) -> Expr:
    """Parse a closed RandML program into core syntax."""
    return _Parser(tokenize(text, source, resolver)).program()


def parse_expr(text: str, free: tuple = (), resolver: Optional[Resolver] = None) -> Expr:
    """Parse an expression that may mention the given free variables."""
    p = _Parser(tokenize(text, "<expr>", resolver))
    p.scope.extend(free)
    return p.program()
