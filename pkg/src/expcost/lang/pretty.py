"""Printing core RandML terms in concrete syntax.

Output re-parses to the same term, except for location literals, which are
printed as ``#loc<block>+<offset>`` and have no source syntax.
"""
from __future__ import annotations

from .syntax import (
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
    Loc,
    Match,
    Offset,
    Pair,
    Rand,
    Rec,
    Snd,
    Store,
    Tick,
    Unit,
    Var,
)

# precedence levels: larger binds tighter
_OPEN, _STORE, _CMP, _ADD, _MUL, _APP, _PREFIX, _POSTFIX, _ATOM = range(9)
_BIN_LEVEL = {"=": _CMP, "<": _CMP, "<=": _CMP, "+": _ADD, "-": _ADD,
              "*": _MUL, "quot": _MUL, "rem": _MUL}
_KW_UNARY = {Fst: "fst", Snd: "snd", Inl: "inl", Inr: "inr", Tick: "tick"}


def _b(name):
    return "_" if name is None else name


def pretty(e: Expr) -> str:
    return _pp(e, _OPEN)


def _wrap(s: str, level: int, ctx: int) -> str:
    return f"({s})" if level < ctx else s


def _pp(e: Expr, ctx: int) -> str:
    t = type(e)
    if t is Int:
        return str(e.n) if e.n >= 0 else f"({e.n})"
    if t is Bool:
        return "true" if e.b else "false"
    if t is Unit:
        return "()"
    if t is Var:
        return e.name
    if t is Loc:
        return f"#loc{e.block}+{e.off}"
    if t is Pair:
        return f"({_pp(e.left, _OPEN)}, {_pp(e.right, _OPEN)})"
    if t is Rec:
        s = f"rec {_b(e.f)} {_b(e.x)} = {_pp(e.body, _OPEN)}"
        return _wrap(s, _OPEN, ctx)
    if t is If:
        s = (f"if {_pp(e.cond, _OPEN)} then {_pp(e.then, _STORE)}"
             f" else {_pp(e.else_, _STORE)}")
        return _wrap(s, _OPEN, ctx)
    if t is Match:
        s = (f"match {_pp(e.scrut, _OPEN)} with inl {_b(e.lvar)} -> {_pp(e.lbody, _OPEN)}"
             f" | inr {_b(e.rvar)} -> {_pp(e.rbody, _OPEN)} end")
        return _wrap(s, _ATOM, ctx)
    if t is Store:
        s = f"{_pp(e.target, _CMP)} <- {_pp(e.value, _STORE)}"
        return _wrap(s, _STORE, ctx)
    if t is BinOp:
        lvl = _BIN_LEVEL[e.op]
        if lvl == _CMP:
            s = f"{_pp(e.left, lvl + 1)} {e.op} {_pp(e.right, lvl + 1)}"
        else:
            s = f"{_pp(e.left, lvl)} {e.op} {_pp(e.right, lvl + 1)}"
        return _wrap(s, lvl, ctx)
    if t is App:
        s = f"{_pp(e.fn, _APP)} {_pp(e.arg, _PREFIX)}"
        return _wrap(s, _APP, ctx)
    if t in _KW_UNARY:
        return _wrap(f"{_KW_UNARY[t]} {_pp(e.e, _PREFIX)}", _APP, ctx)
    if t is Rand:
        kw = "rand" if e.label is None else f"rand[{e.label}]"
        return _wrap(f"{kw} {_pp(e.bound, _PREFIX)}", _APP, ctx)
    if t is AllocN:
        return _wrap(f"allocN {_pp(e.size, _PREFIX)} {_pp(e.init, _PREFIX)}", _APP, ctx)
    if t is Load:
        return _wrap(f"!{_pp(e.e, _PREFIX)}", _PREFIX, ctx)
    if t is Offset:
        return _wrap(f"{_pp(e.base, _POSTFIX)}.[{_pp(e.index, _OPEN)}]", _POSTFIX, ctx)
    raise TypeError(t.__name__)


def pretty_config(cfg) -> str:
    e, heap = cfg
    if not heap:
        return pretty(e)
    cells = []
    for b, blk in enumerate(heap):
        if blk is None:
            continue
        cells.append(f"#loc{b} -> [{'; '.join(pretty(v) for v in blk)}]")
    return f"{pretty(e)} | {{{', '.join(cells)}}}"
