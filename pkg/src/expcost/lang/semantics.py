"""Small-step distribution semantics: substitution, decomposition, stepping.

Heaps are block structured: ``allocN n v`` creates a block of ``n`` cells and
returns ``Loc(block, 0)``; offsets move within a block.  A heap is a tuple
indexed by block id whose entries are tuples of values (``None`` marks a
block id that is not allocated).
"""
from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Optional, Union

from ..dist import Dist
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

Heap = tuple
EMPTY_HEAP: Heap = ()


class Config(NamedTuple):
    expr: Expr
    heap: Heap = EMPTY_HEAP


# ---------------------------------------------------------------------------
# substitution

def substitute(e: Expr, x: Optional[str], v: Expr) -> Expr:
    """Replace free occurrences of ``x`` in ``e`` by the closed value ``v``."""
    if x is None or x not in e.fv:
        return e
    return _subst(e, x, v)


def _subst(e: Expr, x: str, v: Expr) -> Expr:
    if x not in e.fv:
        return e
    t = type(e)
    if t is Var:
        return v
    if t is Rec:
        if e.f == x or e.x == x:
            return e
        return Rec(e.f, e.x, _subst(e.body, x, v))
    if t is Match:
        lb = e.lbody if e.lvar == x else _subst(e.lbody, x, v)
        rb = e.rbody if e.rvar == x else _subst(e.rbody, x, v)
        return Match(_subst(e.scrut, x, v), e.lvar, lb, e.rvar, rb)
    return e.rebuild([_subst(k, x, v) for k in e.children()])


def beta(fn: Rec, arg: Expr) -> Expr:
    body = substitute(fn.body, fn.x, arg)
    return substitute(body, fn.f, fn)


# ---------------------------------------------------------------------------
# decomposition into evaluation context and head redex

class Value(NamedTuple):
    value: Expr


class Redex(NamedTuple):
    frames: tuple
    head: Expr


class Stuck(NamedTuple):
    reason: str
    frames: tuple = ()
    head: Optional[Expr] = None


Decomposition = Union[Value, Redex, Stuck]

_EQ_KINDS = (Int, Bool, Unit, Loc)


def _show(e: Expr) -> str:
    from .pretty import pretty

    s = pretty(e)
    return s if len(s) <= 60 else s[:57] + "..."


def _next(e: Expr):
    """Child index to evaluate next, ``None`` if ``e`` is a head redex, or a stuck reason."""
    t = type(e)
    if t is App:
        if not e.arg._val:
            return 1
        if not e.fn._val:
            return 0
        if type(e.fn) is not Rec:
            return f"application of non-function {_show(e.fn)}"
        return None
    if t is BinOp:
        if not e.right._val:
            return 1
        if not e.left._val:
            return 0
        a, b = e.left, e.right
        op = e.op
        if op == "=":
            if type(a) in _EQ_KINDS and type(b) in _EQ_KINDS:
                return None
            return f"equality on non-comparable values {_show(a)} = {_show(b)}"
        if type(a) is not Int or type(b) is not Int:
            return f"operator {op} on non-integers {_show(a)}, {_show(b)}"
        if op in ("quot", "rem") and b.n == 0:
            return "division by zero"
        return None
    if t is If:
        if not e.cond._val:
            return 0
        if type(e.cond) is not Bool:
            return f"if on non-boolean {_show(e.cond)}"
        return None
    if t is Pair or t is Inl or t is Inr:
        # not a value, so some component still evaluates; pairs go right to left
        if t is Pair:
            return 1 if not e.right._val else 0
        return 0
    if t is Fst or t is Snd:
        if not e.e._val:
            return 0
        if type(e.e) is not Pair:
            return f"{'fst' if t is Fst else 'snd'} of non-pair {_show(e.e)}"
        return None
    if t is Match:
        if not e.scrut._val:
            return 0
        if type(e.scrut) not in (Inl, Inr):
            return f"match on non-sum {_show(e.scrut)}"
        return None
    if t is AllocN:
        if not e.init._val:
            return 1
        if not e.size._val:
            return 0
        if type(e.size) is not Int or e.size.n <= 0:
            return f"allocN with size {_show(e.size)}"
        return None
    if t is Load:
        if not e.e._val:
            return 0
        if type(e.e) is not Loc:
            return f"load from non-location {_show(e.e)}"
        return None
    if t is Store:
        if not e.value._val:
            return 1
        if not e.target._val:
            return 0
        if type(e.target) is not Loc:
            return f"store to non-location {_show(e.target)}"
        return None
    if t is Offset:
        if not e.index._val:
            return 1
        if not e.base._val:
            return 0
        if type(e.base) is not Loc or type(e.index) is not Int:
            return f"offset {_show(e.base)}.[{_show(e.index)}]"
        return None
    if t is Rand:
        if not e.bound._val:
            return 0
        if type(e.bound) is not Int or e.bound.n < 0:
            return f"rand with bound {_show(e.bound)}"
        return None
    if t is Tick:
        if not e.e._val:
            return 0
        if type(e.e) is not Int:
            return f"tick of non-integer {_show(e.e)}"
        return None
    if t is Var:
        return f"unbound variable {e.name}"
    raise TypeError(f"unexpected node {t.__name__}")


def decompose(e: Expr) -> Decomposition:
    if e._val:
        return Value(e)
    frames = []
    while True:
        r = _next(e)
        if r is None:
            return Redex(tuple(frames), e)
        if type(r) is str:
            return Stuck(r, tuple(frames), e)
        frames.append((e, r))
        e = e.children()[r]


def head_of(e: Expr) -> Optional[Expr]:
    """The head redex of ``e`` or ``None`` for values and stuck terms."""
    d = decompose(e)
    return d.head if type(d) is Redex else None


def fill(frames, e: Expr) -> Expr:
    for node, i in reversed(frames):
        e = node.with_child(i, e)
    return e


# ---------------------------------------------------------------------------
# head reduction

def _quot(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b > 0) else -q


def _binop(op: str, a: Expr, b: Expr) -> Expr:
    if op == "=":
        return TRUE if (type(a) is type(b) and a == b) else FALSE
    x, y = a.n, b.n
    if op == "+":
        return Int(x + y)
    if op == "-":
        return Int(x - y)
    if op == "*":
        return Int(x * y)
    if op == "<":
        return TRUE if x < y else FALSE
    if op == "<=":
        return TRUE if x <= y else FALSE
    q = _quot(x, y)
    return Int(q) if op == "quot" else Int(x - y * q)


def _cell(heap: Heap, loc: Loc):
    b, off = loc.block, loc.off
    if 0 <= b < len(heap):
        blk = heap[b]
        if blk is not None and 0 <= off < len(blk):
            return blk
    return None


def reduce_head(e: Expr, heap: Heap):
    """Outcomes of a head redex as a list of equally likely ``(expr, heap)``
    pairs, or a string describing why the configuration is stuck."""
    t = type(e)
    if t is App:
        return [(beta(e.fn, e.arg), heap)]
    if t is Rand:
        n = e.bound.n
        return [(Int(i), heap) for i in range(n + 1)]
    if t is BinOp:
        return [(_binop(e.op, e.left, e.right), heap)]
    if t is If:
        return [(e.then if e.cond.b else e.else_, heap)]
    if t is Match:
        s = e.scrut
        if type(s) is Inl:
            return [(substitute(e.lbody, e.lvar, s.e), heap)]
        return [(substitute(e.rbody, e.rvar, s.e), heap)]
    if t is Fst:
        return [(e.e.left, heap)]
    if t is Snd:
        return [(e.e.right, heap)]
    if t is Tick:
        return [(UNIT, heap)]
    if t is Load:
        blk = _cell(heap, e.e)
        if blk is None:
            return f"load from unallocated location {_show(e.e)}"
        return [(blk[e.e.off], heap)]
    if t is Store:
        loc = e.target
        blk = _cell(heap, loc)
        if blk is None:
            return f"store to unallocated location {_show(loc)}"
        nb = blk[: loc.off] + (e.value,) + blk[loc.off + 1:]
        return [(UNIT, heap[: loc.block] + (nb,) + heap[loc.block + 1:])]
    if t is AllocN:
        block = (e.init,) * e.size.n
        try:
            b = heap.index(None)
            h2 = heap[:b] + (block,) + heap[b + 1:]
        except ValueError:
            b = len(heap)
            h2 = heap + (block,)
        return [(Loc(b, 0), h2)]
    if t is Offset:
        return [(Loc(e.base.block, e.base.off + e.index.n), heap)]
    raise TypeError(f"not a head redex: {t.__name__}")


def head_step(e: Expr, heap: Heap = EMPTY_HEAP) -> Dist:
    r = _next(e) if not e._val else "value"
    if r is not None:
        return Dist.empty()
    outs = reduce_head(e, heap)
    if isinstance(outs, str):
        return Dist.empty()
    return Dist.uniform(outs)


def head_stuck_reason(e: Expr, heap: Heap = EMPTY_HEAP) -> Optional[str]:
    r = _next(e) if not e._val else "value does not reduce"
    if r is not None:
        return r if isinstance(r, str) else f"{type(e).__name__} is not a head redex"
    outs = reduce_head(e, heap)
    return outs if isinstance(outs, str) else None


# ---------------------------------------------------------------------------
# whole-configuration stepping

class Successors(NamedTuple):
    """Result of one step: ``kind`` is 'value', 'stuck' or 'step'."""

    kind: str
    head: Optional[Expr]
    outcomes: tuple  # equally likely configurations (before canonicalization)
    reason: Optional[str] = None
    frames: tuple = ()


def successors(cfg: Config) -> Successors:
    e, heap = cfg
    if e._val:
        return Successors("value", None, ())
    d = decompose(e)
    if type(d) is Stuck:
        return Successors("stuck", d.head, (), d.reason, d.frames)
    frames, head = d
    outs = reduce_head(head, heap)
    if isinstance(outs, str):
        return Successors("stuck", head, (), outs, frames)
    if frames:
        outs = tuple(Config(fill(frames, o), h) for o, h in outs)
    else:
        outs = tuple(Config(o, h) for o, h in outs)
    return Successors("step", head, outs, None, frames)


def step(cfg: Config) -> Dist:
    s = successors(cfg)
    if s.kind != "step":
        return Dist.empty()
    return Dist.uniform(s.outcomes)


def stuck_reason(cfg: Config) -> Optional[str]:
    s = successors(cfg)
    return s.reason if s.kind == "stuck" else None


def is_reducible(cfg: Config) -> bool:
    return successors(cfg).kind == "step"


def step_probability(n_outcomes: int) -> Fraction:
    return Fraction(1, n_outcomes)


# ---------------------------------------------------------------------------
# canonical location naming

def _collect(e: Expr, seen: dict, order: list) -> None:
    if not e._locs:
        return
    if type(e) is Loc:
        if e.block not in seen:
            seen[e.block] = len(order)
            order.append(e.block)
        return
    for k in e.children():
        _collect(k, seen, order)


def _rename(e: Expr, m: dict) -> Expr:
    if not e._locs:
        return e
    if type(e) is Loc:
        nb = m[e.block]
        return e if nb == e.block else Loc(nb, e.off)
    return e.rebuild([_rename(k, m) for k in e.children()])


def canonicalize(cfg: Config) -> Config:
    """Rename blocks to first-use order (expression first, then breadth-first
    through the heap) and drop unreachable blocks.  Idempotent."""
    e, heap = cfg
    if not heap and not e._locs:
        return cfg if type(cfg) is Config else Config(e, heap)
    seen: dict = {}
    order: list = []
    _collect(e, seen, order)
    i = 0
    nblocks = len(heap)
    while i < len(order):
        b = order[i]
        if b < nblocks and heap[b] is not None:
            for v in heap[b]:
                _collect(v, seen, order)
        i += 1
    if len(order) == nblocks and all(b == j for j, b in enumerate(order)):
        return cfg if type(cfg) is Config else Config(e, heap)
    new_blocks = []
    for b in order:
        blk = heap[b] if b < nblocks else None
        new_blocks.append(None if blk is None else tuple(_rename(v, seen) for v in blk))
    return Config(_rename(e, seen), tuple(new_blocks))


def heap_from_dict(cells: dict) -> Heap:
    """Build a heap from ``{block: [values...]}``."""
    if not cells:
        return EMPTY_HEAP
    size = max(cells) + 1
    return tuple(tuple(cells[b]) if b in cells else None for b in range(size))
