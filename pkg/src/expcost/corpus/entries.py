"""Corpus entries: RandML sources paired with cost oracles, certificates and
postconditions.

Static facts (file, cost model, parameter grid, tolerance) live in
``manifest.json``; the functions attached to each entry are registered here
by name.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from string import Template
from typing import Callable, Optional

from ..certify import CreditAnnotation, SiteContext, carry_rule, centered_rule, table_rule
from ..lang.parser import parse_program
from ..lang.pretty import pretty
from ..lang.syntax import (
    App,
    BinOp,
    Bool,
    Expr,
    If,
    Inl,
    Inr,
    Int,
    Pair,
    Rec,
    Store,
    Unit,
    Var,
    list_of_value,
    list_value,
)
from . import oracles as O
from .loader import corpus_dir, read_manifest, read_source

EXACT = "exact-oracle"
UPPER = "upper-bound-oracle"
CMP_COST = 1  # every comparator in the corpus ticks once


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    file: str
    model: str
    kind: str
    tol: float
    params: tuple
    expected: Optional[tuple] = None
    oracle_fn: Callable = field(default=None, repr=False, compare=False)
    bound_fn: Optional[Callable] = field(default=None, repr=False, compare=False)
    cert_fn: Optional[Callable] = field(default=None, repr=False, compare=False)
    post_fn: Optional[Callable] = field(default=None, repr=False, compare=False)
    render_fn: Optional[Callable] = field(default=None, repr=False, compare=False)

    def _p(self, params: dict) -> dict:
        return dict(self.params[0]) if not params else params

    def source(self, **params) -> str:
        p = self._p(params)
        subst = self.render_fn(p) if self.render_fn else {k: str(v) for k, v in p.items()}
        return Template(read_source(self.file)).substitute(subst)

    def program(self, **params) -> Expr:
        p = self._p(params)
        return _parse_cached(self.file, self.source(**p))

    def oracle(self, **params):
        return self.oracle_fn(**self._p(params))

    def bound(self, **params):
        """Total budget the engine result is compared against."""
        p = self._p(params)
        return (self.bound_fn or self.oracle_fn)(**p)

    def certificate(self, **params) -> Optional[CreditAnnotation]:
        return self.cert_fn(**self._p(params)) if self.cert_fn else None

    def postcondition(self, **params) -> Optional[Callable[[Expr], bool]]:
        return self.post_fn(**self._p(params)) if self.post_fn else None

    def instances(self):
        for p in self.params:
            yield dict(p)

    def label(self, params: dict) -> str:
        if not params:
            return self.name
        inner = ",".join(f"{k}={json.dumps(v, separators=(',', ':'))}" for k, v in params.items())
        return f"{self.name}[{inner}]"


@lru_cache(maxsize=256)
def _parse_cached(file: str, text: str) -> Expr:
    return parse_program(text, source=file)


# ---------------------------------------------------------------------------
# value helpers

def _ints(v: Expr) -> Optional[list]:
    xs = list_of_value(v)
    if xs is None or any(type(x) is not Int for x in xs):
        return None
    return [x.n for x in xs]


def _live_blocks(ctx: SiteContext) -> list:
    return [b for b in ctx.heap if b is not None]


def _heap_value(vals: list) -> Expr:
    """A heap-ordered tree holding the sorted ``vals``."""
    if not vals:
        return Inl(Unit())
    rest = vals[1:]
    half = (len(rest) + 1) // 2
    return Inr(Pair(Int(vals[0]), Pair(_heap_value(rest[:half]), _heap_value(rest[half:]))))


def heap_size(v: Expr) -> int:
    n = 0
    stack = [v]
    while stack:
        h = stack.pop()
        if type(h) is Inr:
            n += 1
            stack.append(h.e.right.left)
            stack.append(h.e.right.right)
    return n


def heap_elements(v: Expr, key=None) -> Optional[list]:
    """Elements of a tree value if it is heap ordered, else None."""
    key = key or (lambda x: x.n)
    out = []

    def walk(h, lo):
        if type(h) is Inl:
            return True
        if type(h) is not Inr or type(h.e) is not Pair or type(h.e.right) is not Pair:
            return False
        k = key(h.e.left)
        if lo is not None and k < lo:
            return False
        out.append(h.e.left)
        return walk(h.e.right.left, k) and walk(h.e.right.right, k)

    return out if walk(v, None) else None


# ---------------------------------------------------------------------------
# potentials for centered site rules

def _op_potential(ctx: SiteContext, k: int):
    n = _live_blocks(ctx)[0][0].n
    return 2 * n + 1 if k == 1 else 0


def _coupon_potential(n: int):
    def pot(ctx: SiteContext, k: int):
        arr = _live_blocks(ctx)[0]
        missing = sum(1 for c in arr if not c.b)
        return 0 if arr[k].b else Fraction(-n, missing)
    return pot


def _lo_potential(ctx: SiteContext, k: int):
    node, _ = ctx.innermost(lambda e, h: type(e) is BinOp and e.op == "+")
    return Fraction(8, 3) if k + node.right.n == 3 else 0


def _p_fail(k: int, acc: int) -> Fraction:
    """Chance that 8 - k more bits appended to ``acc`` give a value >= 243."""
    span = 1 << (8 - k)
    bad = max(0, min(span, acc * span + span - 243))
    return Fraction(bad, span)


def _bit_potential(ctx: SiteContext, k: int):
    node, _ = ctx.innermost(lambda e, h: type(e) is Store)
    st = ctx.block(node.target.base)
    acc, drawn = st[0].n, st[1].n
    return _p_fail(drawn + 1, 2 * acc + k) * O.BATCH_PREFETCH


def _bucket_potential(buckets: int):
    def pot(ctx: SiteContext, k: int):
        for blk in _live_blocks(ctx):
            if len(blk) == buckets and all(list_of_value(c) is not None for c in blk):
                return len(list_of_value(blk[k]))
        raise ValueError("bucket array not found")
    return pot


def _pivot_list(ctx: SiteContext) -> list:
    """The list being partitioned at a pivot draw."""
    want = ctx.bound + 1
    for node, _ in ctx.frame_nodes():
        if type(node) is App and type(node.fn) is Rec and node.fn.x == "i":
            stack = [node.fn.body]
            while stack:
                e = stack.pop()
                if (type(e) is App and type(e.arg) is Var and e.arg.name == "i"
                        and type(e.fn) is App):
                    xs = _ints(e.fn.arg)
                    if xs is not None and len(xs) == want:
                        return xs
                stack.extend(e.children())
    raise ValueError("pivot list not found")


def _rank_potential(t: Callable[[int], object]):
    def pot(ctx: SiteContext, k: int):
        xs = _pivot_list(ctx)
        rank = sum(1 for x in xs if x < xs[k])
        return t(rank) + t(len(xs) - 1 - rank)
    return pot


def _meld_pair_budget(a: Expr, b: Expr):
    na, nb = heap_size(a), heap_size(b)
    if na == 0 or nb == 0:
        return 0
    return O.meld_budget(CMP_COST, na, nb)


def _meld_potential(ctx: SiteContext, k: int):
    node, _ = ctx.innermost(lambda e, h: type(e) is If)
    left_call, hr = node.then.e.right.left, node.then.e.right.right
    hl, hmax = left_call.fn.arg, left_call.arg
    return _meld_pair_budget(hl if k == 1 else hr, hmax)


def _meld_annotation(initial) -> CreditAnnotation:
    return CreditAnnotation(initial, {"meld": centered_rule(_meld_potential)})


# ---------------------------------------------------------------------------
# postconditions

def _is_unit(v: Expr) -> bool:
    return type(v) is Unit


def _sorted_perm(expected: list):
    target = sorted(expected)

    def post(v: Expr) -> bool:
        return _ints(v) == target
    return post


def _perm_of(expected: list):
    target = sorted(expected)

    def post(v: Expr) -> bool:
        xs = _ints(v)
        return xs is not None and sorted(xs) == target
    return post


def _in_range(lo: int, hi: int):
    def post(v: Expr) -> bool:
        return type(v) is Int and lo <= v.n <= hi
    return post


def _heap_with(expected: list):
    target = sorted(expected)

    def post(v: Expr) -> bool:
        els = heap_elements(v)
        return els is not None and sorted(x.n for x in els) == target
    return post


def _removed_min(vals: list):
    rest_ok = _heap_with(vals[1:])

    def post(v: Expr) -> bool:
        if type(v) is not Pair:
            return False
        top, rest = v.left, v.right
        if not vals:
            return type(top) is Inl and heap_size(rest) == 0
        return (type(top) is Inr and type(top.e) is Int and top.e.n == vals[0]
                and rest_ok(rest))
    return post


# ---------------------------------------------------------------------------
# per-entry parameter rendering

def _list_src(xs) -> str:
    return pretty(list_value(xs))


def _scrambled(n: int) -> list:
    # a fixed non-sorted permutation of 1..n
    return [((3 * i) % n) + 1 for i in range(n)] if n % 3 else [n - i for i in range(n)]


def _meld_inputs(n1: int, n2: int):
    return list(range(1, 2 * n1, 2)), list(range(2, 2 * n2 + 1, 2))


def _kway_source(lists) -> str:
    return pretty(list_value([list_value(zs) for zs in lists]))


def _queries(q: int) -> str:
    return "; ".join(["sample ()"] * q) if q else "()"


def _hash_inserts(k: int) -> str:
    return "; ".join(f"insert h {i}" for i in range(1, k + 1))


def _quicksort_input(len):
    return _scrambled(len)


# ---------------------------------------------------------------------------
# registrations

def _entropy_t(n: int):
    return O.oracle_quicksort_entropy(n)


def _qs_t(n: int):
    return O.oracle_quicksort_t(2 * CMP_COST, n)


_REGISTRY: dict = {
    "coinToss": dict(
        oracle_fn=lambda: Fraction(2),
        cert_fn=lambda: CreditAnnotation(2, {"coin": table_rule([2, 0])}),
        post_fn=lambda: _is_unit,
    ),
    "t_half": dict(
        oracle_fn=lambda: Fraction(1, 2),
        cert_fn=lambda: CreditAnnotation(Fraction(1, 2), {"toss": table_rule([1, 0])}),
    ),
    "op_pair": dict(
        oracle_fn=lambda n: O.oracle_op_pair(n),
    ),
    "op_pair_literal": dict(
        oracle_fn=lambda n: O.oracle_op_pair_literal(n),
    ),
    "op_repeat": dict(
        oracle_fn=lambda n, m: Fraction(n + m),
        cert_fn=lambda n, m: CreditAnnotation(n + m, {"op": centered_rule(_op_potential)}),
        post_fn=lambda n, m: _is_unit,
    ),
    "coupon_collector": dict(
        oracle_fn=lambda n: O.oracle_coupon(n),
        cert_fn=lambda n: CreditAnnotation(O.oracle_coupon(n),
                                           {"draw": centered_rule(_coupon_potential(n))}),
        post_fn=lambda n: _is_unit,
    ),
    "fisher_yates": dict(
        oracle_fn=lambda len: O.oracle_log_factorial(len),
        cert_fn=lambda len: CreditAnnotation(O.oracle_log_factorial(len), {"swap": carry_rule}),
        post_fn=lambda len: _perm_of(list(range(1, len + 1))),
        render_fn=lambda p: {"list": _list_src(range(1, p["len"] + 1))},
    ),
    "sampleThree": dict(
        oracle_fn=lambda: Fraction(8, 3),
        cert_fn=lambda: CreditAnnotation(Fraction(8, 3), {
            "hi": centered_rule(lambda ctx, k: Fraction(4, 3) if k == 1 else 0),
            "lo": centered_rule(_lo_potential),
        }),
        post_fn=lambda: _in_range(0, 2),
    ),
    "batch_init": dict(
        oracle_fn=lambda q: 4 * O.BATCH_QUERY,
        cert_fn=lambda q: CreditAnnotation(4 * O.BATCH_QUERY, {"bit": centered_rule(_bit_potential)}),
        render_fn=lambda p: {"queries": _queries(p["q"])},
    ),
    "batch_query_amortized": dict(
        oracle_fn=lambda q: O.BATCH_QUERY,
        bound_fn=lambda q: (4 + q) * O.BATCH_QUERY,
        cert_fn=lambda q: CreditAnnotation((4 + q) * O.BATCH_QUERY,
                                           {"bit": centered_rule(_bit_potential)}),
        post_fn=lambda q: _in_range(0, 2),
        render_fn=lambda p: {"queries": _queries(p["q"])},
    ),
    "hash_insert": dict(
        oracle_fn=lambda size: O.oracle_hash_insert(size),
        cert_fn=lambda size: CreditAnnotation(O.oracle_hash_insert(size),
                                              {"hash": centered_rule(_bucket_potential(2))}),
        post_fn=lambda size: _is_unit,
        render_fn=lambda p: {"n": "1", "size": str(p["size"]), "body": "insert h 7"},
    ),
    "hash_lookup": dict(
        oracle_fn=lambda size: O.oracle_hash_insert(size),
        cert_fn=lambda size: CreditAnnotation(O.oracle_hash_insert(size),
                                              {"hash": centered_rule(_bucket_potential(2))}),
        post_fn=lambda size: (lambda v: v == Bool(False)),
        render_fn=lambda p: {"n": "1", "size": str(p["size"]), "body": "lookup h 7"},
    ),
    "hash_amortized": dict(
        oracle_fn=lambda inserts: O.oracle_hash_amortized(4),
        bound_fn=lambda inserts: inserts * O.oracle_hash_amortized(4),
        cert_fn=lambda inserts: CreditAnnotation(inserts * O.oracle_hash_amortized(4),
                                                 {"hash": centered_rule(_bucket_potential(2))}),
        post_fn=lambda inserts: _is_unit,
        render_fn=lambda p: {"n": "1", "size": "0", "body": _hash_inserts(p["inserts"])},
    ),
    "quicksort": dict(
        oracle_fn=lambda len: _qs_t(len),
        cert_fn=lambda len: CreditAnnotation(_qs_t(len), {"pivot": centered_rule(_rank_potential(_qs_t))}),
        post_fn=lambda len: _sorted_perm(_quicksort_input(len)),
        render_fn=lambda p: {"list": _list_src(_quicksort_input(p["len"]))},
    ),
    "quicksort_entropy": dict(
        oracle_fn=lambda len: _entropy_t(len),
        cert_fn=lambda len: CreditAnnotation(_entropy_t(len),
                                             {"pivot": centered_rule(_rank_potential(_entropy_t))}),
        post_fn=lambda len: _sorted_perm(_quicksort_input(len)),
        render_fn=lambda p: {"list": _list_src(_quicksort_input(p["len"]))},
    ),
    "meld": dict(
        oracle_fn=lambda n1, n2: O.meld_budget(CMP_COST, n1, n2),
        cert_fn=lambda n1, n2: _meld_annotation(O.meld_budget(CMP_COST, n1, n2)),
        post_fn=lambda n1, n2: _heap_with(sum(_meld_inputs(n1, n2), [])),
        render_fn=lambda p: dict(zip(("h1", "h2"), (
            pretty(_heap_value(xs)) for xs in _meld_inputs(p["n1"], p["n2"])))),
    ),
    "heap_insert": dict(
        oracle_fn=lambda n: O.heap_insert_bound(CMP_COST, n),
        cert_fn=lambda n: _meld_annotation(O.heap_insert_bound(CMP_COST, n)),
        post_fn=lambda n: _heap_with(list(range(2, 2 * n + 1, 2)) + [n + 1]),
        render_fn=lambda p: {"h": pretty(_heap_value(list(range(2, 2 * p["n"] + 1, 2)))),
                             "v": str(p["n"] + 1)},
    ),
    "heap_remove": dict(
        oracle_fn=lambda n: O.heap_remove_bound(CMP_COST, n),
        cert_fn=lambda n: _meld_annotation(O.heap_remove_bound(CMP_COST, n)),
        post_fn=lambda n: _removed_min(list(range(1, n + 1))),
        render_fn=lambda p: {"h": pretty(_heap_value(list(range(1, p["n"] + 1))))},
    ),
    "kway_merge": dict(
        oracle_fn=lambda lists: O.kway_merge_budget(len(lists), sum(map(len, lists)), CMP_COST),
        cert_fn=lambda lists: _meld_annotation(
            O.kway_merge_budget(len(lists), sum(map(len, lists)), CMP_COST)),
        post_fn=lambda lists: _sorted_perm(sum(lists, [])),
        render_fn=lambda p: {"lists": _kway_source(p["lists"])},
    ),
}


def _parse_expected(x):
    if x is None:
        return None
    return Fraction(x) if "." not in x else float(x)


@lru_cache(maxsize=4)
def _load(dirname: str) -> tuple:
    manifest = read_manifest()
    out = []
    for rec in manifest["entries"]:
        fns = _REGISTRY.get(rec["name"])
        if fns is None:
            raise KeyError(f"manifest entry {rec['name']!r} has no registration")
        exp = rec.get("expected")
        out.append(CorpusEntry(
            name=rec["name"],
            file=rec["file"],
            model=rec["model"],
            kind=rec["kind"],
            tol=float(rec["tol"]),
            params=tuple(rec["params"]),
            expected=None if exp is None else tuple(_parse_expected(x) for x in exp),
            **fns,
        ))
    return tuple(out)


def corpus_entries() -> list:
    return list(_load(str(corpus_dir())))


def get_entry(name: str) -> CorpusEntry:
    for e in corpus_entries():
        if e.name == name:
            return e
    raise KeyError(f"no corpus entry named {name!r}")
