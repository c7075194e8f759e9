"""Credit certificates: per-configuration budgets checked for the
supermartingale inequality ``cost(c) + sum p * phi(c') <= phi(c)``.

A certificate is produced from a :class:`CreditAnnotation` by propagating
credit through the reachable graph: deterministic steps pay their cost and
carry the rest, ``rand`` steps pay their cost and split the remainder with a
site rule.  Each node keeps the least credit it was ever reached with.  The
local inequality at every node then gives ``EC_n <= phi(root)`` for all n by
induction on n.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .costs import CostModel, get_model
from .engine import DEFAULT_BUDGET, FRONTIER, INTERNAL, SCHEMA_VERSION, STUCK, VALUE, Graph, as_config
from .lang.pretty import pretty_config
from .lang.syntax import Expr, Int, Loc, Rand

Number = Union[int, float, Fraction]
DEFAULT_SLACK = 1e-9
_REVISIT_CAP = 64


class AnnotationError(Exception):
    pass


# ---------------------------------------------------------------------------
# site rules

@dataclass
class SiteContext:
    """Everything a site rule may inspect when a labelled ``rand`` fires."""

    config: object
    frames: tuple
    head: Rand
    available: Number
    cost: Number

    @property
    def bound(self) -> int:
        return self.head.bound.n

    @property
    def label(self) -> Optional[str]:
        return self.head.label

    @property
    def heap(self) -> tuple:
        return self.config.heap

    def block(self, loc: Loc) -> tuple:
        return self.config.heap[loc.block]

    def load(self, loc: Loc, off: int = 0) -> Expr:
        return self.config.heap[loc.block][loc.off + off]

    def load_int(self, loc: Loc, off: int = 0) -> int:
        v = self.load(loc, off)
        if type(v) is not Int:
            raise AnnotationError(f"expected an integer cell, found {v!r}")
        return v.n

    def frame_nodes(self):
        """Context frames from the innermost outward, as ``(node, hole)``."""
        return reversed(self.frames)

    def innermost(self, pred: Callable[[Expr, int], bool]):
        for node, hole in self.frame_nodes():
            if pred(node, hole):
                return node, hole
        return None

    def locations(self) -> list:
        """Heap blocks that exist, in canonical order."""
        return [Loc(b) for b, blk in enumerate(self.config.heap) if blk is not None]


SiteRule = Callable[[SiteContext], Sequence[Number]]


def table_rule(values: Sequence[Number]) -> SiteRule:
    """Outcome ``n`` receives ``values[n]`` credits."""
    vals = [_num(v) for v in values]

    def rule(ctx: SiteContext):
        if len(vals) != ctx.bound + 1:
            raise AnnotationError(
                f"table rule for site {ctx.label} has {len(vals)} entries, needs {ctx.bound + 1}")
        return vals

    rule.kind = "table"
    rule.values = vals
    return rule


def const_rule(value: Number) -> SiteRule:
    v = _num(value)

    def rule(ctx: SiteContext):
        return [v] * (ctx.bound + 1)

    rule.kind = "const"
    rule.values = v
    return rule


def carry_rule(ctx: SiteContext):
    """Every outcome keeps what is left after paying for the sample."""
    return [ctx.available - ctx.cost] * (ctx.bound + 1)


def centered_rule(potential: Callable[[SiteContext, int], Number]) -> SiteRule:
    """Split so the outcome credit tracks ``potential`` around its mean.

    Outcome ``n`` receives ``available - cost + potential(n) - mean(potential)``,
    which meets the rand split condition with equality.
    """

    def rule(ctx: SiteContext):
        pots = [potential(ctx, n) for n in range(ctx.bound + 1)]
        if all(isinstance(p, (int, Fraction)) for p in pots):
            mean = Fraction(sum(pots), len(pots))
        else:
            mean = math.fsum(float(p) for p in pots) / len(pots)
        base = ctx.available - ctx.cost
        return [base + p - mean for p in pots]

    rule.kind = "centered"
    return rule


def _num(x) -> Number:
    if isinstance(x, (int, Fraction, float)):
        return x
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"not a number: {x!r}")


@dataclass
class CreditAnnotation:
    initial_credit: Number
    site_rules: dict = field(default_factory=dict)
    # unlabelled rand sites keep the remaining credit on every branch
    default_rule: Optional[SiteRule] = carry_rule

    def rule_for(self, label: Optional[str]) -> SiteRule:
        if label is not None and label in self.site_rules:
            return self.site_rules[label]
        if label is None and self.default_rule is not None:
            return self.default_rule
        if label is not None and None in self.site_rules:
            return self.site_rules[None]
        raise AnnotationError(f"no site rule for rand site {label!r}")

    def padded(self, extra: Number) -> CreditAnnotation:
        return CreditAnnotation(self.initial_credit + extra, dict(self.site_rules), self.default_rule)


def check_rand_split(N: int, cost_here: Number, available: Number, credits: Sequence[Number],
                     slack: Number = DEFAULT_SLACK) -> bool:
    """``cost + sum(credits) / (N + 1) <= available + slack``."""
    if len(credits) != N + 1:
        raise ValueError("need one credit per outcome")
    if any(c < 0 for c in credits):
        return False
    vals = [cost_here, available, *credits]
    if all(isinstance(v, (int, Fraction)) for v in vals) and isinstance(slack, (int, Fraction)):
        return cost_here + Fraction(sum(credits), N + 1) <= available + slack
    lhs = float(cost_here) + math.fsum(float(c) for c in credits) / (N + 1)
    return lhs <= float(available) + float(slack)


# ---------------------------------------------------------------------------
# exploration

@dataclass
class Exploration:
    graph: Graph
    phi: dict
    frontier: list
    violations: list  # (node, message) noted while propagating
    exact: bool
    initial_credit: Number


def _lt(a, b, exact: bool) -> bool:
    if exact:
        return a < b
    return float(a) < float(b) - 1e-12


def explore_and_assign(program, ann: CreditAnnotation, model: CostModel,
                       budget: int = DEFAULT_BUDGET, heap=None) -> Exploration:
    cfg = as_config(program) if heap is None else as_config((program, heap))
    g = Graph(cfg, budget)
    init = _num(ann.initial_credit)
    exact = model.rational and isinstance(init, (int, Fraction))
    if exact:
        init = Fraction(init)
    phi: dict = {0: init}
    visits: dict = {}
    violations: list = []
    work = deque([0])
    queued = {0}
    while work:
        i = work.popleft()
        queued.discard(i)
        if g.kind[i] == FRONTIER:
            if len(g) >= budget:
                continue
            g.expand_node(i)
        if g.kind[i] != INTERNAL:
            continue
        visits[i] = visits.get(i, 0) + 1
        if visits[i] > _REVISIT_CAP:
            violations.append((i, "credit kept decreasing around a cycle"))
            continue
        avail = phi[i]
        head = g.head[i]
        cost = model.step_cost(g.nodes[i].expr, head)
        if exact:
            cost = Fraction(cost)
        targets: list
        if type(head) is Rand:
            rule = ann.rule_for(head.label)
            s = _site_successors(g, i)
            ctx = SiteContext(g.nodes[i], s.frames, head, avail, cost)
            credits = list(rule(ctx))
            if len(credits) != head.bound.n + 1:
                raise AnnotationError(
                    f"site {head.label!r} returned {len(credits)} credits for rand {head.bound.n}")
            if exact and all(isinstance(c, (int, Fraction)) for c in credits):
                credits = [Fraction(c) for c in credits]
            elif exact:
                exact = False
            targets = []
            for k, c in enumerate(credits):
                targets.append((s.targets[k], c))
        else:
            (j, _), = g.succ[i]
            targets = [(j, avail - cost)]
        for j, c in targets:
            if c < 0:
                violations.append((i, f"negative credit {float(c):.6g} carried"))
            old = phi.get(j)
            if old is None or _lt(c, old, exact):
                phi[j] = c
                if j not in queued and g.kind[j] in (FRONTIER, INTERNAL):
                    work.append(j)
                    queued.add(j)
    frontier = [i for i, k in enumerate(g.kind) if k == FRONTIER]
    return Exploration(g, phi, frontier, violations, exact, init)


class _SiteSucc:
    __slots__ = ("frames", "targets")

    def __init__(self, frames, targets):
        self.frames = frames
        self.targets = targets


def _site_successors(g: Graph, i: int) -> _SiteSucc:
    """Per-outcome successor ids of a rand node (outcome order 0..N)."""
    from .lang.semantics import canonicalize, successors

    s = successors(g.nodes[i])
    ids = [g.index[canonicalize(o)] for o in s.outcomes]
    return _SiteSucc(s.frames, ids)


# ---------------------------------------------------------------------------
# verification

@dataclass
class CheckReport:
    verdict: str  # "Certified" | "Refuted" | "Inconclusive"
    bound: Optional[Number] = None
    nodes_explored: int = 0
    postcondition_ok: bool = True
    deficit: Optional[float] = None
    violated_node: Optional[str] = None
    counter_trace: list = field(default_factory=list)
    residual_mass: Optional[Number] = None
    message: str = ""
    exact: bool = False
    model: str = ""

    @property
    def certified(self) -> bool:
        return self.verdict == "Certified"

    def to_json(self) -> dict:
        def num(x):
            if x is None:
                return None
            d = {"decimal": f"{float(x):.12g}"}
            if isinstance(x, (int, Fraction)):
                f = Fraction(x)
                d["rational"] = f"{f.numerator}/{f.denominator}"
            return d

        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "check_report",
            "model": self.model,
            "verdict": self.verdict,
            "bound": num(self.bound),
            "nodes_explored": self.nodes_explored,
            "postcondition_ok": self.postcondition_ok,
            "residual_mass": num(self.residual_mass),
            "deficit": None if self.deficit is None else f"{self.deficit:.12g}",
            "violated_node": self.violated_node,
            "counter_trace": self.counter_trace,
            "exact_arithmetic": self.exact,
            "message": self.message,
        }


def _frontier_mass(g: Graph) -> Number:
    """Probability that an execution ever reaches an unexpanded node."""
    hit = [1 if k == FRONTIER else 0 for k in g.kind]
    order = g.topological_order()
    if order is not None:
        m = [Fraction(h) for h in hit]
        for i in order:
            if g.kind[i] == INTERNAL:
                m[i] = sum((p * m[j] for j, p in g.succ[i]), Fraction(0))
        return m[0]
    P = g.matrix()
    h = np.array(hit, dtype=float)
    x = h.copy()
    for _ in range(20000):
        nx = h + P @ x
        if np.max(np.abs(nx - x)) < 1e-15:
            x = nx
            break
        x = nx
    return float(min(1.0, x[0]))


def _trace(g: Graph, i: int, limit: int = 40) -> list:
    path = g.trace_to(i)
    if len(path) > limit:
        path = path[: limit // 2] + path[-limit // 2:]
    return [pretty_config(g.nodes[j]) for j in path]


def verify_supermartingale(ex: Exploration, model: CostModel, slack: Optional[Number] = None,
                           postcondition: Optional[Callable[[Expr], bool]] = None) -> CheckReport:
    g, phi = ex.graph, ex.phi
    exact = ex.exact and all(isinstance(v, (int, Fraction)) for v in phi.values())
    if slack is None:
        slack = Fraction(0) if exact else DEFAULT_SLACK
    rep = CheckReport("Certified", nodes_explored=len(g), exact=exact, model=model.name)
    worst = None  # (node, deficit, message)

    def flag(i, deficit, msg):
        nonlocal worst
        if worst is None or i < worst[0]:
            worst = (i, deficit, msg)

    for i, kind in enumerate(g.kind):
        if i not in phi:
            continue
        a = phi[i]
        if (a < -slack) if exact else (float(a) < -float(slack)):
            flag(i, -float(a), "negative credit")
            continue
        if kind == VALUE:
            if postcondition is not None and not postcondition(g.nodes[i].expr):
                rep.postcondition_ok = False
                flag(i, 0.0, "postcondition violated")
        elif kind == STUCK:
            flag(i, 0.0, f"stuck configuration: {g.reason.get(i)}")
        elif kind == INTERNAL:
            c = model.step_cost(g.nodes[i].expr, g.head[i])
            if exact:
                lhs = Fraction(c) + sum((p * phi[j] for j, p in g.succ[i]), Fraction(0))
                bad = lhs > a + slack
                d = lhs - a
            else:
                lhs = float(c) + math.fsum(float(p) * float(phi[j]) for j, p in g.succ[i])
                bad = lhs > float(a) + float(slack)
                d = lhs - float(a)
            if bad:
                flag(i, float(d), "supermartingale inequality fails")
    for i, msg in ex.violations:
        if msg.startswith("credit kept"):
            flag(i, math.nan, msg)
    if worst is not None:
        i, d, msg = worst
        rep.verdict = "Refuted"
        rep.deficit = d
        rep.violated_node = pretty_config(g.nodes[i])
        rep.counter_trace = _trace(g, i)
        rep.message = msg
        rep.bound = None
        return rep
    if ex.frontier:
        rep.verdict = "Inconclusive"
        rep.residual_mass = _frontier_mass(g)
        rep.message = f"{len(ex.frontier)} configurations left unexplored (budget)"
        return rep
    # phi[0] may sit below the initial credit when a loop returns to the root
    rep.bound = ex.initial_credit
    return rep


def check_postcondition(graph: Graph, pred: Callable[[Expr], bool]) -> bool:
    return all(pred(graph.nodes[i].expr) for i, k in enumerate(graph.kind) if k == VALUE)


def certify(program, ann: CreditAnnotation, model: CostModel, budget: int = DEFAULT_BUDGET,
            slack: Optional[Number] = None, postcondition=None, heap=None) -> CheckReport:
    ex = explore_and_assign(program, ann, model, budget, heap)
    return verify_supermartingale(ex, model, slack, postcondition)


# ---------------------------------------------------------------------------
# JSON certificates

def annotation_from_json(data: dict) -> tuple:
    """Returns ``(annotation, model_name, program_path_or_None)``."""
    try:
        init = Fraction(str(data["initial_credit"]))
    except (KeyError, ValueError) as exc:
        raise AnnotationError(f"bad initial_credit: {exc}") from None
    rules = {}
    for r in data.get("rules", []):
        site = r.get("site")
        kind = r.get("kind")
        vals = r.get("values")
        if kind == "const":
            rules[site] = const_rule(Fraction(str(vals)))
        elif kind == "table":
            if not isinstance(vals, list):
                raise AnnotationError(f"table rule for {site!r} needs a list of values")
            rules[site] = table_rule([Fraction(str(v)) for v in vals])
        else:
            raise AnnotationError(f"unknown rule kind {kind!r}")
    return CreditAnnotation(init, rules), data.get("model"), data.get("program")


def load_certificate(path) -> tuple:
    p = Path(path)
    data = json.loads(p.read_text())
    ann, model, prog = annotation_from_json(data)
    if prog is not None and not Path(prog).is_absolute():
        prog = str((p.parent / prog).resolve())
    return ann, model, prog


def model_for(name: Optional[str], fallback: str = "all") -> CostModel:
    return get_model(name or fallback)
