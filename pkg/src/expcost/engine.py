"""Exact enumeration of the semantics over canonical configurations.

The reachable configurations are explored breadth first into a graph whose
edges carry exact rational probabilities.  Depth-bounded quantities
(``exec_n``, termination probability, ``EC_n``) are then computed by backward
sweeps over that graph, which is the depth recursion with memoization on
(configuration, remaining depth) laid out as vectors.
"""
from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import sparse

from .costs import CostModel
from .dist import Dist
from .lang.pretty import pretty_config
from .lang.semantics import Config, canonicalize, successors

VALUE, STUCK, INTERNAL, FRONTIER = "value", "stuck", "internal", "frontier"

DEFAULT_TOL = 1e-6
DEFAULT_MAX_DEPTH = 1 << 16
DEFAULT_BUDGET = 1_000_000
SCHEMA_VERSION = 1


class BudgetExceeded(Exception):
    pass


def as_config(x) -> Config:
    if isinstance(x, Config):
        return x
    if isinstance(x, tuple) and len(x) == 2:
        return Config(*x)
    return Config(x)


class Graph:
    """Reachable canonical configurations with probability-labelled edges.

    Node 0 is the root.  ``succ[i]`` lists ``(j, p)`` with exact ``p``; a
    successor reached by several rand outcomes appears once with the summed
    probability.  Nodes are expanded in breadth-first order.
    """

    def __init__(self, root, budget: int = DEFAULT_BUDGET):
        self.budget = budget
        self.nodes: list = []
        self.index: dict = {}
        self.kind: list = []
        self.succ: list = []
        self.head: list = []
        self.depth: list = []
        self.parent: list = []
        self.reason: dict = {}
        self._queue: deque = deque()
        self._pending = 0
        self.budget_exhausted = False
        self._add(canonicalize(as_config(root)), 0, -1)

    def _add(self, cfg: Config, depth: int, parent: int) -> int:
        i = len(self.nodes)
        self.nodes.append(cfg)
        self.index[cfg] = i
        self.kind.append(FRONTIER)
        self.succ.append(())
        self.head.append(None)
        self.depth.append(depth)
        self.parent.append(parent)
        if cfg.expr._val:
            self.kind[i] = VALUE
        else:
            self._queue.append(i)
            self._pending += 1
        return i

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def root(self) -> Config:
        return self.nodes[0]

    @property
    def closed(self) -> bool:
        return self._pending == 0

    @property
    def frontier(self) -> list:
        return [i for i, k in enumerate(self.kind) if k == FRONTIER]

    def _drop_expanded(self) -> None:
        q = self._queue
        while q and self.kind[q[0]] != FRONTIER:
            q.popleft()

    def expand_node(self, i: int) -> None:
        """Expand node ``i`` now (no-op if already expanded)."""
        if self.kind[i] != FRONTIER:
            return
        self._pending -= 1
        cfg = self.nodes[i]
        s = successors(cfg)
        if s.kind == "value":
            self.kind[i] = VALUE
            return
        if s.kind == "stuck":
            self.kind[i] = STUCK
            self.reason[i] = s.reason
            return
        self.kind[i] = INTERNAL
        self.head[i] = s.head
        outs = s.outcomes
        d = self.depth[i] + 1
        index = self.index
        if len(outs) == 1:
            c = canonicalize(outs[0])
            j = index.get(c)
            if j is None:
                j = self._add(c, d, i)
            self.succ[i] = ((j, Fraction(1)),)
            return
        p = Fraction(1, len(outs))
        acc: dict = {}
        for o in outs:
            c = canonicalize(o)
            j = index.get(c)
            if j is None:
                j = self._add(c, d, i)
            acc[j] = acc.get(j, 0) + p
        self.succ[i] = tuple(acc.items())

    def expand(self, max_depth: float = math.inf, max_nodes: Optional[int] = None) -> bool:
        """Expand every node of depth <= ``max_depth``.  Returns False when the
        node budget runs out first."""
        limit = self.budget if max_nodes is None else min(max_nodes, self.budget)
        q = self._queue
        self._drop_expanded()
        while q and self.depth[q[0]] <= max_depth:
            if len(self.nodes) >= limit:
                self.budget_exhausted = True
                return False
            self.expand_node(q.popleft())
            self._drop_expanded()
        return True

    def expand_all(self) -> bool:
        return self.expand(math.inf)

    # -- structure queries ------------------------------------------------
    def is_acyclic(self) -> bool:
        return self.topological_order() is not None

    def topological_order(self) -> Optional[list]:
        """Nodes ordered so that successors come first, or None on a cycle."""
        n = len(self.nodes)
        state = bytearray(n)  # 0 new, 1 open, 2 done
        order: list = []
        for start in range(n):
            if state[start]:
                continue
            stack = [(start, 0)]
            state[start] = 1
            while stack:
                i, k = stack[-1]
                succ = self.succ[i]
                if k < len(succ):
                    stack[-1] = (i, k + 1)
                    j = succ[k][0]
                    if state[j] == 1:
                        return None
                    if state[j] == 0:
                        state[j] = 1
                        stack.append((j, 0))
                else:
                    state[i] = 2
                    order.append(i)
                    stack.pop()
        return order

    def trace_to(self, i: int) -> list:
        """Root-to-node path along discovery parents."""
        path = []
        while i >= 0:
            path.append(i)
            i = self.parent[i]
        return path[::-1]

    def costs(self, model: CostModel) -> list:
        out = []
        for i, k in enumerate(self.kind):
            if k == INTERNAL:
                out.append(model.step_cost(self.nodes[i].expr, self.head[i]))
            else:
                out.append(0)
        return out

    def matrix(self) -> sparse.csr_matrix:
        rows, cols, vals = [], [], []
        for i, succ in enumerate(self.succ):
            for j, p in succ:
                rows.append(i)
                cols.append(j)
                vals.append(float(p))
        n = len(self.nodes)
        return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))

    def summary(self) -> dict:
        counts: dict = {}
        for k in self.kind:
            counts[k] = counts.get(k, 0) + 1
        return {"nodes": len(self.nodes), "closed": self.closed, **counts}


def reachable_graph(cfg, budget: int = DEFAULT_BUDGET) -> Graph:
    g = Graph(cfg, budget)
    g.expand_all()
    return g


# ---------------------------------------------------------------------------
# depth-bounded quantities (exact)

def exec_n(cfg, n: int, graph: Optional[Graph] = None) -> Dist:
    """Distribution over values reached within ``n`` steps."""
    g = graph or Graph(cfg)
    if not g.expand(n - 1):
        raise BudgetExceeded("node budget exhausted")
    cur = {0: Fraction(1)}
    out: dict = {}
    for _ in range(n + 1):
        nxt: dict = {}
        for i, p in cur.items():
            k = g.kind[i]
            if k == VALUE:
                v = g.nodes[i].expr
                out[v] = out.get(v, 0) + p
            elif k == INTERNAL:
                for j, q in g.succ[i]:
                    nxt[j] = nxt.get(j, 0) + p * q
        cur = nxt
        if not cur:
            break
    return Dist._trusted(out)


def termination_prob(cfg, n: int, graph: Optional[Graph] = None) -> Fraction:
    return exec_n(cfg, n, graph).mass()


def _sweep_exact(g: Graph, n: int, cost: list) -> tuple:
    """Exact backward sweeps for EC_n, value mass and stuck mass at the root."""
    live = [i for i in range(len(g)) if g.depth[i] <= n]
    ec = {i: Fraction(0) for i in live}
    vm = {i: Fraction(1 if g.kind[i] == VALUE else 0) for i in live}
    sm = {i: Fraction(1 if g.kind[i] == STUCK else 0) for i in live}
    internal = [i for i in live if g.kind[i] == INTERNAL]
    cost_f = {i: Fraction(cost[i]) for i in internal}
    for k in range(1, n + 1):
        # only nodes that are at most n - k steps from the root matter now
        horizon = n - k
        nec, nvm, nsm = dict(ec), dict(vm), dict(sm)
        for i in internal:
            if g.depth[i] > horizon:
                continue
            a = cost_f[i]
            b = c = Fraction(0)
            for j, p in g.succ[i]:
                a += p * ec[j]
                b += p * vm[j]
                c += p * sm[j]
            nec[i], nvm[i], nsm[i] = a, b, c
        ec, vm, sm = nec, nvm, nsm
    if n == 0:
        return Fraction(0), vm[0], sm[0]
    return ec[0], vm[0], sm[0]


def expected_cost_n(cfg, n: int, model: CostModel, exact: Optional[bool] = None,
                    graph: Optional[Graph] = None):
    """EC_n of the configuration: exact Fraction for rational models unless
    ``exact`` is False, otherwise a float."""
    if n <= 0:
        return Fraction(0) if (exact or (exact is None and model.rational)) else 0.0
    g = graph or Graph(cfg)
    if not g.expand(n - 1):
        raise BudgetExceeded("node budget exhausted")
    cost = g.costs(model)
    if exact is None:
        exact = model.rational
    if exact:
        if not model.rational:
            raise ValueError(f"model {model.name} is not rational")
        return _sweep_exact(g, n, cost)[0]
    x = _FloatSweeper(g, cost)
    return x.run(n)[0]


class _FloatSweeper:
    """Vectorized backward sweeps on a fixed graph."""

    def __init__(self, g: Graph, cost: list):
        self.P = g.matrix()
        n = len(g)
        base = np.zeros((n, 3))
        base[:, 0] = [float(c) for c in cost]
        self.cost = base
        ind = np.zeros((n, 3))
        for i, k in enumerate(g.kind):
            if k == VALUE:
                ind[i, 1] = 1.0
            elif k == STUCK:
                ind[i, 2] = 1.0
        self.ind = ind
        self.step = base + ind

    def run(self, n: int, record=None):
        """Returns root (ec, value_mass, stuck_mass) after ``n`` sweeps;
        ``record`` receives the same triple at every depth in the given set."""
        X = self.ind.copy()
        P, add = self.P, self.step
        for k in range(1, n + 1):
            X = add + P @ X
            if record is not None and k in record:
                record[k] = (float(X[0, 0]), float(X[0, 1]), float(X[0, 2]))
        return float(X[0, 0]), float(X[0, 1]), float(X[0, 2])


# ---------------------------------------------------------------------------
# convergence reports

def _fmt(x) -> str:
    return f"{float(x):.12g}"


def _num(x) -> dict:
    d = {"decimal": _fmt(x)}
    if isinstance(x, (int, Fraction)):
        f = Fraction(x)
        d["rational"] = f"{f.numerator}/{f.denominator}"
    return d


@dataclass
class SeriesPoint:
    depth: int
    ec_lower: float
    value_mass: float
    residual_mass: float
    stuck_mass: float = 0.0


@dataclass
class ConvergenceReport:
    model: str
    series: list = field(default_factory=list)
    converged: bool = False
    stuck_mass: float = 0.0
    nodes: int = 0
    closed: bool = False
    budget_exhausted: bool = False
    exact_value: Optional[object] = None  # EC when the graph is finite and acyclic
    exact_value_mass: Optional[Fraction] = None
    exact_stuck_mass: Optional[Fraction] = None
    tol: float = DEFAULT_TOL
    stuck_reasons: list = field(default_factory=list)
    note: str = ("ec_lower is a lower bound on the expected cost; convergence is "
                 "judged from the truncated series and is not a proof")

    @property
    def ec_lower(self):
        if self.exact_value is not None:
            return self.exact_value
        return self.series[-1].ec_lower if self.series else 0.0

    @property
    def value_mass(self):
        if self.exact_value_mass is not None:
            return self.exact_value_mass
        return self.series[-1].value_mass if self.series else 0.0

    @property
    def residual_mass(self):
        if self.exact_value_mass is not None:
            return 1 - self.exact_value_mass - self.exact_stuck_mass
        return self.series[-1].residual_mass if self.series else 1.0

    def to_json(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "kind": "convergence_report",
            "model": self.model,
            "converged": self.converged,
            "ec_lower": _num(self.ec_lower),
            "value_mass": _num(self.value_mass),
            "residual_mass": _num(self.residual_mass),
            "stuck_mass": _num(self.exact_stuck_mass if self.exact_stuck_mass is not None
                               else self.stuck_mass),
            "nodes": self.nodes,
            "graph_closed": self.closed,
            "budget_exhausted": self.budget_exhausted,
            "tol": self.tol,
            "series": [
                {"depth": p.depth, "ec_lower": _fmt(p.ec_lower), "value_mass": _fmt(p.value_mass),
                 "residual_mass": _fmt(p.residual_mass)}
                for p in self.series
            ],
            "note": self.note,
        }
        if self.stuck_reasons:
            out["stuck_reasons"] = self.stuck_reasons
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["depth", "ec_lower", "value_mass", "residual_mass"])
        for p in self.series:
            w.writerow([p.depth, _fmt(p.ec_lower), _fmt(p.value_mass), _fmt(p.residual_mass)])
        return buf.getvalue()


def _exact_dag(g: Graph, order: list, cost: list, rational: bool):
    zero = Fraction(0) if rational else 0.0
    ec = [zero] * len(g)
    vm = [Fraction(0)] * len(g)
    sm = [Fraction(0)] * len(g)
    for i in order:
        k = g.kind[i]
        if k == VALUE:
            vm[i] = Fraction(1)
        elif k == STUCK:
            sm[i] = Fraction(1)
        elif k == INTERNAL:
            c = Fraction(cost[i]) if rational else float(cost[i])
            a, b, s = c, Fraction(0), Fraction(0)
            for j, p in g.succ[i]:
                a += (p if rational else float(p)) * ec[j]
                b += p * vm[j]
                s += p * sm[j]
            ec[i], vm[i], sm[i] = a, b, s
    return ec[0], vm[0], sm[0]


def expected_cost(cfg, model: CostModel, max_depth: int = DEFAULT_MAX_DEPTH,
                  tol: float = DEFAULT_TOL, budget: int = DEFAULT_BUDGET,
                  graph: Optional[Graph] = None) -> ConvergenceReport:
    """Doubling-depth evaluation of EC_n with convergence reporting."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    g = graph or Graph(cfg, budget)
    rep = ConvergenceReport(model=model.name, tol=tol)
    depths = []
    d = 1
    while d <= max_depth:
        depths.append(d)
        d *= 2
    sweeper = None
    swept_nodes = -1
    X, k = None, 0
    for n in depths:
        if not g.closed and not g.expand(n - 1):
            rep.budget_exhausted = True
            break
        if swept_nodes != len(g):
            # the transition matrix changed: restart the sweeps from depth 0
            sweeper = _FloatSweeper(g, g.costs(model))
            swept_nodes = len(g)
            X, k = sweeper.ind.copy(), 0
        P, add = sweeper.P, sweeper.step
        while k < n:
            X = add + P @ X
            k += 1
        _record(rep, n, float(X[0, 0]), float(X[0, 1]), float(X[0, 2]))
        if _converged(rep, tol):
            rep.converged = True
            break

    rep.nodes = len(g)
    rep.closed = g.closed
    rep.stuck_mass = rep.series[-1].stuck_mass if rep.series else 0.0
    rep.stuck_reasons = sorted({g.reason[i] for i in g.reason})[:10]
    if g.closed:
        order = g.topological_order()
        if order is not None:
            cost = g.costs(model)
            ec, vm, sm = _exact_dag(g, order, cost, model.rational)
            rep.exact_value, rep.exact_value_mass, rep.exact_stuck_mass = ec, vm, sm
            rep.stuck_mass = float(sm)
            rep.converged = True
    return rep


def _record(rep: ConvergenceReport, n: int, ec: float, vm: float, sm: float) -> None:
    if rep.series:
        # sweeps are monotone in exact arithmetic; guard against float jitter
        last = rep.series[-1]
        ec = max(ec, last.ec_lower)
        vm = max(vm, last.value_mass)
        sm = max(sm, last.stuck_mass)
    res = max(0.0, 1.0 - vm - sm)
    rep.series.append(SeriesPoint(n, ec, vm, res, sm))


def _converged(rep: ConvergenceReport, tol: float) -> bool:
    s = rep.series
    if len(s) < 2:
        return False
    a, b = s[-2], s[-1]
    return abs(b.ec_lower - a.ec_lower) < tol and b.residual_mass < tol


def ec_series_exact(cfg, model: CostModel, depths, graph: Optional[Graph] = None) -> list:
    """Exact EC_n for each requested depth (small depths only)."""
    g = graph or Graph(cfg)
    out = []
    for n in depths:
        out.append(expected_cost_n(cfg, n, model, exact=model.rational, graph=g))
    return out


def describe_node(g: Graph, i: int) -> str:
    return pretty_config(g.nodes[i])
