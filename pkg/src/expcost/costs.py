"""Cost models: nonnegative costs attached to the next reduction step.

A model is defined on the head redex of an expression, which makes it
invariant under evaluation contexts by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

from .lang.semantics import Redex, decompose, fill
from .lang.syntax import App, Expr, Rand, Tick

Number = Union[int, float, Fraction]


@dataclass(frozen=True)
class CostModel:
    """``head_cost`` maps a head redex to its cost.

    ``rational`` promises that every cost is an int or Fraction, which lets
    the engine and checker work in exact arithmetic.
    """

    name: str
    head_cost: Callable[[Expr], Number]
    rational: bool = True
    description: str = field(default="", compare=False)
    # optional whole-expression cost; bypasses the head redex (used to build
    # models that are not context invariant, e.g. for negative tests)
    expr_cost: Optional[Callable[[Expr], Number]] = field(default=None, compare=False)

    def cost(self, e: Expr) -> Number:
        if self.expr_cost is not None:
            return self.expr_cost(e)
        d = decompose(e)
        if type(d) is not Redex:
            return 0
        return self.head_cost(d.head)

    def step_cost(self, e: Expr, head: Expr) -> Number:
        """Cost of stepping ``e`` whose head redex is already known."""
        if self.expr_cost is not None:
            return self.expr_cost(e)
        return self.head_cost(head)

    __call__ = cost


def _log2_int(k: int) -> Number:
    # exact integer when k is a power of two
    if k > 0 and k & (k - 1) == 0:
        return k.bit_length() - 1
    return math.log2(k)


def _all(head: Expr) -> int:
    return 1


def _app(head: Expr) -> int:
    return 1 if type(head) is App else 0


def _rand(head: Expr) -> Number:
    if type(head) is Rand:
        return _log2_int(head.bound.n + 1)
    return 0


def _tick(head: Expr) -> int:
    if type(head) is Tick:
        return abs(head.e.n)
    return 0


def _draws(head: Expr) -> int:
    return 1 if type(head) is Rand else 0


def cost_all() -> CostModel:
    return COST_ALL


def cost_app() -> CostModel:
    return COST_APP


def cost_rand() -> CostModel:
    return COST_RAND


def cost_tick() -> CostModel:
    return COST_TICK


def cost_draws() -> CostModel:
    return COST_DRAWS


COST_ALL = CostModel("all", _all, True, "every step costs 1")
COST_APP = CostModel("app", _app, True, "function applications cost 1")
COST_RAND = CostModel("rand", _rand, False, "rand N costs log2(N+1) bits")
COST_TICK = CostModel("tick", _tick, True, "tick z costs |z|")
COST_DRAWS = CostModel("draws", _draws, True, "each rand costs 1 regardless of range")

MODELS = {m.name: m for m in (COST_ALL, COST_APP, COST_RAND, COST_TICK, COST_DRAWS)}


def get_model(name: str) -> CostModel:
    try:
        return MODELS[name]
    except KeyError:
        raise KeyError(f"unknown cost model {name!r}; known: {', '.join(MODELS)}") from None


def custom_model(name: str, head_cost: Callable[[Expr], Number], rational: bool = False) -> CostModel:
    return CostModel(name, head_cost, rational)


def expression_model(name: str, fn: Callable[[Expr], Number], rational: bool = True) -> CostModel:
    """A model computed from the whole expression rather than its head redex."""
    return CostModel(name, _all, rational, expr_cost=fn)


def is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


def check_context_invariance(model: CostModel, samples: Iterable[tuple],
                             tol: float = 0.0) -> bool:
    """True iff ``cost(K[e]) == cost(e)`` for every ``(frames, e)`` sample."""
    for frames, e in samples:
        inner = model.cost(e)
        outer = model.cost(fill(frames, e))
        if abs(float(outer) - float(inner)) > tol if tol else outer != inner:
            return False
    return True


def context_invariance_counterexample(model: CostModel, samples: Iterable[tuple]) -> Optional[tuple]:
    for frames, e in samples:
        if model.cost(fill(frames, e)) != model.cost(e):
            return frames, e
    return None
