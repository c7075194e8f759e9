"""Seeded trace sampling for statistical estimates of expected cost.

Each trial draws its rand outcomes from its own generator, seeded by hashing
``(seed, trial index)``, so results do not depend on the order trials run
in.  Deterministic stretches between two rand steps are cached by canonical
configuration, which keeps long programs cheap to sample repeatedly.
"""
from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

from .costs import CostModel
from .engine import SCHEMA_VERSION, as_config
from .lang.semantics import Config, canonicalize, successors
from .lang.syntax import Expr

DEFAULT_STEP_LIMIT = 1_000_000


class Finished(NamedTuple):
    value: Expr
    cost: float
    steps: int


class Timeout(NamedTuple):
    cost: float
    steps: int


class StuckTrace(NamedTuple):
    reason: str
    cost: float
    steps: int


TraceResult = Union[Finished, Timeout, StuckTrace]


class _Segment(NamedTuple):
    cost: float
    steps: int
    end: Config  # a value, a stuck config, or a config whose next step is a rand
    kind: str  # "value" | "stuck" | "branch" | "long"
    outcomes: tuple = ()
    reason: Optional[str] = None


class TraceSampler:
    """Samples traces of one cost model, sharing the segment cache."""

    def __init__(self, model: CostModel, step_limit: int = DEFAULT_STEP_LIMIT,
                 cache_limit: int = 200_000):
        if step_limit <= 0:
            raise ValueError("step_limit must be positive")
        self.model = model
        self.step_limit = step_limit
        self.cache_limit = cache_limit
        self._cache: dict = {}

    def _segment(self, cfg: Config) -> _Segment:
        seg = self._cache.get(cfg)
        if seg is not None:
            return seg
        cost = 0.0
        steps = 0
        cur = cfg
        model = self.model
        while True:
            s = successors(cur)
            if s.kind == "value":
                seg = _Segment(cost, steps, cur, "value")
                break
            if s.kind == "stuck":
                seg = _Segment(cost, steps, cur, "stuck", reason=s.reason)
                break
            c = float(model.step_cost(cur.expr, s.head))
            if len(s.outcomes) > 1:
                # the branching step itself is included in the segment;
                # outcomes are stored canonical so sampling skips renaming
                outs = tuple(canonicalize(o) for o in s.outcomes)
                seg = _Segment(cost + c, steps + 1, cur, "branch", outs)
                break
            if steps >= self.step_limit:
                seg = _Segment(cost, steps, cur, "long")
                break
            cost += c
            steps += 1
            cur = s.outcomes[0]
        if len(self._cache) >= self.cache_limit:
            self._cache.clear()
        self._cache[cfg] = seg
        return seg

    def sample(self, cfg, rng: random.Random) -> TraceResult:
        cur = canonicalize(as_config(cfg))
        cost = 0.0
        steps = 0
        limit = self.step_limit
        while True:
            seg = self._segment(cur)
            if steps + seg.steps > limit or seg.kind == "long":
                return Timeout(cost + seg.cost, min(limit, steps + seg.steps))
            cost += seg.cost
            steps += seg.steps
            if seg.kind == "value":
                return Finished(seg.end.expr, cost, steps)
            if seg.kind == "stuck":
                return StuckTrace(seg.reason, cost, steps)
            outs = seg.outcomes
            cur = outs[rng.randrange(len(outs))]


def sample_trace(cfg, model: CostModel, rng: random.Random,
                 step_limit: int = DEFAULT_STEP_LIMIT) -> TraceResult:
    return TraceSampler(model, step_limit).sample(cfg, rng)


def trial_rng(seed: int, trial: int) -> random.Random:
    h = hashlib.blake2b(f"{seed}:{trial}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(h, "little"))


@dataclass
class Estimate:
    trials: int
    mean: float
    variance: float
    ci95_halfwidth: float
    timeouts: int
    seed: int
    stuck: int = 0
    finished: int = 0
    step_limit: int = DEFAULT_STEP_LIMIT
    model: str = ""

    def agrees_with(self, value: float, floor: float = 1e-3) -> bool:
        return abs(self.mean - float(value)) <= max(3 * self.ci95_halfwidth, floor)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": "estimate",
            "model": self.model,
            "trials": self.trials,
            "finished": self.finished,
            "timeouts": self.timeouts,
            "stuck": self.stuck,
            "seed": self.seed,
            "step_limit": self.step_limit,
            "mean": f"{self.mean:.12g}",
            "variance": f"{self.variance:.12g}",
            "ci95_halfwidth": f"{self.ci95_halfwidth:.12g}",
        }


def estimate(program, model: CostModel, trials: int, seed: int = 0,
             step_limit: int = DEFAULT_STEP_LIMIT, heap=None) -> Estimate:
    """Mean cost over ``trials`` independent traces.  Timed-out and stuck
    traces are counted and left out of the mean."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cfg = as_config(program) if heap is None else Config(program, heap)
    sampler = TraceSampler(model, step_limit)
    costs = []
    timeouts = stuck = 0
    for t in range(trials):
        r = sampler.sample(cfg, trial_rng(seed, t))
        if type(r) is Finished:
            costs.append(r.cost)
        elif type(r) is Timeout:
            timeouts += 1
        else:
            stuck += 1
    n = len(costs)
    if n == 0:
        mean = var = half = math.nan
    else:
        mean = math.fsum(costs) / n
        var = math.fsum((c - mean) ** 2 for c in costs) / (n - 1) if n > 1 else 0.0
        half = 1.96 * math.sqrt(var / n)
    return Estimate(trials, mean, var, half, timeouts, seed, stuck, n, step_limit, model.name)
