"""Running one corpus instance through the engine, the checker and the sampler."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

from ..certify import certify
from ..costs import get_model
from ..engine import expected_cost
from ..montecarlo import estimate
from .entries import EXACT, CorpusEntry

UPPER_SLACK = 1e-9
DEFAULT_SMOKE_TRIALS = 2000


def _fmt(x) -> Optional[str]:
    return None if x is None else f"{float(x):.12g}"


def _close(a, b, tol: float) -> bool:
    if tol == 0 and isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a) == Fraction(b)
    return abs(float(a) - float(b)) <= max(tol, 1e-12)


@dataclass
class InstanceResult:
    entry: str
    label: str
    params: dict
    kind: str
    model: str
    oracle: str
    bound: str
    ec_lower: str
    converged: bool
    stuck_mass: str
    engine_ok: bool
    expected_ok: bool
    verdict: Optional[str] = None
    cert_ok: bool = True
    postcondition_ok: bool = True
    mc_mean: Optional[str] = None
    mc_ci95: Optional[str] = None
    mc_ok: bool = True
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def run_instance(entry: CorpusEntry, params: dict, trials: int = DEFAULT_SMOKE_TRIALS,
                 seed: int = 0) -> InstanceResult:
    model = get_model(entry.model)
    prog = entry.program(**params)
    oracle = entry.oracle(**params)
    bound = entry.bound(**params)
    rep = expected_cost(prog, model)
    ec = rep.ec_lower
    fails = []

    stuck = float(rep.stuck_mass)
    if stuck > 0:
        fails.append(f"stuck mass {stuck:.3g}")
    if entry.kind == EXACT:
        engine_ok = rep.converged and _close(ec, oracle, entry.tol)
        if not engine_ok:
            fails.append(f"engine {float(ec):.12g} vs oracle {float(oracle):.12g}")
    else:
        series = [p.ec_lower for p in rep.series] + [float(ec)]
        engine_ok = all(float(x) <= float(bound) + UPPER_SLACK for x in series)
        if not engine_ok:
            fails.append(f"engine {float(ec):.12g} exceeds bound {float(bound):.12g}")

    expected_ok = True
    if entry.expected is not None:
        i = entry.params.index(params) if params in entry.params else None
        if i is not None:
            expected_ok = _close(entry.expected[i], oracle, max(entry.tol, 1e-9))
            if not expected_ok:
                fails.append(f"manifest expects {float(entry.expected[i]):.12g}, "
                             f"oracle gives {float(oracle):.12g}")

    res = InstanceResult(entry.name, entry.label(params), params, entry.kind, entry.model,
                         _fmt(oracle), _fmt(bound), _fmt(ec), rep.converged, _fmt(stuck),
                         engine_ok, expected_ok)

    ann = entry.certificate(**params)
    post = entry.postcondition(**params)
    if ann is not None:
        cr = certify(prog, ann, model, postcondition=post)
        res.verdict = cr.verdict
        res.postcondition_ok = cr.postcondition_ok
        res.cert_ok = cr.certified and _close(cr.bound, bound, 1e-12)
        if not res.cert_ok:
            fails.append(f"certificate {cr.verdict}: {cr.message}")
    elif post is not None:
        from ..certify import check_postcondition
        from ..engine import reachable_graph
        res.postcondition_ok = check_postcondition(reachable_graph(prog), post)
        if not res.postcondition_ok:
            fails.append("postcondition violated")

    if trials > 0:
        est = estimate(prog, model, trials, seed)
        res.mc_mean, res.mc_ci95 = _fmt(est.mean), _fmt(est.ci95_halfwidth)
        res.mc_ok = est.timeouts == 0 and est.stuck == 0 and est.agrees_with(float(ec))
        if not res.mc_ok:
            fails.append(f"monte carlo {est.mean:.6g} +- {est.ci95_halfwidth:.3g} vs {float(ec):.6g}")
    res.failures = fails
    return res
