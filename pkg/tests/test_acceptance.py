"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` or as a script.
"""
import contextlib
import itertools
import math
import time
from fractions import Fraction

import pytest
from hypothesis import given, settings

from expcost.certify import CreditAnnotation, certify, check_postcondition
from expcost.costs import COST_ALL, COST_APP, COST_DRAWS, COST_RAND, COST_TICK, check_context_invariance, get_model
from expcost.corpus import corpus_entries, get_entry, oracle_log_factorial, oracle_quicksort_t, quicksort_closed_bound
from expcost.corpus.oracles import (
    BATCH_QUERY, heap_insert_bound, heap_remove_bound, kway_merge_budget, meld_budget,
    oracle_coupon, oracle_quicksort_entropy,
)
from expcost.dist import dbind, dret
from expcost.engine import Graph, expected_cost, expected_cost_n, reachable_graph
from expcost.lang import decompose
from expcost.lang.semantics import Redex
from expcost.montecarlo import estimate
from strategies import kernels, programs, weights

F = Fraction
EPS = 1e-9
MC_TRIALS = 100_000


@pytest.fixture
def criterion(capsys):
    """Times the body, prints one verdict line and enforces the runtime cap."""
    @contextlib.contextmanager
    def run(num, title, limit):
        t0 = time.perf_counter()
        err = None
        try:
            yield
        except Exception as exc:  # noqa: BLE001 - reported, then re-raised
            err = exc
        dt = time.perf_counter() - t0
        if err is None and dt >= limit:
            err = AssertionError(f"runtime {dt:.1f}s exceeds {limit}s")
        line = f"criterion {num:2d} {title:<22} {'PASS' if err is None else 'FAIL'} ({dt:.2f}s)"
        if err is not None:
            line += f": {err}"
        with capsys.disabled():
            print("\n" + line)
        if err is not None:
            raise err
    return run


def _upper_series(rep):
    pts = [p.ec_lower for p in rep.series]
    if rep.exact_value is not None:
        pts.append(float(rep.exact_value))
    return pts


def _certified(entry, params, credit=None):
    ann = entry.certificate(**params)
    if credit is not None:
        ann = CreditAnnotation(credit, ann.site_rules, ann.default_rule)
    return certify(entry.program(**params), ann, get_model(entry.model),
                   postcondition=entry.postcondition(**params))


def test_criterion_01_coin_toss(criterion):
    with criterion(1, "coinToss", 1.0):
        e = get_entry("coinToss")
        rep = expected_cost(e.program(), COST_APP, max_depth=256, tol=1e-7)
        assert abs(float(rep.ec_lower) - 2) <= 1e-6, rep.ec_lower
        ok = _certified(e, {})
        assert ok.verdict == "Certified" and ok.bound == 2
        assert _certified(e, {}, F(19, 10)).verdict == "Refuted"


def test_criterion_02_t_half(criterion):
    with criterion(2, "T_half", 1.0):
        rep = expected_cost(get_entry("t_half").program(), COST_TICK)
        assert rep.exact_value == F(1, 2)


def test_criterion_03_amortized_op(criterion):
    with criterion(3, "amortized op", 5.0):
        pair = get_entry("op_pair")
        for n in (0, 1, 4, 10):
            ec = expected_cost(pair.program(n=n), COST_TICK).ec_lower
            assert abs(float(ec) - (0.75 * n + 0.25)) <= EPS, (n, ec)
        rep = get_entry("op_repeat")
        for n, m in ((0, 3), (2, 2), (4, 1)):
            r = _certified(rep, {"n": n, "m": m})
            assert r.verdict == "Certified" and r.bound == n + m, (n, m, r.verdict)


def test_criterion_04_coupon_collector(criterion):
    with criterion(4, "coupon collector", 60.0):
        e = get_entry("coupon_collector")
        for n, want in ((2, F(3)), (3, F(11, 2)), (4, F(25, 3))):
            assert oracle_coupon(n) == want
            rep = expected_cost(e.program(n=n), COST_DRAWS)
            assert rep.converged and abs(float(rep.ec_lower) - float(want)) <= 1e-3, (n, rep.ec_lower)
            r = _certified(e, {"n": n}, want + F(1, 10**9))
            assert r.verdict == "Certified", (n, r.message)


def test_criterion_05_fisher_yates(criterion):
    with criterion(5, "Fisher-Yates", 10.0):
        e = get_entry("fisher_yates")
        for n in range(2, 6):
            want = sum(math.log2(i) for i in range(2, n + 1))
            assert abs(oracle_log_factorial(n) - want) <= EPS
            rep = expected_cost(e.program(len=n), COST_RAND)
            assert rep.exact_value is not None and abs(float(rep.ec_lower) - want) <= EPS, n


def test_criterion_06_entropy_samplers(criterion):
    with criterion(6, "sampleThree / batch", 60.0):
        s3 = get_entry("sampleThree")
        rep = expected_cost(s3.program(), COST_RAND, tol=1e-8)
        assert rep.converged and abs(float(rep.ec_lower) - 8 / 3) <= 1e-6
        r = _certified(s3, {})
        assert r.verdict == "Certified" and r.bound == F(8, 3)

        init = get_entry("batch_init")
        r = _certified(init, {"q": 0})
        assert r.verdict == "Certified" and r.bound == 4 * BATCH_QUERY
        amort = get_entry("batch_query_amortized")
        assert amort.oracle(q=1) == BATCH_QUERY == F(2048, 1215)
        for q in range(1, 7):
            budget = (4 + q) * BATCH_QUERY
            r = _certified(amort, {"q": q})
            assert r.verdict == "Certified" and r.bound == budget, (q, r.verdict)
            ec = expected_cost(amort.program(q=q), COST_RAND).ec_lower
            assert float(ec) <= float(budget) + EPS, (q, ec)


def test_criterion_07_hash_map(criterion):
    with criterion(7, "hash map", 30.0):
        for name in ("hash_insert", "hash_lookup"):
            e = get_entry(name)
            for s in (0, 1, 2):
                rep = expected_cost(e.program(size=s), COST_TICK)
                assert rep.exact_value == 1 + F(s, 2), (name, s, rep.ec_lower)
        e = get_entry("hash_amortized")
        per_insert = 1 + F(4 - 1, 2 * (1 + 1))
        for k in range(1, 5):
            r = _certified(e, {"inserts": k})
            assert r.verdict == "Certified" and r.bound == k * per_insert, (k, r.message)


def test_criterion_08_quicksort(criterion):
    with criterion(8, "quicksort", 120.0):
        qs, ent = get_entry("quicksort"), get_entry("quicksort_entropy")
        for n in range(1, 6):
            bound = float(oracle_quicksort_t(2, n))
            for x in _upper_series(expected_cost(qs.program(len=n), COST_TICK)):
                assert x <= bound + EPS, (n, x, bound)
            for x in _upper_series(expected_cost(ent.program(len=n), COST_RAND)):
                assert x <= oracle_quicksort_entropy(n) + EPS, (n, x)
        for m in (1, 2, 5):
            for n in range(65):
                assert oracle_quicksort_t(m, n) <= quicksort_closed_bound(m, n)


def test_criterion_09_meldable_heap(criterion):
    with criterion(9, "meldable heap", 120.0):
        meld = get_entry("meld")
        for n1, n2 in itertools.product(range(6), repeat=2):
            if n1 + n2 > 5:
                continue
            bound = float(meld_budget(1, n1, n2))
            for x in _upper_series(expected_cost(meld.program(n1=n1, n2=n2), COST_TICK)):
                assert x <= bound + EPS, (n1, n2, x, bound)
        ins, rem = get_entry("heap_insert"), get_entry("heap_remove")
        for n in range(5):
            for x in _upper_series(expected_cost(ins.program(n=n), COST_TICK)):
                assert x <= float(heap_insert_bound(1, n)) + EPS, ("insert", n, x)
        for n in range(6):
            for x in _upper_series(expected_cost(rem.program(n=n), COST_TICK)):
                assert x <= float(heap_remove_bound(1, n)) + EPS, ("remove", n, x)


def _two_list_splits(max_total):
    for n in range(max_total + 1):
        vals = list(range(1, n + 1))
        seen = set()
        for mask in itertools.product((0, 1), repeat=n):
            lists = ([v for v, b in zip(vals, mask) if b == 0], [v for v, b in zip(vals, mask) if b])
            key = tuple(map(tuple, lists))
            if key not in seen:
                seen.add(key)
                yield [list(x) for x in lists]


def test_criterion_10_kway_merge(criterion):
    with criterion(10, "k-way merge", 120.0):
        e = get_entry("kway_merge")
        for lists in _two_list_splits(4):
            n = sum(map(len, lists))
            budget = float(kway_merge_budget(2, n))
            prog = e.program(lists=lists)
            for x in _upper_series(expected_cost(prog, COST_TICK)):
                assert x <= budget + EPS, (lists, x, budget)
            post = e.postcondition(lists=lists)
            assert check_postcondition(reachable_graph(prog), post), lists


def _context_samples():
    def pair(ctx_prog, e):
        d = decompose(ctx_prog)
        if type(d) is not Redex or type(decompose(e)) is not Redex:
            return None
        return d.frames, e
    from hypothesis import strategies as st
    return st.builds(pair, programs(), programs()).filter(lambda x: x is not None)


MONO_DEPTHS = (0, 1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128)


def test_criterion_11_property_suites(criterion):
    with criterion(11, "property suites", 1800.0):
        fails = []

        @settings(max_examples=1000, database=None)
        @given(weights(), kernels(), kernels())
        def monad_laws(mu, f, g):
            assert dbind(dret(0), f) == f(0)
            assert dbind(mu, dret) == mu
            assert dbind(dbind(mu, f), g) == dbind(mu, lambda x: dbind(f(x), g))

        @settings(max_examples=1000, database=None)
        @given(_context_samples())
        def context_invariance(sample):
            for m in (COST_ALL, COST_APP, COST_RAND, COST_TICK, COST_DRAWS):
                assert check_context_invariance(m, [sample]), m.name

        for name, prop in (("monad laws", monad_laws), ("context invariance", context_invariance)):
            try:
                prop()
            except Exception as exc:  # noqa: BLE001
                fails.append(f"{name}: {exc}")

        for e in corpus_entries():
            model = get_model(e.model)
            for p in e.instances():
                label = e.label(p)
                prog = e.program(**p)
                g = Graph(prog)
                series = [float(expected_cost_n(prog, n, model, exact=False, graph=g)) for n in MONO_DEPTHS]
                if any(b < a for a, b in zip(series, series[1:])):
                    fails.append(f"EC_n not monotone on {label}")
                rep = expected_cost(prog, model)
                computed = series + _upper_series(rep)
                ann = e.certificate(**p)
                if ann is not None:
                    cr = certify(prog, ann, model)
                    if cr.certified and max(computed) > float(cr.bound) + EPS:
                        fails.append(f"certified bound {cr.bound} below EC on {label}")
                est = estimate(prog, model, MC_TRIALS, seed=20240)
                if est.timeouts or est.stuck or not est.agrees_with(float(rep.ec_lower)):
                    fails.append(f"monte carlo {est.mean:.6g}+-{est.ci95_halfwidth:.2g} "
                                 f"vs {float(rep.ec_lower):.6g} on {label}")
                term = expected_cost(prog, COST_ALL)
                if not (term.converged and term.residual_mass <= 1e-4):
                    fails.append(f"residual mass {float(term.residual_mass):.3g} on {label}")
        assert not fails, "; ".join(fails)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
