import json
import math
from fractions import Fraction

from hypothesis import given, settings

from expcost.costs import COST_ALL, COST_APP, COST_RAND, COST_TICK
from expcost.dist import Dist, dbind, dret
from expcost.engine import (
    Graph, VALUE, exec_n, expected_cost, expected_cost_n, reachable_graph, termination_prob,
)
from expcost.lang import Config, parse_program, step
from expcost.lang.semantics import canonicalize, successors
from strategies import any_programs

F = Fraction
COIN = parse_program("(rec coinToss _ = if flip then () else coinToss ()) ()")
LOOP = parse_program("(rec f x = f x) ()")


def naive_ec(cfg, n, model):
    """The cost recurrence evaluated literally, without sharing."""
    if n == 0 or cfg.expr.is_value:
        return 0
    d = step(cfg)
    if d.mass() == 0:
        return 0
    c = model(cfg.expr)
    return c + sum(p * naive_ec(nxt, n - 1, model) for nxt, p in d.items())


def naive_exec(cfg, n):
    if cfg.expr.is_value:
        return dret(cfg.expr)
    if n == 0:
        return Dist.empty()
    return dbind(step(cfg), lambda c: naive_exec(c, n - 1))


def test_exec_examples():
    assert exec_n(Config(COIN, ()), 0).mass() == 0
    for n in (0, 3, 10):
        assert dict(exec_n(parse_program("(1, true)"), n).items()) == {parse_program("(1, true)"): 1}
    d = exec_n(parse_program("flip"), 2)
    assert dict(d.items()) == {parse_program("true"): F(1, 2), parse_program("false"): F(1, 2)}


def test_termination_prob_coin_toss():
    # one round of the loop is four steps
    for k in (1, 2, 3, 5):
        assert termination_prob(COIN, 4 * k) == 1 - F(1, 2 ** k)
    assert termination_prob(parse_program("3"), 0) == 1
    for n in (0, 5, 50):
        assert termination_prob(LOOP, n) == 0


def test_expected_cost_n_examples():
    assert expected_cost_n(parse_program("7"), 20, COST_ALL) == 0
    op = parse_program("let l = ref 4 in let op = fun _ -> if flip then (tick (!l); l <- !l + 1)"
                       " else l <- 0 in op (); op ()")
    assert expected_cost_n(op, 200, COST_TICK) == F(13, 4)


def test_expected_cost_reports():
    rep = expected_cost(COIN, COST_APP, tol=1e-6)
    assert rep.converged and 2 - 1e-6 <= rep.ec_lower <= 2
    assert rep.series[-1].depth <= 256
    t_half = parse_program("let toss = fun l -> if rand 1 = 1 then () else l <- !l + 1 in"
                           " let l = ref 0 in toss l; tick (!l)")
    assert expected_cost(t_half, COST_TICK).ec_lower == F(1, 2)
    three = parse_program("(rec s _ = let v = rand 1 + 2 * rand 1 in if v < 3 then v else s ()) ()")
    assert abs(expected_cost(three, COST_RAND).ec_lower - 8 / 3) < 1e-6
    fy4 = parse_program("tick 0; rand 3; rand 2; rand 1; ()")
    assert math.isclose(expected_cost(fy4, COST_RAND).ec_lower, math.log2(24), abs_tol=1e-12)


def test_diverging_program_not_converged():
    rep = expected_cost(LOOP, COST_ALL, max_depth=1024)
    assert not rep.converged
    assert rep.residual_mass == 1.0


def test_budget_exhaustion_flagged():
    grow = parse_program("(rec f n = f (n + 1)) 0")
    rep = expected_cost(grow, COST_ALL, budget=50)
    assert rep.budget_exhausted and not rep.converged


def test_report_invariants_and_formats():
    rep = expected_cost(COIN, COST_APP)
    prev = None
    for p in rep.series:
        assert abs(p.residual_mass - (1 - p.value_mass - p.stuck_mass)) < 1e-12
        if prev:
            assert p.ec_lower >= prev.ec_lower and p.value_mass >= prev.value_mass
        prev = p
    js = rep.to_json()
    assert js["schema_version"] == 1 and json.loads(json.dumps(js)) == js
    assert rep.to_csv().splitlines()[0] == "depth,ec_lower,value_mass,residual_mass"


def test_stuck_mass_reported():
    rep = expected_cost(parse_program("if flip then 1 else fst 3"), COST_ALL)
    assert rep.stuck_mass == 0.5
    assert rep.stuck_reasons


def test_reachable_graphs():
    g = reachable_graph(COIN)
    assert g.closed and g.topological_order() is None  # one loop through the flip
    assert len(reachable_graph(parse_program("5"))) == 1
    coupons = parse_program("let arr = allocN 2 false in (rec d c = if c = 0 then () else"
                            " let k = rand 1 in if !(arr.[k]) then d c"
                            " else (arr.[k] <- true; d (c - 1))) 2")
    assert reachable_graph(coupons).closed
    for i, k in enumerate(g.kind):
        if k == VALUE:
            assert g.nodes[i].expr.is_value
        for _, p in g.succ[i]:
            assert isinstance(p, Fraction)


@settings(max_examples=150)
@given(any_programs())
def test_memoized_matches_naive(e):
    cfg = Config(e, ())
    for n in range(0, 9):
        for m in (COST_ALL, COST_APP, COST_TICK):
            assert expected_cost_n(cfg, n, m, exact=True) == naive_ec(cfg, n, m)
        assert abs(float(expected_cost_n(cfg, n, COST_RAND)) - float(naive_ec(cfg, n, COST_RAND))) < 1e-12


@settings(max_examples=150)
@given(any_programs())
def test_exec_matches_bind_folding(e):
    for n in (0, 1, 3, 8):
        assert exec_n(e, n) == naive_exec(Config(e, ()), n)


@settings(max_examples=150)
@given(any_programs())
def test_monotone_in_depth(e):
    g = Graph(canonicalize(Config(e, ())))
    last_ec, last_mass = -1, -1
    for n in range(0, 16):
        ec = expected_cost_n(e, n, COST_ALL, exact=True, graph=g)
        mass = termination_prob(e, n, graph=g)
        assert ec >= last_ec and mass >= last_mass
        last_ec, last_mass = ec, mass
