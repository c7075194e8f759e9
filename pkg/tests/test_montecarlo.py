import math
import random

import pytest

from expcost.costs import COST_APP, COST_RAND, COST_TICK
from expcost.lang import parse_program
from expcost.montecarlo import Finished, StuckTrace, Timeout, estimate, sample_trace, trial_rng

COIN = parse_program("(rec coinToss _ = if flip then () else coinToss ()) ()")


def test_value_trace():
    r = sample_trace(parse_program("5"), COST_TICK, random.Random(0))
    assert r == Finished(parse_program("5"), 0.0, 0)


def test_tick_trace():
    r = sample_trace(parse_program("tick 5"), COST_TICK, random.Random(0))
    assert type(r) is Finished and r.cost == 5 and r.value == parse_program("()")


def test_coin_toss_costs_are_even():
    for t in range(50):
        r = sample_trace(COIN, COST_APP, trial_rng(1, t))
        assert type(r) is Finished and r.cost >= 1 and r.cost % 1 == 0


def test_timeout_and_stuck():
    loop = parse_program("(rec f x = f x) ()")
    assert type(sample_trace(loop, COST_APP, random.Random(0), step_limit=100)) is Timeout
    r = sample_trace(parse_program("fst 3"), COST_APP, random.Random(0))
    assert type(r) is StuckTrace and "fst" in r.reason
    with pytest.raises(ValueError):
        sample_trace(loop, COST_APP, random.Random(0), step_limit=0)


def test_estimates_agree_with_known_means():
    est = estimate(COIN, COST_APP, 100_000, seed=7)
    assert est.agrees_with(2.0)
    three = parse_program("(rec s _ = let v = rand 1 + 2 * rand 1 in if v < 3 then v else s ()) ()")
    est3 = estimate(three, COST_RAND, 100_000, seed=7)
    assert abs(est3.mean - 8 / 3) <= 3 * est3.ci95_halfwidth


def test_estimate_fields():
    est = estimate(COIN, COST_APP, 500, seed=3)
    assert est.trials == 500 and est.finished == 500 and est.timeouts == 0
    assert est.ci95_halfwidth == pytest.approx(1.96 * math.sqrt(est.variance / est.trials))
    det = estimate(parse_program("tick 2; tick 3"), COST_TICK, 50)
    assert det.variance == 0 and det.mean == 5


def test_reproducible():
    a = estimate(COIN, COST_APP, 2000, seed=11)
    b = estimate(COIN, COST_APP, 2000, seed=11)
    c = estimate(COIN, COST_APP, 2000, seed=12)
    assert a == b and a.to_json() == b.to_json()
    assert a.mean != c.mean


def test_timeouts_not_in_mean():
    prog = parse_program("if flip then tick 3 else (rec f x = f x) ()")
    est = estimate(prog, COST_TICK, 400, seed=0, step_limit=200)
    assert est.timeouts > 0 and est.finished + est.timeouts == 400
    assert est.mean == 3.0


def test_trials_must_be_positive():
    with pytest.raises(ValueError):
        estimate(COIN, COST_APP, 0)
