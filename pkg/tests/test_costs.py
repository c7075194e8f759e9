import math

from hypothesis import given, settings
from hypothesis import strategies as st

from expcost.costs import (
    COST_ALL, COST_APP, COST_DRAWS, COST_RAND, COST_TICK, MODELS, check_context_invariance,
    context_invariance_counterexample, cost_all, cost_app, cost_rand, cost_tick,
    expression_model, get_model,
)
from expcost.lang import decompose, parse_program
from expcost.lang.semantics import Redex
from expcost.lang.syntax import BinOp, Int, Load, Loc, Rand, Tick
from strategies import programs


def P(s):
    return parse_program(s)


def test_cost_all():
    m = cost_all()
    assert m(Rand(Int(5))) == 1
    assert m(BinOp("+", Int(1), Rand(Int(5)))) == 1
    assert m(Tick(Int(9))) == 1


def test_cost_app():
    m = cost_app()
    assert m(P("(rec f x = x) 3")) == 1
    assert m(P("1 + ((rec f x = x) 3)")) == 1
    assert m(Rand(Int(5))) == 0


def test_cost_rand():
    m = cost_rand()
    assert m(Rand(Int(7))) == 3 and isinstance(m(Rand(Int(7))), int)
    assert m(Rand(Int(1))) == 1
    assert m(P("(rec f x = x) 3")) == 0
    assert math.isclose(m(Rand(Int(2))), math.log2(3))


def test_cost_tick():
    m = cost_tick()
    assert m(Tick(Int(5))) == 5
    assert m(Tick(Int(-3))) == 3
    assert m(Load(Loc(0))) == 0


def test_registry():
    assert set(MODELS) >= {"all", "app", "rand", "tick"}
    assert get_model("draws") is COST_DRAWS


def _samples():
    """(frames, reducible expression) pairs: frames come from one program's
    decomposition and the plugged expression from another."""
    def pair(ctx_prog, e):
        d = decompose(ctx_prog)
        if type(d) is not Redex or type(decompose(e)) is not Redex:
            return None
        return d.frames, e
    return st.builds(pair, programs(), programs()).filter(lambda x: x is not None)


@settings(max_examples=1000)
@given(_samples())
def test_builtin_models_are_context_invariant(sample):
    for m in (COST_ALL, COST_APP, COST_RAND, COST_TICK, COST_DRAWS):
        assert check_context_invariance(m, [sample])


@settings(max_examples=300)
@given(programs())
def test_costs_nonnegative(e):
    for m in MODELS.values():
        assert m(e) >= 0


def test_size_model_is_not_invariant():
    size_model = expression_model("size", lambda e: e.size())
    e = Tick(Int(1))
    ctx = decompose(BinOp("+", Int(1), Tick(Int(1))))
    sample = (ctx.frames, e)
    assert not check_context_invariance(size_model, [sample])
    assert context_invariance_counterexample(size_model, [sample]) == sample
    assert check_context_invariance(COST_ALL, [sample])
