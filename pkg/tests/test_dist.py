from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expcost.dist import Dist, dbind, dret, expectation, mass, uniform
from strategies import kernels, weights

F = Fraction


def test_dret_is_point_mass():
    assert dict(dret(7).items()) == {7: 1}
    assert mass(dret(())) == 1


def test_dbind_relabel():
    d = dbind(uniform([0, 1]), lambda x: dret(x + 1))
    assert d == Dist({1: F(1, 2), 2: F(1, 2)})


def test_dbind_two_level_tree():
    d = dbind(uniform([0, 1]), lambda x: uniform([0, 1]) if x == 0 else dret(9))
    assert d == Dist({0: F(1, 4), 1: F(1, 4), 9: F(1, 2)})


def test_expectation_examples():
    assert expectation(dret(5), lambda a: a * 2) == 10
    assert expectation(uniform(range(4)), lambda a: a) == 1.5
    mu = Dist({1: F(1, 3), 2: F(1, 6)})
    assert expectation(mu, lambda a: 4, exact=True) == 4 * mass(mu)


def test_mass_examples():
    assert mass(Dist.empty()) == 0
    assert mass(uniform(range(7))) == 1


def test_zero_weights_dropped_and_bad_weights_rejected():
    d = Dist({1: 0, 2: F(1, 2)})
    assert d.support() == [2]
    with pytest.raises(ValueError):
        Dist({1: F(-1, 2)})
    with pytest.raises(ValueError):
        Dist({1: F(2, 3), 2: F(2, 3)})


@settings(max_examples=1000)
@given(weights(), kernels(), kernels(), st.integers(-3, 3))
def test_monad_laws(mu, f, g, a):
    assert dbind(dret(a), f) == f(a)
    assert dbind(mu, dret) == mu
    assert dbind(dbind(mu, f), g) == dbind(mu, lambda x: dbind(f(x), g))


@settings(max_examples=300)
@given(weights(), kernels())
def test_bind_never_increases_mass(mu, f):
    assert mass(dbind(mu, f)) <= mass(mu)


@settings(max_examples=300)
@given(weights(), st.integers(0, 5), st.integers(-4, 4), st.integers(0, 4))
def test_linearity(mu, a, b, c):
    f = lambda x: x * x  # noqa: E731
    g = lambda x: abs(x - b) + c  # noqa: E731
    lhs = expectation(mu, lambda x: a * f(x) + g(x), exact=True)
    rhs = a * expectation(mu, f, exact=True) + expectation(mu, g, exact=True)
    assert lhs == rhs
    flt = expectation(mu, lambda x: a * f(x) + g(x))
    assert abs(flt - float(rhs)) < 1e-12 * max(1.0, abs(flt))
