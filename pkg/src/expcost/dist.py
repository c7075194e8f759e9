"""Finite-support discrete subdistributions with exact rational weights."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Iterator, TypeVar

T = TypeVar("T", bound=Hashable)
U = TypeVar("U", bound=Hashable)

Prob = Fraction

ONE = Fraction(1)
ZERO = Fraction(0)


class Dist:
    """A subdistribution: finite map from outcomes to strictly positive rationals.

    Weights sum to at most one. Instances are immutable; zero weights are never
    stored, so iterating the support is canonical (insertion order of the
    constructing operation).
    """

    __slots__ = ("_w",)

    def __init__(self, weights: dict | Iterable[tuple] = ()):
        w: dict = {}
        items = weights.items() if isinstance(weights, dict) else weights
        for a, p in items:
            p = Fraction(p)
            if p < 0:
                raise ValueError(f"negative weight {p} for {a!r}")
            if p:
                w[a] = w.get(a, ZERO) + p
        if sum(w.values(), ZERO) > 1:
            raise ValueError("total mass exceeds 1")
        self._w = w

    @classmethod
    def _trusted(cls, w: dict) -> Dist:
        d = cls.__new__(cls)
        d._w = w
        return d

    # -- monad structure -------------------------------------------------

    @classmethod
    def ret(cls, a) -> Dist:
        return cls._trusted({a: ONE})

    @classmethod
    def empty(cls) -> Dist:
        return cls._trusted({})

    @classmethod
    def uniform(cls, outcomes: Iterable) -> Dist:
        outs = list(outcomes)
        if not outs:
            return cls.empty()
        p = Fraction(1, len(outs))
        w: dict = {}
        for a in outs:
            w[a] = w.get(a, ZERO) + p
        return cls._trusted(w)

    def bind(self, f: Callable[[object], Dist]) -> Dist:
        out: dict = {}
        for a, p in self._w.items():
            for b, q in f(a)._w.items():
                out[b] = out.get(b, ZERO) + p * q
        return Dist._trusted(out)

    __rshift__ = bind

    def map(self, f: Callable) -> Dist:
        return self.bind(lambda a: Dist.ret(f(a)))

    # -- queries ---------------------------------------------------------

    def mass(self) -> Prob:
        return sum(self._w.values(), ZERO)

    def expectation(self, rv: Callable[[object], float], exact: bool = False):
        """Sum of ``p * rv(a)`` over the support.

        With ``exact`` the random variable must be rational-valued and the
        result is a Fraction; otherwise the terms are summed in double
        precision with ``math.fsum``.
        """
        if exact:
            return sum((p * Fraction(rv(a)) for a, p in self._w.items()), ZERO)
        return math.fsum(float(p) * float(rv(a)) for a, p in self._w.items())

    def __getitem__(self, a) -> Prob:
        return self._w.get(a, ZERO)

    def __iter__(self) -> Iterator:
        return iter(self._w)

    def __len__(self) -> int:
        return len(self._w)

    def __contains__(self, a) -> bool:
        return a in self._w

    def items(self):
        return self._w.items()

    def support(self) -> list:
        return list(self._w)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dist):
            return NotImplemented
        return self._w == other._w

    def __hash__(self):
        return hash(frozenset(self._w.items()))

    def __repr__(self) -> str:
        body = ", ".join(f"{a!r}: {p}" for a, p in self._w.items())
        return "Dist({" + body + "})"


def dret(a) -> Dist:
    return Dist.ret(a)


def dbind(mu: Dist, f: Callable[[object], Dist]) -> Dist:
    return mu.bind(f)


def mass(mu: Dist) -> Prob:
    return mu.mass()


def expectation(mu: Dist, rv: Callable[[object], float], exact: bool = False):
    return mu.expectation(rv, exact=exact)


def uniform(outcomes: Iterable) -> Dist:
    return Dist.uniform(outcomes)
