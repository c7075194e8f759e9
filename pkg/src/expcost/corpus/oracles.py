"""Closed-form and recurrence cost oracles for the corpus programs."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache


def oracle_harmonic(n: int) -> Fraction:
    """H(n) = 1 + 1/2 + ... + 1/n, exactly."""
    if n < 1:
        raise ValueError("harmonic number needs n >= 1")
    return sum((Fraction(1, i) for i in range(1, n + 1)), Fraction(0))


def oracle_coupon(n: int) -> Fraction:
    return n * oracle_harmonic(n)


def oracle_log_factorial(n: int) -> float:
    if n < 0:
        raise ValueError("n must be nonnegative")
    return math.fsum(math.log2(i) for i in range(2, n + 1))


def _as_key(m):
    return Fraction(m) if isinstance(m, (int, Fraction)) else float(m)


def oracle_quicksort_t(m, n: int):
    """t_m(n) = m*n + (2/n) * sum_{i<n} t_m(i), with t_m(0) = 0."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _qs_t(_as_key(m), n)


@lru_cache(maxsize=None)
def _qs_table(m, n: int) -> tuple:
    t = [m * 0]
    acc = m * 0
    for j in range(1, n + 1):
        v = m * j + (acc * 2) / j
        t.append(v)
        acc += v
    return tuple(t)


def _qs_t(m, n):
    # grow the table in chunks so repeated calls share work
    size = max(16, 1 << (n.bit_length()))
    return _qs_table(m, size)[n]


def quicksort_closed_bound(m, n: int):
    """(n+1) * sum_{i=1..n} 2m/(i+1), which dominates t_m(n)."""
    m = _as_key(m)
    return (n + 1) * sum((2 * m / (i + 1) for i in range(1, n + 1)), m * 0)


@lru_cache(maxsize=None)
def _entropy_table(n: int) -> tuple:
    e = [0.0]
    acc = 0.0
    for j in range(1, n + 1):
        v = math.log2(j) + 2.0 * acc / j
        e.append(v)
        acc += v
    return tuple(e)


def oracle_quicksort_entropy(n: int) -> float:
    """e(n) = log2 n + (2/n) * sum_{i<n} e(i), with e(0) = 0."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return _entropy_table(max(16, 1 << n.bit_length()))[n]


def oracle_meld(k, n: int):
    """Credit reserved for a meldable heap of size n with comparator cost k."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return 0
    lg = n.bit_length() - 1 if n & (n - 1) == 0 else math.log2(n)
    return 2 * k * (1 + lg)


def meld_budget(k, n1: int, n2: int):
    return k + oracle_meld(k, n1) + oracle_meld(k, n2)


def heap_insert_bound(k, n: int):
    return k + oracle_meld(k, n)


def heap_remove_bound(k, n: int):
    return k + 2 * oracle_meld(k, n)


def kway_merge_budget(k_lists: int, n_total: int, cmp_cost=1):
    return (k_lists + n_total) * heap_insert_bound(cmp_cost, k_lists) + heap_remove_bound(cmp_cost, 0)


BATCH_QUERY = Fraction(256 * 8, 243 * 5)
BATCH_PREFETCH = Fraction(2048, 243)


def oracle_op_pair(n: int) -> Fraction:
    return Fraction(3 * n, 4) + Fraction(1, 4)


def oracle_op_pair_literal(n: int) -> Fraction:
    # reading op as (tick !l or l <- 0); l <- !l + 1 literally
    return Fraction(3 * n, 4) + Fraction(1, 2)


def oracle_hash_insert(size: int, buckets: int = 2) -> Fraction:
    return 1 + Fraction(size, buckets)


def oracle_hash_amortized(max_size: int, buckets: int = 2) -> Fraction:
    return 1 + Fraction(max_size - 1, 2 * buckets)
