"""Exact counts of contingency tables with given margins.

``count_tables`` runs a column-by-column dynamic program over the residual
row sums.  Counts are exact: the DP runs modulo several primes below 2**31
and the integer is rebuilt by the Chinese remainder theorem, using enough
primes to exceed an a-priori upper bound on the count.
"""
from __future__ import annotations

import math
from decimal import Decimal
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import mpmath
import numpy as np
from sympy import prevprime

from .errors import InvalidMargins, ResourceLimit
from .kernels import column_transition
from .margins import MarginPair, validate

DEFAULT_STATE_LIMIT = 50_000_000


@dataclass(frozen=True)
class TableCount:
    value: int
    margins: MarginPair

    def log(self) -> float:
        return _log_int(self.value)

    def sci(self, digits: int = 6) -> str:
        return f"{Decimal(self.value):.{digits - 1}e}"


@lru_cache(maxsize=None)
def _prime(k: int) -> int:
    """k-th prime counting down from 2**31."""
    p = 2**31
    for _ in range(k + 1):
        p = prevprime(p)
    return p


def _upper_bound(rows, cols) -> int:
    m, n = len(rows), len(cols)
    by_rows = math.prod(math.comb(a + n - 1, n - 1) for a in rows)
    by_cols = math.prod(math.comb(b + m - 1, m - 1) for b in cols)
    return min(by_rows, by_cols)


def _plan(rows, cols):
    """Orientation and ordering with the smallest DP work estimate."""
    best = None
    for a, b in ((rows, cols), (cols, rows)):
        a = sorted(a, reverse=True)
        b = sorted(b)
        free = a[1:]  # the largest row is implied by the total
        shape = [x + 1 for x in free]
        size = math.prod(shape)
        work = size * sum(x + 1 for x in b[:-1])
        live = 2 * size + 2 * (size // shape[0]) * (max(b[:-1], default=0) + 1)
        key = (work, live)
        if best is None or key < best[0]:
            best = (key, a, b, shape, live)
    return best[1:]


def dp_live_states(margins: MarginPair) -> int:
    """Peak number of DP cells ``count_tables`` would hold for these margins."""
    rows = [x for x in margins.rows if x > 0]
    cols = [x for x in margins.cols if x > 0]
    if len(rows) <= 1 or len(cols) <= 1:
        return 1
    return _plan(rows, cols)[3]


def count_tables(margins: MarginPair, state_limit: int = DEFAULT_STATE_LIMIT) -> TableCount:
    if not isinstance(margins, MarginPair):
        raise InvalidMargins("expected a MarginPair")
    rows = [x for x in margins.rows if x > 0]
    cols = [x for x in margins.cols if x > 0]
    if len(rows) <= 1 or len(cols) <= 1:
        return TableCount(1, margins)

    a, b, shape, live = _plan(rows, cols)
    if live > state_limit:
        raise ResourceLimit(f"DP needs {live} live states, limit is {state_limit}")

    bound = _upper_bound(rows, cols)
    residues, moduli = [], []
    k = 0
    while math.prod(moduli) <= bound:
        p = _prime(k)
        residues.append(_count_mod(a, b, shape, p))
        moduli.append(p)
        k += 1
    return TableCount(_crt(residues, moduli), margins)


def _count_mod(a, b, shape, p) -> int:
    state = np.zeros(math.prod(shape), dtype=np.int64)
    state[-1] = 1  # every free row starts at its full margin
    remaining = sum(a)
    for bj in b[:-1]:
        remaining -= bj
        state = column_transition(state, shape, bj, remaining, p)
    # the last column takes whatever is left
    return int(state.sum()) % p  # entries < 2**31, fewer than 2**32 of them


def _crt(residues, moduli) -> int:
    x, M = 0, 1
    for r, p in zip(residues, moduli):
        t = ((r - x) * pow(M, -1, p)) % p
        x += M * t
        M *= p
    return x


def _log_int(value: int) -> float:
    if value <= 0:
        raise ValueError("log of a nonpositive count")
    with mpmath.workdps(30):
        return float(mpmath.log(mpmath.mpf(value)))


def log_count(margins: MarginPair, state_limit: int = DEFAULT_STATE_LIMIT) -> float:
    return count_tables(margins, state_limit).log()


def enumerate_tables(margins: MarginPair, limit: int) -> Iterator[list[list[int]]]:
    """Yield every table with these margins in row-major lexicographic order.

    Brute force; used as the oracle for :func:`count_tables`.
    """
    if not isinstance(margins, MarginPair):
        raise InvalidMargins("expected a MarginPair")
    if limit < 1:
        raise ValueError("limit must be positive")
    rows, cols = margins.rows, margins.cols
    m, n = len(rows), len(cols)
    table = [[0] * n for _ in range(m)]
    colrem = list(cols)
    emitted = 0

    def fill(i, j, rowrem):
        nonlocal emitted
        if i == m:
            if not any(colrem):
                emitted += 1
                yield [r[:] for r in table]
            return
        if j == n - 1:
            x = rowrem
            if x > colrem[j]:
                return
            table[i][j] = x
            colrem[j] -= x
            yield from fill(i + 1, 0, rows[i + 1] if i + 1 < m else 0)
            colrem[j] += x
            table[i][j] = 0
            return
        for x in range(min(rowrem, colrem[j]) + 1):
            table[i][j] = x
            colrem[j] -= x
            yield from fill(i, j + 1, rowrem - x)
            colrem[j] += x
            if emitted >= limit:
                break
        table[i][j] = 0

    for t in fill(0, 0, rows[0]):
        yield t
        if emitted >= limit:
            return


def brute_force_count(margins: MarginPair) -> int:
    return sum(1 for _ in enumerate_tables(margins, limit=10**12))


__all__ = [
    "TableCount",
    "count_tables",
    "log_count",
    "enumerate_tables",
    "brute_force_count",
    "dp_live_states",
    "validate",
]
