"""The independence heuristic G(a, b) and the correlation ratio T/G."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import mpmath

from .errors import ExactOverflowPolicy, InvalidMargins
from .margins import BarvinokParams, MarginPair

EXACT_CELL_LIMIT = 400
_MP_DPS = 40


def log_multiset_count(k: int, s: int) -> float:
    """log C(s+k-1, k-1): multisets of size ``s`` from ``k`` kinds."""
    if k < 1 or s < 0:
        raise ValueError("need k >= 1 and s >= 0")
    j, t = min(k - 1, s), max(k - 1, s)
    if j <= 64:
        # short product, no cancellation
        return math.fsum(math.log1p(t / i) for i in range(1, j + 1))
    return float(log_multiset_count_mp(k, s))


def log_multiset_count_mp(k: int, s: int):
    with mpmath.workdps(_MP_DPS):
        return +(mpmath.loggamma(s + k) - mpmath.loggamma(k) - mpmath.loggamma(s + 1))


@dataclass(frozen=True)
class HeuristicValue:
    log_value: float
    margins: MarginPair
    exact: Optional[Fraction] = None


def log_heuristic_mp(margins: MarginPair):
    """log G in extended precision (mpmath), grouping equal margins."""
    m, n, N = margins.m, margins.n, margins.total
    with mpmath.workdps(_MP_DPS):
        lg = mpmath.loggamma
        acc = mpmath.mpf(0)
        for a, mult in Counter(margins.rows).items():
            acc += mult * (lg(a + n) - lg(n) - lg(a + 1))
        for b, mult in Counter(margins.cols).items():
            acc += mult * (lg(b + m) - lg(m) - lg(b + 1))
        acc -= lg(N + m * n) - lg(m * n) - lg(N + 1)
        return +acc


def exact_heuristic(margins: MarginPair) -> Fraction:
    m, n, N = margins.m, margins.n, margins.total
    num = math.prod(math.comb(a + n - 1, n - 1) for a in margins.rows)
    num *= math.prod(math.comb(b + m - 1, m - 1) for b in margins.cols)
    return Fraction(num, math.comb(N + m * n - 1, m * n - 1))


def independence_heuristic(
    margins: MarginPair, mode: str = "log", exact_cell_limit: int = EXACT_CELL_LIMIT
) -> HeuristicValue:
    if not isinstance(margins, MarginPair):
        raise InvalidMargins("expected a MarginPair")
    if mode not in ("log", "exact"):
        raise ValueError(f"mode must be 'log' or 'exact', got {mode!r}")
    log_value = float(log_heuristic_mp(margins))
    exact = None
    if mode == "exact":
        if margins.m * margins.n > exact_cell_limit:
            raise ExactOverflowPolicy(
                f"exact mode refused for {margins.m}x{margins.n} > {exact_cell_limit} cells"
            )
        exact = exact_heuristic(margins)
    return HeuristicValue(log_value, margins, exact)


def log_fraction(q: Fraction) -> float:
    with mpmath.workdps(30):
        return float(mpmath.log(q.numerator) - mpmath.log(q.denominator))


def margin_event_logs(margins: MarginPair) -> tuple[float, float, float]:
    """(log|R_n(a)|, log|C_m(b)|, log|S_N|) for the uniform-table picture."""
    m, n = margins.m, margins.n
    log_r = math.fsum(log_multiset_count(n, a) for a in margins.rows)
    log_c = math.fsum(log_multiset_count(m, b) for b in margins.cols)
    log_s = log_multiset_count(m * n, margins.total)
    return log_r, log_c, log_s


@dataclass(frozen=True)
class CorrelationReport:
    log_T: float
    log_G: float
    log_ratio: float
    normalized: Optional[float] = None
    source: str = "exact"
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"log_T": self.log_T, "log_G": self.log_G, "log_ratio": self.log_ratio,
               "source": self.source}
        if self.normalized is not None:
            out["normalized"] = self.normalized
        return out


def correlation_ratio(
    margins: MarginPair,
    log_T: Optional[float] = None,
    params: Optional[BarvinokParams] = None,
    surrogate: bool = False,
) -> CorrelationReport:
    """log(T/G).  Pass ``log_T`` (e.g. g(Z)) when exact counting is out of reach."""
    if log_T is None:
        from .exact_count import log_count
        log_T = log_count(margins)
        source = "exact"
    else:
        source = "upper-bound surrogate" if surrogate else "supplied"
    log_G = independence_heuristic(margins).log_value
    ratio = log_T - log_G
    normalized = None
    if params is not None:
        normalized = ratio / float(mpmath.power(params.n, 1 + params.delta))
    return CorrelationReport(log_T, log_G, ratio, normalized, source)
