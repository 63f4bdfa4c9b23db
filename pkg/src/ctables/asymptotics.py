"""Closed-form asymptotics for Barvinok margins and residual-order checks.

Coefficients are evaluated with mpmath and rounded to float at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath

from .errors import CriticalPoint, DomainError
from .margins import BarvinokParams, barvinok_margins

_DPS = 40
CRITICAL_EPS = 1e-12


def _f(x):
    x = mpmath.mpf(x)
    if x == 0:
        return mpmath.mpf(0)
    return (x + 1) * mpmath.log(x + 1) - x * mpmath.log(x)


def _bc(C):
    return 1 + mpmath.sqrt(1 + 1 / mpmath.mpf(C))


def critical_b(C: float) -> float:
    """B_c = 1 + sqrt(1 + 1/C)."""
    if not C > 0:
        raise DomainError(f"C must be positive, got {C}")
    with mpmath.workdps(_DPS):
        return float(_bc(C))


@dataclass(frozen=True)
class PhasePoint:
    B: float
    C: float
    B_c: float
    regime: str


def phase_point(B: float, C: float) -> PhasePoint:
    bc = critical_b(C)
    if abs(B - bc) < CRITICAL_EPS:
        regime = "critical"
    elif B < bc:
        regime = "subcritical"
    else:
        regime = "supercritical"
    return PhasePoint(B, C, bc, regime)


def _E_mp(B, C):
    B, C = mpmath.mpf(B), mpmath.mpf(C)
    bc = _bc(C)
    return B**2 * C * (C + 1) / ((bc - B) * (bc + B - 2))


def _D_mp(B, C):
    B, C = mpmath.mpf(B), mpmath.mpf(C)
    E = _E_mp(B, C)
    return (_f(E) + E * mpmath.log((1 + C) * (B * C) ** 2 / (C * (B * C + 1) ** 2))
            - B**2 * C / (2 * (C + 1)))


def constants_DE(B: float, C: float) -> tuple[float, float]:
    """(D, E) of the subcritical expansion; E is the limit of the corner entry."""
    if not (B > 0 and C > 0):
        raise DomainError("B and C must be positive")
    with mpmath.workdps(_DPS):
        if B >= _bc(C):
            raise DomainError(f"D, E need B < B_c = {float(_bc(C))}, got B = {B}")
        return float(_D_mp(B, C)), float(_E_mp(B, C))


def _lin_coef_sub(B, C):
    # 2 f(BC) - BC log(1 + 1/C)
    B, C = mpmath.mpf(B), mpmath.mpf(C)
    return 2 * _f(B * C) - B * C * mpmath.log1p(1 / C)


def second_order_coefficient(B: float, C: float) -> float:
    """n^(1+delta) coefficient of log T, with B frozen at B_c above the transition."""
    with mpmath.workdps(_DPS):
        bc = _bc(C)
        return float(_lin_coef_sub(min(mpmath.mpf(B), bc), C))


def correlation_exponent(B: float, C: float) -> float:
    """Limit of log(T/G) / n^(1+delta): zero up to B_c, positive beyond."""
    if not (B > 0 and C > 0):
        raise DomainError("B and C must be positive")
    with mpmath.workdps(_DPS):
        return float(_lambda_mp(B, C))


def _lambda_mp(B, C):
    B, C = mpmath.mpf(B), mpmath.mpf(C)
    bc = _bc(C)
    if B <= bc:
        return mpmath.mpf(0)
    return C * (B - bc) * mpmath.log1p(1 / C) - 2 * (_f(B * C) - _f(bc * C))


def correlation_exponent_derivatives(B: float, C: float) -> tuple[float, float]:
    """First and second B-derivatives of the supercritical branch."""
    with mpmath.workdps(_DPS):
        Bm, Cm = mpmath.mpf(B), mpmath.mpf(C)
        if not Bm > _bc(Cm):
            raise DomainError("derivatives are taken on the supercritical branch B > B_c")
        first = Cm * mpmath.log1p(1 / Cm) - 2 * Cm * mpmath.log1p(1 / (Bm * Cm))
        second = 2 * Cm / (Bm * (Bm * Cm + 1))
        return float(first), float(second)


# ---------------------------------------------------------------------------
# expansion reports
# ---------------------------------------------------------------------------

_ORDERS: dict[str, Callable] = {
    "n^{3δ−1}+n log n": lambda n, d: n ** (3 * d - 1) + n * mpmath.log(n),
    "n^{3δ−1}+n": lambda n, d: n ** (3 * d - 1) + n,
    "n^{2δ}+n log n": lambda n, d: n ** (2 * d) + n * mpmath.log(n),
    "n^{2δ}+n": lambda n, d: n ** (2 * d) + n,
}


@dataclass
class ExpansionReport:
    n: int
    predicted_terms: list  # (label, coefficient, value at n)
    claimed_error_order: str
    delta: float
    computed: Optional[float] = None
    _total_mp: object = field(default=None, repr=False)
    _computed_mp: object = field(default=None, repr=False)

    @property
    def predicted_total(self) -> float:
        return float(self._total_mp)

    @property
    def residual(self) -> Optional[float]:
        if self._computed_mp is None:
            return None
        with mpmath.workdps(_DPS):
            return float(self._computed_mp - self._total_mp)

    def error_scale(self) -> float:
        with mpmath.workdps(_DPS):
            return float(_ORDERS[self.claimed_error_order](mpmath.mpf(self.n), mpmath.mpf(self.delta)))

    @property
    def normalized_residual(self) -> Optional[float]:
        r = self.residual
        return None if r is None else r / self.error_scale()

    def fill(self, computed_mp) -> None:
        self._computed_mp = computed_mp
        self.computed = float(computed_mp)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "predicted_terms": [
                {"order": lab, "coefficient": coef, "value": val} for lab, coef, val in self.predicted_terms
            ],
            "predicted_total": self.predicted_total,
            "computed": self.computed,
            "residual": self.residual,
            "normalized_residual": self.normalized_residual,
            "claimed_error_order": self.claimed_error_order,
        }


def _report(n, delta, terms, order) -> ExpansionReport:
    with mpmath.workdps(_DPS):
        nm, d = mpmath.mpf(n), mpmath.mpf(delta)
        powers = {"n^2": nm**2, "n^{1+δ}": nm ** (1 + d), "n^{2δ}": nm ** (2 * d)}
        out, total = [], mpmath.mpf(0)
        for label, coef in terms:
            val = coef * powers[label]
            total += val
            out.append((label, float(coef), float(val)))
        return ExpansionReport(int(n), out, order, float(delta), None, total)


def _check_regime(B, C, at_critical):
    bc = _bc(C)
    if abs(mpmath.mpf(B) - bc) < CRITICAL_EPS:
        if at_critical == "raise":
            raise CriticalPoint(f"B = {B} is within {CRITICAL_EPS} of B_c")
        return "supercritical"
    return "subcritical" if B < bc else "supercritical"


def main_theorem_prediction(
    params: BarvinokParams, n: Optional[int] = None, at_critical: str = "raise"
) -> ExpansionReport:
    """Predicted terms of log T for Barvinok margins (both regimes).

    ``at_critical="supercritical"`` routes B == B_c to the supercritical
    coefficients instead of raising.
    """
    n = params.n if n is None else n
    B, C = params.B, params.C
    with mpmath.workdps(_DPS):
        regime = _check_regime(B, C, at_critical)
        Cm = mpmath.mpf(C)
        if regime == "subcritical":
            terms = [("n^2", _f(Cm)), ("n^{1+δ}", _lin_coef_sub(B, C)), ("n^{2δ}", _D_mp(B, C))]
            order = "n^{3δ−1}+n log n"
        else:
            terms = [("n^2", _f(Cm)), ("n^{1+δ}", _lin_coef_sub(_bc(Cm), C))]
            order = "n^{2δ}+n log n"
        return _report(n, params.delta, terms, order)


def typical_entropy_prediction(
    params: BarvinokParams, n: Optional[int] = None, at_critical: str = "raise"
) -> ExpansionReport:
    """Predicted terms of g(Z); same coefficients, sharper error order O(n)."""
    rep = main_theorem_prediction(params, n, at_critical)
    rep.claimed_error_order = rep.claimed_error_order.replace(" log n", "")
    return rep


def ih_expansion_prediction(
    params: BarvinokParams, n: Optional[int] = None, as_printed: bool = False
) -> ExpansionReport:
    """Predicted terms of log G for Barvinok margins.

    The n^(1+delta) coefficient is 2 f(BC) - BC log(1 + 1/C); ``as_printed``
    swaps in the single-f(BC) variant for comparison.
    """
    n = params.n if n is None else n
    with mpmath.workdps(_DPS):
        B, C = mpmath.mpf(params.B), mpmath.mpf(params.C)
        lin = (_f(B * C) - B * C * mpmath.log1p(1 / C)) if as_printed else _lin_coef_sub(B, C)
        third = (2 * mpmath.log(B * C + 1) - mpmath.log(C + 1)
                 + (2 - 4 * B + B**2) * C / (2 * (1 + C)))
        terms = [("n^2", _f(C)), ("n^{1+δ}", lin), ("n^{2δ}", third)]
        return _report(n, params.delta, terms, "n^{3δ−1}+n log n")


# ---------------------------------------------------------------------------
# verification harness
# ---------------------------------------------------------------------------

BOUNDED_RATIO = 20.0


@dataclass
class VerificationResult:
    kind: str
    params: BarvinokParams
    reports: list
    ratio: float
    bounded: bool

    def rows(self) -> list[dict]:
        return [
            {"n": r.n, "predicted_total": r.predicted_total, "computed": r.computed,
             "residual": r.residual, "normalized_residual": r.normalized_residual}
            for r in self.reports
        ]


def _computed_value(kind: str, p: BarvinokParams):
    if kind == "ih":
        from .heuristic import log_heuristic_mp
        return log_heuristic_mp(barvinok_margins(p))
    from .typical import solve_block_typical
    return solve_block_typical(p).g_mp


def verify_expansion(
    kind: str, params: BarvinokParams, n_list: Sequence[int], at_critical: str = "supercritical"
) -> VerificationResult:
    """Fill computed values along ``n_list`` and test normalized-residual boundedness.

    kind: ``main`` (g(Z) against log T's expansion), ``entropy`` (g(Z) against
    its own expansion) or ``ih`` (exact log G against its expansion).
    """
    if kind not in ("main", "entropy", "ih"):
        raise ValueError(f"unknown kind {kind!r}")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly increasing")
    reports = []
    for n in n_list:
        p = params.with_n(n)
        if kind == "main":
            rep = main_theorem_prediction(p, at_critical=at_critical)
        elif kind == "entropy":
            rep = typical_entropy_prediction(p, at_critical=at_critical)
        else:
            rep = ih_expansion_prediction(p)
        rep.fill(_computed_value(kind, p))
        reports.append(rep)
    ratio = bounded_ratio([r.normalized_residual for r in reports])
    return VerificationResult(kind, params, reports, ratio, ratio <= BOUNDED_RATIO)


def bounded_ratio(values: Sequence[float]) -> float:
    """max |v| / min |v|; infinite if some value is exactly zero."""
    mags = [abs(v) for v in values]
    lo = min(mags)
    return math.inf if lo == 0 else max(mags) / lo
