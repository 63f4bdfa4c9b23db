"""Typical tables: the maximizer of g(X) = sum f(x_ij) over the transportation polytope.

First-order optimality gives log(1 + 1/z_ij) = lam_i + mu_j, so
z_ij = 1/expm1(lam_i + mu_j).  ``solve_typical`` finds the duals by exact
alternating row/column updates.  ``solve_block_typical`` exploits the
three-value symmetry of Barvinok margins and solves a 1-d problem in
extended precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import mpmath
import numpy as np

from .errors import DegenerateMargin, DomainError, InfeasibleBlock, NoConvergence, ZeroTotal
from .kernels import update_rows
from .margins import BarvinokParams, MarginPair

TOL_MARGIN = 1e-10
TOL_DUAL = 1e-8
MAX_ITER = 10_000


def f_entry(x: float) -> float:
    """f(x) = (x+1) log(x+1) - x log x, with f(0) = 0."""
    if x < 0:
        raise DomainError(f"f is defined on x >= 0, got {x}")
    if x == 0:
        return 0.0
    return math.log1p(x) + x * math.log1p(1.0 / x)


def f_vec(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("f is defined on x >= 0")
    out = np.zeros_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = np.log1p(xp) + xp * np.log1p(1.0 / xp)
    return out


def f_prime(x):
    return np.log1p(1.0 / np.asarray(x, dtype=float))


def f_mp(x):
    x = mpmath.mpf(x)
    if x == 0:
        return mpmath.mpf(0)
    return (x + 1) * mpmath.log(x + 1) - x * mpmath.log(x)


@dataclass(frozen=True)
class RealTable:
    entries: np.ndarray
    margins: MarginPair

    def margin_residual(self) -> float:
        """Largest relative deviation of a row or column sum from its margin."""
        return margin_residual(self.entries, self.margins)


def margin_residual(X: np.ndarray, margins: MarginPair) -> float:
    worst = 0.0
    for sums, target in ((X.sum(axis=1), margins.rows), (X.sum(axis=0), margins.cols)):
        t = np.asarray(target, dtype=float)
        err = np.abs(sums - t) / np.maximum(t, 1.0)
        worst = max(worst, float(err.max()))
    return worst


def g_objective(X) -> float:
    """g(X) = sum f(x_ij), summed with math.fsum."""
    entries = X.entries if isinstance(X, RealTable) else np.asarray(X, dtype=float)
    return math.fsum(f_vec(entries).ravel())


def independence_table(margins: MarginPair) -> RealTable:
    """The rank-one table w_ij = a_i b_j / N."""
    if margins.total == 0:
        raise ZeroTotal("independence table needs N > 0")
    a = np.asarray(margins.rows, dtype=float)
    b = np.asarray(margins.cols, dtype=float)
    return RealTable(np.outer(a, b) / margins.total, margins)


@dataclass
class TypicalTableResult:
    Z: RealTable
    row_duals: np.ndarray
    col_duals: np.ndarray
    g_value: float
    iterations: int
    residual: float
    dual_trace: list = field(default_factory=list)
    g_trace: list = field(default_factory=list)

    def stationarity(self) -> float:
        """max |log(1 + 1/z_ij) - lam_i - mu_j| over the positive block."""
        r = np.isfinite(self.row_duals)
        c = np.isfinite(self.col_duals)
        if not r.any() or not c.any():
            return 0.0
        z = self.Z.entries[np.ix_(r, c)]
        lhs = np.log1p(1.0 / z)
        rhs = self.row_duals[r][:, None] + self.col_duals[c][None, :]
        return float(np.max(np.abs(lhs - rhs)))

    def to_dict(self) -> dict:
        return {
            "matrix": self.Z.entries.tolist(),
            "duals": {"rows": _finite_list(self.row_duals), "cols": _finite_list(self.col_duals)},
            "g_value": self.g_value,
            "residual": self.residual,
            "iterations": self.iterations,
        }


def _finite_list(v):
    return [float(x) if np.isfinite(x) else None for x in v]


def _dual_value(lam, mu, a, b) -> float:
    # min over duals of  sum lam a + sum mu b - sum log(1 - exp(-(lam_i + mu_j)))
    t = lam[:, None] + mu[None, :]
    return float(lam @ a + mu @ b - np.sum(np.log(-np.expm1(-t))))


def solve_typical(
    margins: MarginPair,
    tol_margin: float = TOL_MARGIN,
    tol_dual: float = TOL_DUAL,
    max_iter: int = MAX_ITER,
    record: bool = False,
) -> TypicalTableResult:
    if tol_margin <= 0 or tol_dual <= 0:
        raise ValueError("tolerances must be positive")
    rows = np.asarray(margins.rows, dtype=float)
    cols = np.asarray(margins.cols, dtype=float)
    ri = np.flatnonzero(rows > 0)
    ci = np.flatnonzero(cols > 0)
    if ri.size == 0 or ci.size == 0:
        raise DegenerateMargin("all margins are zero")
    a, b = rows[ri], cols[ci]
    m, n = a.size, b.size
    N = float(margins.total)

    lam = np.full(m, 0.5 * math.log1p(m * n / N))
    mu = np.full(n, 0.5 * math.log1p(m * n / N))
    dual_trace, g_trace = [], []
    residual = math.inf
    it = 0
    while it < max_iter:
        it += 1
        update_rows(lam, mu, a)
        if record:
            z = 1.0 / np.expm1(lam[:, None] + mu[None, :])
            dual_trace.append(_dual_value(lam, mu, a, b))
            g_trace.append(math.fsum(f_vec(z).ravel()))
        update_rows(mu, lam, b)
        z = 1.0 / np.expm1(lam[:, None] + mu[None, :])
        if record:
            dual_trace.append(_dual_value(lam, mu, a, b))
            g_trace.append(math.fsum(f_vec(z).ravel()))
        residual = float(np.max(np.abs(z.sum(axis=1) - a) / a))
        residual = max(residual, float(np.max(np.abs(z.sum(axis=0) - b) / b)))
        if residual <= tol_margin:
            break
    else:
        raise NoConvergence(
            f"typical-table solve stopped after {max_iter} sweeps, residual {residual:.3e}",
            residual=residual, iterations=it,
        )

    Z = np.zeros((margins.m, margins.n))
    Z[np.ix_(ri, ci)] = z
    row_duals = np.full(margins.m, math.inf)
    col_duals = np.full(margins.n, math.inf)
    row_duals[ri] = lam
    col_duals[ci] = mu
    result = TypicalTableResult(
        RealTable(Z, margins), row_duals, col_duals, math.fsum(f_vec(z).ravel()),
        it, residual, dual_trace, g_trace,
    )
    if result.stationarity() > tol_dual:
        raise NoConvergence(
            f"stationarity residual {result.stationarity():.3e} above {tol_dual}",
            residual=residual, iterations=it,
        )
    return result


def barvinok_bounds(margins: MarginPair, gamma: float = 1.0, **solve_kw) -> tuple[float, float]:
    """(g(Z) - gamma (m+n) log N, g(Z)); log T lies between for some absolute gamma."""
    upper = solve_typical(margins, **solve_kw).g_value
    N = margins.total
    lower = upper - gamma * (margins.m + margins.n) * (math.log(N) if N > 1 else 0.0)
    return lower, upper


# ---------------------------------------------------------------------------
# symmetry-reduced solve for Barvinok margins
# ---------------------------------------------------------------------------

_BLOCK_DPS = 50


@dataclass(frozen=True)
class BlockTypicalResult:
    z_big_big: float
    z_big_small: float
    z_small_small: float
    g_value: float
    params: BarvinokParams
    g_mp: object = None
    z_mp: tuple = ()
    iterations: int = 0

    def block_residuals(self) -> tuple[float, float]:
        """Relative defects of the two reduced margin equations."""
        p = self.params
        n1, n = p.n_big, p.n
        z11, z12, z22 = self.z_mp or (self.z_big_big, self.z_big_small, self.z_small_small)
        with mpmath.workdps(_BLOCK_DPS):
            r1 = abs(n1 * z11 + n * z12 - p.big) / p.big
            r2 = abs(n1 * z12 + n * z22 - p.small) / p.small
        return float(r1), float(r2)

    def to_dict(self) -> dict:
        return {
            "z_blocks": {"z11": self.z_big_big, "z12": self.z_big_small, "z22": self.z_small_small},
            "g_value": self.g_value,
            "residual": max(self.block_residuals()),
            "iterations": self.iterations,
        }


def solve_block_typical(params: BarvinokParams, tol: float = 1e-30, max_iter: int = 500) -> BlockTypicalResult:
    n1, n = params.n_big, params.n
    A, c = params.big, params.small
    if A <= 0 or c <= 0:
        raise DegenerateMargin("Barvinok margins must be positive")
    with mpmath.workdps(_BLOCK_DPS):
        mp = mpmath.mpf
        n1m, nm = mp(n1), mp(n)
        r = n1m / nm

        if n1 == 0:
            z22 = mp(c) / nm
            g = nm**2 * f_mp(z22)
            return BlockTypicalResult(math.nan, math.nan, float(z22), float(g), params, g, (None, None, z22))

        lo = max(mp(0), (A - nm * c / n1m) / n1m)
        hi = mp(A) / n1m
        if not lo < hi:
            raise InfeasibleBlock(f"empty interval for z11: [{lo}, {hi}]")

        def parts(z11):
            z12 = (A - n1m * z11) / nm
            z22 = (c - n1m * z12) / nm
            return z12, z22

        def psi(z11):
            z12, z22 = parts(z11)
            val = mpmath.log1p(1 / z11) - 2 * mpmath.log1p(1 / z12) + mpmath.log1p(1 / z22)
            d = -1 / (z11 * (z11 + 1)) - 2 * r / (z12 * (z12 + 1)) - r**2 / (z22 * (z22 + 1))
            return val, d

        x = (lo + hi) / 2
        it = 0
        for it in range(1, max_iter + 1):
            val, d = psi(x)
            if val > 0:
                lo = x
            else:
                hi = x
            step = x - val / d
            if not lo < step < hi:
                step = (lo + hi) / 2
            if abs(step - x) <= tol * max(1, abs(x)) or hi - lo <= tol * max(1, abs(x)):
                x = step
                break
            x = step
        else:
            raise NoConvergence("block solve did not converge", iterations=max_iter)

        z11 = x
        z12, z22 = parts(z11)
        if not (z11 > 0 and z12 > 0 and z22 > 0):
            raise InfeasibleBlock("block optimum is not strictly positive")
        g = nm**2 * f_mp(z22) + 2 * nm * n1m * f_mp(z12) + n1m**2 * f_mp(z11)
        return BlockTypicalResult(
            float(z11), float(z12), float(z22), float(g), params, g, (z11, z12, z22), it
        )


def block_from_full(result: TypicalTableResult, params: BarvinokParams) -> tuple[float, float, float]:
    """Read (z11, z12, z22) off a full solve on Barvinok margins."""
    Z = result.Z.entries
    k = params.n_big
    return float(Z[0, 0]), float(Z[0, k]), float(Z[k, k])


def block_spread(result: TypicalTableResult, params: BarvinokParams) -> float:
    """Largest deviation of an entry from its block's first entry."""
    Z = result.Z.entries
    k = params.n_big
    blocks = (Z[:k, :k], Z[:k, k:], Z[k:, :k], Z[k:, k:])
    spread = 0.0
    for blk in blocks:
        if blk.size:
            spread = max(spread, float(np.max(np.abs(blk - blk.flat[0]))))
    return spread
