"""Parameter sweeps behind the ``scan`` and ``figure`` subcommands."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .asymptotics import correlation_exponent, critical_b, phase_point
from .errors import CTablesError
from .heuristic import log_heuristic_mp
from .margins import BarvinokParams, barvinok_margins
from .typical import solve_block_typical, solve_typical

FULL_SOLVER_MAX_N = 500


@dataclass
class ScanRow:
    B: float
    lambda_closed_form: float
    regime: str
    surrogate_normalized: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)


def b_grid(b_min: float, b_max: float, steps: int) -> np.ndarray:
    if steps < 2:
        raise ValueError("need at least 2 grid steps")
    if not 0 < b_min < b_max:
        raise ValueError("need 0 < B-min < B-max")
    return np.linspace(b_min, b_max, steps)


def surrogate(params: BarvinokParams, solver: str = "block") -> float:
    """(g(Z) - log G) / n^(1+delta), g(Z) standing in for log T."""
    margins = barvinok_margins(params)
    with mpmath.workdps(40):
        if solver == "full":
            if params.size > FULL_SOLVER_MAX_N:
                raise ValueError(f"full solver limited to {FULL_SOLVER_MAX_N} rows")
            g = mpmath.mpf(solve_typical(margins).g_value)
        else:
            g = solve_block_typical(params).g_mp
        return float((g - log_heuristic_mp(margins)) / mpmath.power(params.n, 1 + params.delta))


def _scan_point(args):
    B, C, delta, n_list, solver = args
    row = ScanRow(float(B), correlation_exponent(B, C), phase_point(B, C).regime)
    for n in n_list:
        try:
            row.surrogate_normalized[n] = surrogate(BarvinokParams(n, delta, B, C), solver)
        except (CTablesError, ValueError, ArithmeticError) as exc:
            row.errors[n] = f"{type(exc).__name__}: {exc}"
    return row


def scan(C, delta, b_min, b_max, steps, n_list, solver="block", jobs=1) -> list[ScanRow]:
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n-list must be strictly increasing")
    tasks = [(float(B), C, delta, tuple(n_list), solver) for B in b_grid(b_min, b_max, steps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_point, tasks))
    return [_scan_point(t) for t in tasks]


def critical_index(grid, C) -> int:
    """Index of the first grid point at or above B_c."""
    return int(np.searchsorted(grid, critical_b(C)))


def figure_rows(c_list, b_min, b_max, steps) -> list[tuple[float, float, float]]:
    """Long-format (C, B, lambda) samples of the correlation exponent."""
    grid = b_grid(b_min, b_max, steps)
    return [(float(C), float(B), correlation_exponent(float(B), float(C))) for C in c_list for B in grid]


def second_differences(lams) -> np.ndarray:
    lams = np.asarray(lams, dtype=float)
    return lams[2:] - 2 * lams[1:-1] + lams[:-2]


def kink_location(bs, lams) -> float:
    """Grid point where the discrete second difference jumps the most.

    A jump of the second derivative at B_c shows up as the rising edge of
    the second-difference spike, between the two grid points bracketing
    B_c; the spike's maximum itself sits one or two steps later.
    """
    d2 = second_differences(lams)
    edge = int(np.argmax(np.diff(d2)))  # d2[edge+1] - d2[edge] largest
    return float(np.asarray(bs)[edge + 2])


def spike_location(bs, lams) -> float:
    """Grid point with the largest discrete second difference."""
    return float(np.asarray(bs)[1 + int(np.argmax(second_differences(lams)))])
