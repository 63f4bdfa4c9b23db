"""Invariant suites run by ``ctables verify``.

Each check returns a :class:`Check`; failures are reported, never raised.
Thresholds here are fixed reference values, independent of the solver
tolerances passed in, so a loosened solver shows up as failures.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import asymptotics as asy
from .exact_count import brute_force_count, count_tables, dp_live_states
from .heuristic import independence_heuristic, log_fraction, margin_event_logs
from .margins import BarvinokParams, barvinok_margins, random_margins, validate
from .sweeps import figure_rows, kink_location
from .typical import (
    block_from_full, block_spread, g_objective, independence_table, solve_block_typical,
    solve_typical,
)

FIXTURE_ROWS = (220, 215, 93, 64)
FIXTURE_COLS = (108, 286, 71, 127)
REF_TOL_MARGIN = 1e-10
REF_TOL_DUAL = 1e-8
ENUMERABLE_STATES = 2_000_000


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""
    seconds: float = 0.0


@dataclass
class Config:
    tol_margin: float = 1e-10
    tol_dual: float = 1e-8
    max_iter: int = 10_000
    seed: int = 20200101
    instances: int = 100
    state_limit: int = 50_000_000

    def solve(self, margins):
        return solve_typical(margins, self.tol_margin, self.tol_dual, self.max_iter)


def weak_compositions(total: int, parts: int):
    for cut in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for c in cut:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def sig_round(x: float, digits: int = 4) -> float:
    return float(f"{x:.{digits - 1}e}")


def _timed(name: str, fn: Callable[[], tuple[bool, str]]) -> Check:
    t0 = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # a crashing check is a failing check
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Check(name, ok, detail, time.perf_counter() - t0)


# --- counting ---------------------------------------------------------------

def oracle_equivalence(max_dim=3, max_total=10, cfg=None):
    pairs = bad = 0
    for m in range(1, max_dim + 1):
        for n in range(1, max_dim + 1):
            for N in range(max_total + 1):
                for r in weak_compositions(N, m):
                    for c in weak_compositions(N, n):
                        M = validate(r, c)
                        pairs += 1
                        if count_tables(M).value != brute_force_count(M):
                            bad += 1
    return bad == 0, f"{pairs} margin pairs, {bad} mismatches"


def symmetry_checks(cfg: Config):
    rng = np.random.default_rng(cfg.seed)
    bad = 0
    for _ in range(40):
        M = random_margins(rng, 4, 4, 8)
        t = count_tables(M).value
        perm = validate(rng.permutation(M.rows), rng.permutation(M.cols))
        if count_tables(M.transpose()).value != t or count_tables(perm).value != t:
            bad += 1
    return bad == 0, f"{bad} violations in 40 instances"


def count_fixture(cfg: Config):
    M = validate(FIXTURE_ROWS, FIXTURE_COLS)
    T = count_tables(M, cfg.state_limit).value
    G = math.exp(independence_heuristic(M).log_value)
    ok = sig_round(T) == 1.226e15 and sig_round(G) == 1.211e15
    return ok, f"T={T} G={G:.6e}"


def heuristic_agreement(cfg: Config):
    rng = np.random.default_rng(cfg.seed + 1)
    worst_exact = worst_ident = 0.0
    for _ in range(cfg.instances):
        M = random_margins(rng, 8, 8, 25)
        h = independence_heuristic(M, mode="exact")
        worst_exact = max(worst_exact, abs(log_fraction(h.exact) - h.log_value))
        lr, lc, ls = margin_event_logs(M)
        worst_ident = max(worst_ident, abs(lr + lc - ls - h.log_value))
    ok = worst_exact <= 1e-10 and worst_ident <= 1e-9
    return ok, f"exact/log {worst_exact:.2e}, identity {worst_ident:.2e}"


# --- typical ------------------------------------------------------------------

def typical_certificates(cfg: Config):
    rng = np.random.default_rng(cfg.seed + 2)
    worst_res = worst_stat = 0.0
    gw_viol = ub_viol = counted = 0
    for _ in range(cfg.instances):
        M = random_margins(rng, 8, 8, 50)
        res = cfg.solve(M)
        worst_res = max(worst_res, res.Z.margin_residual())
        worst_stat = max(worst_stat, res.stationarity())
        if res.g_value < g_objective(independence_table(M)) - 1e-9:
            gw_viol += 1
        if dp_live_states(M) <= ENUMERABLE_STATES:
            counted += 1
            if count_tables(M).log() > res.g_value + 1e-9:
                ub_viol += 1
    ok = worst_res <= REF_TOL_MARGIN and worst_stat <= REF_TOL_DUAL and gw_viol == 0 and ub_viol == 0
    return ok, (f"margin {worst_res:.2e}, dual {worst_stat:.2e}, g(Z)<g(W): {gw_viol}, "
                f"logT>g(Z): {ub_viol}/{counted}")


def entropy_vs_heuristic(cfg: Config):
    rng = np.random.default_rng(cfg.seed + 2)
    worst = math.inf
    for _ in range(cfg.instances):
        M = random_margins(rng, 8, 8, 50)
        gap = g_objective(independence_table(M)) - independence_heuristic(M).log_value
        worst = min(worst, gap)
    return worst >= -1e-9, f"min g(W) - log G = {worst:.3e}"


def cross_solver(cfg: Config, ns=(20, 50), deltas=(0.3, 0.5, 0.7), Cs=(0.5, 1.0, 2.0)):
    worst_z = worst_g = worst_spread = 0.0
    for n, d, C in itertools.product(ns, deltas, Cs):
        for B in (1.0, 2.0, asy.critical_b(C), 4.0):
            p = BarvinokParams(n, d, B, C)
            full = cfg.solve(barvinok_margins(p))
            blk = solve_block_typical(p)
            zf = block_from_full(full, p)
            zb = (blk.z_big_big, blk.z_big_small, blk.z_small_small)
            worst_z = max(worst_z, max(abs(x - y) for x, y in zip(zf, zb)))
            worst_g = max(worst_g, abs(full.g_value - blk.g_value) / abs(blk.g_value))
            worst_spread = max(worst_spread, block_spread(full, p))
    ok = worst_z <= 1e-7 and worst_g <= 1e-6 and worst_spread <= 1e-8
    return ok, f"dz {worst_z:.2e}, dg/g {worst_g:.2e}, block spread {worst_spread:.2e}"


# --- asymptotics ----------------------------------------------------------

def derivative_structure(cfg=None):
    msgs, ok = [], True
    for C in (0.5, 1.0, 2.0):
        bc = asy.critical_b(C)
        first, _ = asy.correlation_exponent_derivatives(bc + 1e-6, C)
        # second derivative just above B_c against its closed-form limit
        _, second = asy.correlation_exponent_derivatives(bc + 1e-12, C)
        target = 2 * C / (bc * (bc * C + 1))
        ok &= abs(first) < 1e-5 * C and abs(second - target) <= 1e-10
        worst_fd = 0.0
        for B in np.linspace(bc + 0.1, 10, 50):
            h = 1e-4
            fd = (asy.correlation_exponent(B + h, C) - asy.correlation_exponent(B - h, C)) / (2 * h)
            worst_fd = max(worst_fd, abs(fd - asy.correlation_exponent_derivatives(B, C)[0]))
        ok &= worst_fd <= 1e-7
        msgs.append(f"C={C}: d1={first:.1e} fd={worst_fd:.1e}")
    return ok, "; ".join(msgs)


def exponent_shape(cfg=None):
    ok = True
    for C in (0.5, 1.0, 2.0):
        bc = asy.critical_b(C)
        for k in range(2, 9):
            eps = 10.0**-k
            ok &= abs(asy.correlation_exponent(bc + eps, C) - asy.correlation_exponent(bc - eps, C)) < 10 * eps
        grid = np.linspace(bc + 1e-3, bc + 8, 100)
        vals = [asy.correlation_exponent(B, C) for B in grid]
        ok &= all(b > a for a, b in zip(vals, vals[1:])) and vals[0] > 0
        for B in np.linspace(bc + 0.01, 10, 60):
            gap = asy.second_order_coefficient(bc, C) - asy.second_order_coefficient(B, C)
            gap_sub = float(asy._lin_coef_sub(bc, C) - asy._lin_coef_sub(B, C))
            ok &= abs(gap_sub - asy.correlation_exponent(B, C)) <= 1e-12 and gap == 0
        sub = [asy.second_order_coefficient(B, C) for B in np.linspace(0.1, bc, 50)]
        ok &= all(b > a for a, b in zip(sub, sub[1:]))
    return ok, "continuity, monotonicity, coefficient gap"


def expansion_orders(cfg=None, ns=(10**3, 10**4, 10**5)):
    cases = [("entropy", BarvinokParams(ns[0], 0.7, 1.0, 1.0)),
             ("ih", BarvinokParams(ns[0], 0.5, 2.0, 1.0)),
             ("main", BarvinokParams(ns[0], 0.5, 4.0, 1.0))]
    msgs, ok = [], True
    for kind, p in cases:
        v = asy.verify_expansion(kind, p, list(ns))
        ok &= v.bounded
        msgs.append(f"{kind} ratio {v.ratio:.2f}")
    return ok, "; ".join(msgs)


def corner_rates(cfg=None, ns=(10**3, 10**4, 10**5, 10**6)):
    C, d = 1.0, 0.5
    bc = asy.critical_b(C)
    _, E = asy.constants_DE(2.0, C)
    sub, sup = [], []
    for n in ns:
        z2 = solve_block_typical(BarvinokParams(n, d, 2.0, C)).z_big_big
        z4 = solve_block_typical(BarvinokParams(n, d, 4.0, C)).z_big_big
        sub.append(abs(z2 - E) * n ** (1 - d))
        sup.append(abs(n ** (d - 1) * z4 - C * (4.0 - bc)) * n ** (1 - d))
    r1, r2 = asy.bounded_ratio(sub), asy.bounded_ratio(sup)
    return r1 <= 20 and r2 <= 20, f"B=2 ratio {r1:.2f}, B=4 ratio {r2:.2f}"


def phase_transition(cfg=None, ns=(10**4, 10**5, 10**6)):
    from .sweeps import surrogate
    C, d = 1.0, 0.5
    msgs, ok = [], True
    for B in (3.0, 2.0):
        lam = asy.correlation_exponent(B, C)
        ks = []
        for n in ns:
            s = surrogate(BarvinokParams(n, d, B, C))
            ks.append(abs(s - lam) / (n ** (d - 1) + n ** (-d) * math.log(n)))
        r = asy.bounded_ratio(ks)
        ok &= r <= 5
        msgs.append(f"B={B}: lambda={lam:.6f} K in [{min(ks):.3f}, {max(ks):.3f}]")
    return ok, "; ".join(msgs)


def figure_shape(cfg=None, b_min=0.05, b_max=6.0, steps=600):
    rows = figure_rows((0.5, 1.0, 2.0), b_min, b_max, steps)
    step = (b_max - b_min) / (steps - 1)
    ok, msgs = True, []
    for C in (0.5, 1.0, 2.0):
        pts = [(B, lam) for c, B, lam in rows if c == C]
        bc = asy.critical_b(C)
        below = [lam for B, lam in pts if B <= bc]
        above = [lam for B, lam in pts if B > bc]
        ok &= all(v == 0 for v in below)
        ok &= all(b > a for a, b in zip([0.0] + above, above))
        kink = kink_location([B for B, _ in pts], [lam for _, lam in pts])
        ok &= abs(kink - bc) <= step
        msgs.append(f"C={C}: kink {kink:.4f} vs B_c {bc:.4f}")
    return ok, "; ".join(msgs)


def suite_checks(suite: str, cfg: Config) -> list[tuple[str, Callable]]:
    counting = [
        ("counting: oracle equivalence (m,n<=3, N<=10)", lambda: oracle_equivalence()),
        ("counting: transpose and permutation invariance", lambda: symmetry_checks(cfg)),
        ("counting: 4x4 N=592 fixture (T and G to 4 digits)", lambda: count_fixture(cfg)),
        ("counting: heuristic exact/log agreement and event identity", lambda: heuristic_agreement(cfg)),
    ]
    typical = [
        ("typical: solver certificates, g(Z)>=g(W), log T<=g(Z)", lambda: typical_certificates(cfg)),
        ("typical: g(W) >= log G", lambda: entropy_vs_heuristic(cfg)),
        ("typical: full vs block solver on Barvinok margins", lambda: cross_solver(cfg)),
    ]
    asymptotic = [
        ("asymptotics: derivative structure at B_c", derivative_structure),
        ("asymptotics: continuity, monotonicity, coefficient gap", exponent_shape),
        ("asymptotics: expansion residual orders", expansion_orders),
        ("asymptotics: corner-entry rates", corner_rates),
        ("asymptotics: phase transition surrogate", phase_transition),
        ("asymptotics: figure data shape", figure_shape),
    ]
    table = {"counting": counting, "typical": typical, "asymptotics": asymptotic}
    if suite == "all":
        return counting + typical + asymptotic
    if suite not in table:
        raise ValueError(f"unknown suite {suite!r}")
    return table[suite]


def run_suite(suite: str, cfg: Config | None = None) -> list[Check]:
    cfg = cfg or Config()
    return [_timed(name, fn) for name, fn in suite_checks(suite, cfg)]
