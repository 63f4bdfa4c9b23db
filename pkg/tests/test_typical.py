import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ctables.asymptotics import critical_b
from ctables.errors import DomainError, NoConvergence, ZeroTotal
from ctables.exact_count import log_count
from ctables.margins import BarvinokParams, barvinok_margins, random_margins, validate
from ctables.typical import (
    RealTable, barvinok_bounds, block_from_full, f_entry, f_mp, f_vec, g_objective,
    independence_table, solve_block_typical, solve_typical,
)


def reference_maximizer(M, tol=1e-6, max_steps=200_000):
    """Projected gradient ascent on the affine margin space, started at W.

    Independent of the dual solver: no duals, no root finding.
    """
    X = independence_table(M).entries.copy()

    def g(Y):
        return math.fsum(f_vec(Y).ravel())

    step = 0.5
    for _ in range(max_steps):
        G = np.log1p(1.0 / X)
        P = G - G.mean(axis=1, keepdims=True) - G.mean(axis=0, keepdims=True) + G.mean()
        while step > 1e-14:
            Y = X + step * P
            if (Y > 0).all() and g(Y) >= g(X):
                break
            step /= 2
        if np.abs(Y - X).max() < tol * 1e-3:
            return Y
        X, step = Y, step * 2
    raise AssertionError("reference optimizer did not converge")


def test_f_examples():
    assert f_entry(0) == 0
    assert f_entry(1) == pytest.approx(2 * math.log(2), rel=1e-15)
    assert f_entry(3) == pytest.approx(4 * math.log(4) - 3 * math.log(3), rel=1e-15)
    assert float(f_mp(3)) == pytest.approx(f_entry(3), rel=1e-15)
    with pytest.raises(DomainError):
        f_entry(-1)
    with pytest.raises(DomainError):
        f_vec([1.0, -0.5])


def test_g_objective_examples():
    n, C = 5, 1.7
    assert g_objective(np.full((n, n), C)) == pytest.approx(n * n * f_entry(C), rel=1e-14)
    assert g_objective([[7.0]]) == pytest.approx(f_entry(7.0))
    W = independence_table(validate((2, 2), (2, 2)))
    assert np.allclose(W.entries, 1) and g_objective(W) == pytest.approx(8 * math.log(2))


def test_independence_table_examples():
    assert np.allclose(independence_table(validate((3,), (1, 2))).entries, [[1, 2]])
    assert np.allclose(independence_table(validate((4, 2), (3, 3))).entries, [[2, 2], [1, 1]])
    with pytest.raises(ZeroTotal):
        independence_table(validate((0,), (0,)))


def test_uniform_and_single_row():
    r = solve_typical(validate((6,) * 4, (6,) * 4))
    assert np.allclose(r.Z.entries, 1.5, atol=1e-12)
    r = solve_typical(validate((9,), (2, 3, 4)))
    assert np.allclose(r.Z.entries, [[2, 3, 4]], atol=1e-9)


def test_matches_reference_optimizer():
    M = validate((4, 2, 1), (3, 2, 2))
    ref = reference_maximizer(M)
    r = solve_typical(M)
    assert np.abs(r.Z.entries - ref).max() <= 1e-5
    assert r.g_value >= g_objective(ref) - 1e-9


def test_zero_margins_are_stripped():
    r = solve_typical(validate((0, 4, 2), (3, 0, 3)))
    assert np.all(r.Z.entries[0] == 0) and np.all(r.Z.entries[:, 1] == 0)
    assert r.Z.margin_residual() <= 1e-10
    assert math.isinf(r.row_duals[0])


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_certificates_random(seed):
    M = random_margins(np.random.default_rng(seed), 8, 8, 50)
    r = solve_typical(M)
    assert r.Z.margin_residual() <= 1e-10
    assert r.stationarity() <= 1e-8
    assert r.g_value >= g_objective(independence_table(M)) - 1e-9


def test_dual_objective_is_monotone():
    # iterates are not feasible, so g(Z^t) need not be monotone; the dual is
    rng = np.random.default_rng(8)
    for _ in range(30):
        M = random_margins(rng, 8, 8, 50)
        d = np.array(solve_typical(M, record=True).dual_trace)
        assert np.all(np.diff(d) <= 1e-9 * np.abs(d[1:]))
        assert d[-1] == pytest.approx(solve_typical(M).g_value, rel=1e-8)


def test_no_convergence():
    with pytest.raises(NoConvergence) as info:
        solve_typical(validate((4, 2, 1), (3, 2, 2)), max_iter=1)
    assert info.value.iterations == 1
    with pytest.raises(ValueError):
        solve_typical(validate((1,), (1,)), tol_margin=0)


def test_bounds_sandwich():
    # only the upper side is certified; gamma is an unknown absolute constant
    for M in (validate((5,), (5,)), validate((1, 1), (1, 1)), validate((4, 3, 3), (2, 5, 3))):
        lo, hi = barvinok_bounds(M, gamma=0.5)
        assert log_count(M) <= hi
        assert hi - lo == pytest.approx(0.5 * (M.m + M.n) * math.log(M.total))
    lo, hi = barvinok_bounds(validate((5,), (5,)))
    assert hi == pytest.approx(f_entry(5))
    _, hi = barvinok_bounds(validate((1, 1), (1, 1)))
    assert hi == pytest.approx(4 * f_entry(0.5))


@pytest.mark.parametrize("n,delta,C", [(7, 0.5, 1.0), (30, 0.3, 2.0), (12, 0.7, 0.5)])
def test_block_uniform_at_B1(n, delta, C):
    p = BarvinokParams(n, delta, 1.0, C)
    r = solve_block_typical(p)
    u = p.small / (p.n + p.n_big)
    assert r.z_big_big == pytest.approx(u, rel=1e-12)
    assert r.z_big_small == pytest.approx(u, rel=1e-12)
    assert r.z_small_small == pytest.approx(u, rel=1e-12)


@pytest.mark.parametrize("B", [1.5, 2.0, None, 4.0])
def test_block_matches_full(B):
    C = 1.0
    p = BarvinokParams(40, 0.5, B if B is not None else critical_b(C), C)
    full = solve_typical(barvinok_margins(p))
    blk = solve_block_typical(p)
    zf = block_from_full(full, p)
    assert np.allclose(zf, (blk.z_big_big, blk.z_big_small, blk.z_small_small), atol=1e-8)
    assert full.g_value == pytest.approx(blk.g_value, rel=1e-10)
    assert max(blk.block_residuals()) <= 1e-30


def test_real_table_residual():
    M = validate((2, 2), (2, 2))
    assert RealTable(np.ones((2, 2)), M).margin_residual() == 0
    assert RealTable(np.full((2, 2), 1.5), M).margin_residual() == pytest.approx(0.5)
