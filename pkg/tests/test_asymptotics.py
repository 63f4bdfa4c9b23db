import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctables import asymptotics as asy
from ctables.errors import CriticalPoint, DomainError
from ctables.heuristic import log_heuristic_mp
from ctables.margins import BarvinokParams, barvinok_margins
from ctables.typical import f_entry

SQ2 = math.sqrt(2)
LOG2 = math.log(2)


def test_critical_b_examples():
    assert asy.critical_b(1) == pytest.approx(1 + SQ2, rel=1e-15)
    assert asy.critical_b(1 / 3) == pytest.approx(3, rel=1e-15)
    assert 2 < asy.critical_b(1e9) < 2 + 1e-9
    with pytest.raises(DomainError):
        asy.critical_b(0)


def test_phase_point_regimes():
    assert asy.phase_point(2, 1).regime == "subcritical"
    assert asy.phase_point(1 + SQ2, 1).regime == "critical"
    assert asy.phase_point(3, 1).regime == "supercritical"


def test_constants_DE_examples():
    D, E = asy.constants_DE(1, 1)
    assert E == pytest.approx(1, rel=1e-14)
    assert D == pytest.approx(LOG2 - 0.25, rel=1e-14)
    D, E = asy.constants_DE(1e-6, 1)
    assert abs(D) < 1e-10 and abs(E) < 1e-10
    _, E = asy.constants_DE(1 + SQ2 - 1e-9, 1)
    assert E > 1e8
    with pytest.raises(DomainError):
        asy.constants_DE(3, 1)


def test_correlation_exponent_values():
    for B in (0.1, 1, 2, 1 + SQ2):
        assert asy.correlation_exponent(B, 1) == 0
    bc = 1 + SQ2
    expected = (3 - bc) * LOG2 - 2 * (f_entry(3) - f_entry(bc))
    assert asy.correlation_exponent(3, 1) == pytest.approx(expected, rel=1e-10)
    assert asy.correlation_exponent(3, 1) == pytest.approx(0.036654739, rel=1e-8)


@given(st.floats(0.05, 20), st.floats(1e-3, 10))
def test_exponent_nonnegative_and_monotone(C, dB):
    bc = asy.critical_b(C)
    lo, hi = asy.correlation_exponent(bc + dB / 2, C), asy.correlation_exponent(bc + dB, C)
    assert 0 <= lo <= hi


def test_exponent_is_coefficient_gap():
    # lambda(B) = lin(B_c) - lin(B) with lin(B) = 2f(BC) - BC log(1 + 1/C)
    for C in (0.5, 1.0, 2.0):
        bc = asy.critical_b(C)
        for B in np.linspace(bc + 0.1, 8, 9):
            with mpmath.workdps(40):
                gap = float(asy._lin_coef_sub(asy._bc(C), C) - asy._lin_coef_sub(B, C))
            assert gap == pytest.approx(asy.correlation_exponent(B, C), rel=1e-12, abs=1e-15)
            assert asy.second_order_coefficient(B, C) == asy.second_order_coefficient(bc, C)


def test_derivatives():
    C = 1.0
    bc = 1 + SQ2
    first, second = asy.correlation_exponent_derivatives(bc + 1e-12, C)
    assert abs(first) < 1e-10
    assert second == pytest.approx(2 / ((1 + SQ2) * (2 + SQ2)), rel=1e-10)
    for B in (bc + 0.1, 3.0, 5.0, 10.0):
        h = 1e-5
        fd = (asy.correlation_exponent(B + h, C) - asy.correlation_exponent(B - h, C)) / (2 * h)
        assert asy.correlation_exponent_derivatives(B, C)[0] == pytest.approx(fd, abs=1e-8)
    with pytest.raises(DomainError):
        asy.correlation_exponent_derivatives(2.0, C)


def _coefs(rep):
    return [c for _, c, _ in rep.predicted_terms]


def test_main_prediction_examples():
    rep = asy.main_theorem_prediction(BarvinokParams(100, 0.5, 1, 1))
    assert np.allclose(_coefs(rep), [2 * LOG2, 3 * LOG2, LOG2 - 0.25], rtol=1e-14)
    assert rep.predicted_terms[2][2] == pytest.approx((LOG2 - 0.25) * 100)
    bc = 1 + SQ2
    expected = 2 * f_entry(bc) - bc * LOG2
    for B in (4.0, 7.0):
        rep = asy.main_theorem_prediction(BarvinokParams(100, 0.5, B, 1))
        assert _coefs(rep)[1] == pytest.approx(expected, rel=1e-14)
        assert _coefs(rep)[0] == pytest.approx(2 * LOG2)
        assert rep.claimed_error_order == "n^{2δ}+n log n"


def test_critical_point_policy():
    p = BarvinokParams(100, 0.5, asy.critical_b(1), 1)
    with pytest.raises(CriticalPoint):
        asy.main_theorem_prediction(p)
    rep = asy.main_theorem_prediction(p, at_critical="supercritical")
    assert len(rep.predicted_terms) == 2


def test_ih_prediction_examples():
    rep = asy.ih_expansion_prediction(BarvinokParams(100, 0.5, 1, 1))
    assert _coefs(rep)[2] == pytest.approx(LOG2 - 0.25, rel=1e-14)
    assert _coefs(rep)[0] == _coefs(asy.main_theorem_prediction(BarvinokParams(100, 0.5, 1, 1)))[0]
    p = BarvinokParams(100, 0.5, asy.critical_b(1), 1)
    ih = _coefs(asy.ih_expansion_prediction(p))[1]
    main = _coefs(asy.main_theorem_prediction(p, at_critical="supercritical"))[1]
    assert ih == pytest.approx(main, rel=1e-12)
    printed = _coefs(asy.ih_expansion_prediction(p, as_printed=True))[1]
    assert printed == pytest.approx(ih - f_entry(p.B), rel=1e-12)


def test_ih_linear_coefficient_against_exact_log_gamma():
    # the n^(1+delta) coefficient is the one that makes the scaled residual vanish
    B, C, d = 2.0, 1.0, 0.5
    lin = _coefs(asy.ih_expansion_prediction(BarvinokParams(10, d, B, C)))[1]
    vals = []
    for n in (10**4, 10**6, 10**8):
        with mpmath.workdps(40):
            lg = log_heuristic_mp(barvinok_margins(BarvinokParams(n, d, B, C)))
            vals.append(float((lg - asy._f(C) * n**2) / mpmath.mpf(n) ** (1 + d)))
    assert abs(vals[-1] - lin) < abs(vals[0] - lin) and abs(vals[-1] - lin) < 1e-2


def test_verify_expansion_harness():
    v = asy.verify_expansion("ih", BarvinokParams(1000, 0.5, 2.0, 1.0), [1000, 10000])
    assert len(v.rows()) == 2 and v.bounded
    with pytest.raises(ValueError):
        asy.verify_expansion("ih", BarvinokParams(1000, 0.5, 2.0, 1.0), [10000, 1000])
    with pytest.raises(ValueError):
        asy.verify_expansion("nope", BarvinokParams(1000, 0.5, 2.0, 1.0), [1000])


def test_report_serialization():
    rep = asy.typical_entropy_prediction(BarvinokParams(1000, 0.7, 1, 1))
    assert rep.claimed_error_order == "n^{3δ−1}+n"
    d = rep.to_dict()
    assert d["residual"] is None and len(d["predicted_terms"]) == 3


def test_bounded_ratio():
    assert asy.bounded_ratio([1, -2, 4]) == 4
    assert asy.bounded_ratio([0, 1]) == math.inf
