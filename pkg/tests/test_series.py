import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubic_bdp.processes import RateSchedule
from cubic_bdp.series import MAX_ORDER, TruncatedSeries, gl_series, ode_residual

T = TruncatedSeries


def test_arithmetic_examples():
    assert np.allclose(((T([1, 1, 0]) * T([1, -1, 0]))).coeffs, [1, 0, -1])
    assert np.allclose(T([1, 1]).scale(3).coeffs, [3, 3])
    assert np.allclose((T([0, 1]) * T([0, 1])).coeffs, [0, 0])
    assert np.allclose((T([1, 2]) + T([3, 4])).coeffs, [4, 6])
    assert np.allclose((T([1, 2]) - 1).coeffs, [0, 2])


def test_order_mismatch():
    with pytest.raises(ValueError):
        T([1, 2]) + T([1, 2, 3])
    with pytest.raises(ValueError):
        T([1, 2]) * T([1])


def test_differentiate_examples():
    assert np.allclose(T([1, 1, 1]).differentiate().coeffs, [1, 2])
    assert np.allclose(T([5, 0, 0]).differentiate().coeffs, [0, 0])
    assert np.allclose(T([0, 0, 0, 1 / 6]).differentiate().coeffs, [0, 0, 0.5])
    with pytest.raises(ValueError):
        T([1]).differentiate()


def test_immutability():
    s = T([1.0, 2.0])
    with pytest.raises(ValueError):
        s.coeffs[0] = 5


_coeffs = st.lists(st.floats(-10, 10), min_size=6, max_size=6)


@settings(max_examples=50, deadline=None)
@given(_coeffs, _coeffs, _coeffs)
def test_product_commutative_associative(a, b, c):
    scale = 1 + max(map(abs, a)) * max(map(abs, b)) * (1 + max(map(abs, c)))
    a, b, c = T(a), T(b), T(c)
    assert np.allclose((a * b).coeffs, (b * a).coeffs, atol=1e-14 * scale, rtol=0)
    assert np.allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, atol=1e-13 * scale, rtol=0)


def test_gl_series_constant_terms():
    s = RateSchedule("P1", 1.0)
    g0 = gl_series(0, 2 + 1j, s, 30)
    assert g0.coeffs[0] == pytest.approx(1 / math.gamma(4))
    # P2, l = 2: the constant term is (zeta e_2)/(3c+2)! = (mu0 - z)... after scaling it is z-free up to mu0
    s2 = RateSchedule("P2", 0.5, 7.0)
    z = 2 + 1j
    g2 = gl_series(2, z, s2, 30)
    # zeta e_2 = zeta(-zeta e_1 + mu_0 e_{-1}) = zeta(zeta^2 - mu0/zeta) = z - mu0
    assert g2.coeffs[0] == pytest.approx((z - 7.0) / math.gamma(3 * 0.5 + 3), rel=1e-14)


def test_gl_series_at_zero_collapses_to_products():
    c = 0.8
    s = RateSchedule("P1", c)
    g = gl_series(0, 0.0, s, 30)
    for n in range(11):
        prod = math.prod(float(s.lam(k)) for k in range(n))
        assert g.coeffs[3 * n].real == pytest.approx(prod / math.gamma(3 * n + 3 * c + 1), rel=1e-12)


def test_gl_series_integer_exponents_only():
    g = gl_series(1, 1.5 - 2j, RateSchedule("P2", 1.3, 4.0), 45)
    mask = np.arange(46) % 3 != 0
    assert np.all(g.coeffs[mask] == 0)


def test_gl_series_limits():
    with pytest.raises(ValueError):
        gl_series(3, 1.0, RateSchedule("P1", 1.0))
    with pytest.raises(ValueError):
        gl_series(0, 1.0, RateSchedule("P1", 1.0), MAX_ORDER + 1)


def test_ode_residual_examples():
    assert ode_residual("P1", 1.0, 1.0, 0.0, 60) <= 1e-10
    assert ode_residual("P2", 2 + 1j, 0.5, 7.0, 60) <= 1e-10
    assert ode_residual("P1", 0.0, 1.0, 0.0, 10) <= 1e-14


def test_ode_residual_detects_wrong_system():
    # swapping the families must break the identity
    from cubic_bdp import series

    orig = series.gl_series

    def wrong(l, z, schedule, N=60):
        return orig(l, z, RateSchedule("P2" if schedule.family == "P1" else "P1", schedule.c, schedule.mu0), N)

    series.gl_series = wrong
    try:
        assert ode_residual("P1", 1.0, 1.0, 2.0, 30) > 1e-3
    finally:
        series.gl_series = orig
