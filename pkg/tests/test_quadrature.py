import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubic_bdp.quadrature import (
    QuadratureError,
    SingularWeight,
    coefficient_integral,
    coefficient_integrals,
    integrate,
    integrate_nodes,
)
from cubic_bdp.specialfns import beta_fn, theta0

TH0 = theta0()


def one(u):
    return np.ones_like(u)


def test_weight_validation():
    with pytest.raises(ValueError):
        SingularWeight(-1.0, 0.0)
    with pytest.raises(ValueError):
        SingularWeight(0.0, -0.7)
    SingularWeight(-0.99, -2 / 3)


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (3 * 0.8, -1 / 3, beta_fn(0.8 + 1 / 3, 2 / 3) / 3),
        (0.0, -2 / 3, TH0),
        (1.0, 0.0, 0.5),
        (3 * 0.1 - 1, -2 / 3, beta_fn(0.1, 1 / 3) / 3),
    ],
)
def test_reduces_to_beta(a, b, expected):
    w = SingularWeight(a, b)
    assert integrate(w, one) == pytest.approx(expected, rel=1e-12)
    assert w.beta_integral() == pytest.approx(expected, rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.floats(-0.95, 6.0), st.floats(-2 / 3, 3.0))
def test_beta_property(a, b):
    w = SingularWeight(a, b)
    assert integrate(w, one, tol=1e-12) == pytest.approx(w.beta_integral(), rel=1e-10)


def test_smooth_integrand_and_complex_values():
    w = SingularWeight(0.5, -1 / 3)
    # int u^0.5 (1-u^3)^(-1/3) u^3 du = B(1.5/3 + 1, 2/3)/3
    ref = beta_fn(1.5 / 3 + 1, 2 / 3) / 3
    assert integrate(w, lambda u: u**3) == pytest.approx(ref, rel=1e-12)
    v = integrate(w, lambda u: np.exp(1j * u))
    assert isinstance(complex(v), complex) and abs(v.imag) > 0


def test_full_output_reports_error_and_work():
    val, err, n = integrate(SingularWeight(0.0, -2 / 3), one, full_output=True)
    assert val == pytest.approx(TH0, rel=1e-13)
    assert err < 1e-12 and n > 0


def test_tolerance_floor_and_stall():
    with pytest.raises(ValueError):
        integrate(SingularWeight(0, 0), one, tol=1e-16)
    with pytest.raises(QuadratureError):
        # a wildly oscillating integrand cannot converge with a tiny level budget
        integrate_nodes(SingularWeight(0, 0), lambda nd: np.cos(1e4 * nd.u), tol=1e-13, max_level=2)


def test_vector_integrands():
    w = SingularWeight(1.0, 0.0)
    out = integrate_nodes(w, lambda nd: np.array([np.ones_like(nd.u), nd.u]))
    assert out[0] == pytest.approx(0.5, rel=1e-13)
    assert out[1] == pytest.approx(1 / 3, rel=1e-13)


def test_node_thetas_are_consistent():
    from cubic_bdp.specialfns import theta, theta_hat

    seen = {}

    def g(nd):
        seen["u"], seen["th"], seen["tht"] = nd.u, nd.theta, nd.theta_hat
        return np.ones_like(nd.u)

    integrate_nodes(SingularWeight(0.2, -1 / 3), g)
    # near u = 1 the nodes carry 1 - u separately, so compare in the interior only
    inner = seen["u"] < 0.99
    u = seen["u"][inner]
    assert np.allclose(seen["th"][inner], theta(u), rtol=1e-12, atol=1e-15)
    assert np.allclose(seen["tht"][inner], theta_hat(u), rtol=1e-12, atol=1e-15)


def test_coefficient_integral_zero_power():
    w = SingularWeight(0.0, -2 / 3)
    assert coefficient_integral(w, 0, 0).value == pytest.approx(TH0, rel=1e-11)
    w1 = SingularWeight(1.0, 0.0)
    assert coefficient_integral(w1, 0, 0).value == pytest.approx(0.5, rel=1e-11)
    with pytest.raises(ValueError):
        coefficient_integral(w1, 3, 0)
    with pytest.raises(ValueError):
        coefficient_integral(w1, 0, -1)


@pytest.mark.parametrize("a", [0.0, 1.5])
def test_coefficient_integral_bounds(a):
    # theta0 (1-u) <= theta_hat(u) <= theta0 turns into Beta bounds when b = 0
    w = SingularWeight(a, 0.0)
    for k in (1, 5, 20, 60):
        n, l = divmod(k, 3)
        log_i = coefficient_integral(w, l, n).log_magnitude - k * math.log(TH0)
        lower = math.lgamma(a + 1) + math.lgamma(k + 1) - math.lgamma(a + k + 2)
        upper = math.log(1 / (a + 1))
        assert lower <= log_i <= upper


def test_coefficient_integral_monotone_in_n():
    w = SingularWeight(3 * 0.4 - 1, -2 / 3)
    prev = None
    for n in range(0, 40, 3):
        cur = coefficient_integral(w, 1, n).log_magnitude
        if prev is not None:
            assert cur <= prev + 3 * 3 * math.log(TH0)
        prev = cur


@pytest.mark.parametrize("l,n", [(0, 0), (1, 4), (2, 15), (0, 30)])
def test_scaled_and_plain_routes_agree(l, n):
    w = SingularWeight(3 * 0.7, -1 / 3)
    a = coefficient_integral(w, l, n, scale_by_theta0=True)
    b = coefficient_integral(w, l, n, scale_by_theta0=False)
    assert abs(math.expm1(a.log_magnitude - b.log_magnitude)) < 1e-9


def test_large_powers_stay_finite():
    w = SingularWeight(0.5, -1 / 3)
    logs = coefficient_integrals(w, np.array([0, 100, 1000, 6000]))
    assert np.all(np.isfinite(logs))
    assert np.all(np.diff(logs) < 0)
    # mass concentrates near u = 0 where (theta_hat/theta0)^k ~ exp(-k u/theta0):
    # the integral behaves like Gamma(a+1) (theta0/k)^(a+1)
    k = 6000
    approx = math.lgamma(1.5) + 1.5 * math.log(TH0 / k)
    assert abs(logs[-1] - approx) < 0.01
