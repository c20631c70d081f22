import math

import numpy as np
import pytest

from cubic_bdp import spectral as sp
from cubic_bdp.nevanlinna import matrix
from cubic_bdp.polynomials import eval_poly_sequence, sum_polynomials
from cubic_bdp.processes import RateSchedule, pi_n

P1 = RateSchedule("P1", 1.0)


def test_spacing_constant():
    assert sp.MASS_SPACING == pytest.approx(2.053, abs=1e-3)


def test_points_are_increasing_positive(p1_measure):
    x = p1_measure.points
    assert x[0] >= -1e-10 and np.all(np.diff(x) > 0)
    assert len(p1_measure) >= 38


def test_spacing_law(p1_measure):
    gaps = np.diff(np.cbrt(p1_measure.points))
    assert np.max(np.abs(gaps[19:] / sp.MASS_SPACING - 1)) <= 0.05


def test_points_are_zeros(p1_measure):
    b = matrix("P1", 1.0).element("B")
    x = p1_measure.points[:10]
    v, _ = b.evaluate(x, scaled=True)
    # relative to the size of the scaled element nearby
    v2, _ = b.evaluate(x * (1 + 1e-6), scaled=True)
    assert np.all(np.abs(v) < 1e-5 * np.abs(v2))


@pytest.mark.parametrize("tau", [0.0, 0.5, -2.0])
def test_zeros_interlace_with_d(tau):
    m = matrix("P2", 0.6)
    xm = (sp.MASS_SPACING * 32) ** 3
    xb = sp.find_mass_points(m, xm, tau=tau)[:30]
    xd = sp.find_mass_points(m, xm, mode="D")[:30]
    merged = np.sort(np.concatenate((xb, xd)))
    tags = np.isin(merged, xb)
    assert np.all(tags[1:] != tags[:-1])


def test_find_mass_points_validation():
    m = matrix("P1", 1.0)
    with pytest.raises(ValueError):
        sp.find_mass_points(m, 0.0)
    with pytest.raises(ValueError):
        sp.find_mass_points(m, 100.0, mode="C")


def test_refine_brackets_on_known_function():
    roots = sp.refine_brackets(np.cos, [1.0, 4.0], [2.0, 5.0], np.cos([1.0, 4.0]), np.cos([2.0, 5.0]))
    assert np.allclose(roots, [math.pi / 2, 3 * math.pi / 2], rtol=1e-13)
    with pytest.raises(sp.SpectralError):
        sp.refine_brackets(np.cos, [1.0], [2.0], [0.5], [-0.4], max_iter=1)


def test_total_mass(p1_measure):
    tot = p1_measure.total_mass()
    assert 0.99 < tot <= 1 + 1e-6
    small = sp.n_extremal_measure("P1", 1.0, (sp.MASS_SPACING * 8) ** 3)
    assert small.total_mass() < tot
    assert np.all(p1_measure.weights > 0)


def test_discrete_orthogonality(p1_measure):
    F = np.array([eval_poly_sequence(P1, x, 5).values.real for x in p1_measure.points]).T
    pis = np.array([pi_n(P1, j) for j in range(6)])
    G = (F * p1_measure.weights) @ F.T / np.sqrt(np.outer(pis, pis))
    assert np.max(np.abs(G - np.eye(6))) <= 1e-4


def test_weight_routes_agree(p1_measure):
    pts = p1_measure.points[:12]
    nv = sp.masses(pts, P1, method="nevanlinna")
    assert np.allclose(nv.weights, p1_measure.weights[:12], rtol=1e-6)
    assert np.all(p1_measure.rel_err[:12] < 1e-7)
    with pytest.raises(ValueError):
        sp.masses(pts, RateSchedule("P1", 1.0, 2.0), method="nevanlinna")
    with pytest.raises(ValueError):
        sp.masses(pts, P1, method="other")


def test_measure_validation():
    with pytest.raises(ValueError):
        sp.DiscreteMeasure([1.0, 0.5], [0.1, 0.1])
    with pytest.raises(ValueError):
        sp.DiscreteMeasure([1.0, 2.0], [0.1, -0.1])
    with pytest.raises(ValueError):
        sp.DiscreteMeasure([1.0, 2.0], [0.1])
    m = sp.DiscreteMeasure([1.0, 2.0], [0.25, 0.5])
    assert m.integrate([2.0, 2.0]) == 1.5


def test_d_mode_measure_carries_origin():
    meas = sp.n_extremal_measure("P2", 0.8, (sp.MASS_SPACING * 12) ** 3, mode="D")
    assert meas.points[0] == 0.0
    assert meas.weights[0] == pytest.approx(1 / sum_polynomials(RateSchedule("P2", 0.8), 0.0).real, rel=1e-6)
    assert meas.meta["mode"] == "D"


def test_query_validation():
    with pytest.raises(ValueError):
        sp.TransitionQuery(0, 1, 0.0)
    with pytest.raises(ValueError):
        sp.TransitionQuery(-1, 1, 1.0)


def test_small_time_limit(p1_measure):
    for m in range(4):
        for n in range(4):
            p = sp.transition_probability(sp.TransitionQuery(m, n, 1e-8), p1_measure, P1)
            assert abs(p - (m == n)) <= 1e-4


def test_probabilities_nonnegative_and_substochastic(p1_measure):
    for t in (1e-4, 1e-3, 1e-2, 0.1, 1.0):
        P = sp.transition_table(p1_measure, P1, 5, t)
        assert P.min() >= -1e-8
    # full row sums through the generating function sum_n F_n(x)
    x, w = p1_measure.points, p1_measure.weights
    for t in (0.01, 0.1):
        keep = w * np.exp(-x * t) > 1e-20
        S = sum_polynomials(P1, x[keep]).real
        for m in range(4):
            Fm = np.array([eval_poly_sequence(P1, v, m).values[m].real for v in x[keep]])
            row = math.fsum(w[keep] * np.exp(-x[keep] * t) * Fm * S) / pi_n(P1, m)
            assert 0 < row <= 1 + 1e-6


def test_table_matches_single_queries(p1_measure):
    P = sp.transition_table(p1_measure, P1, 3, 0.05)
    for m, n in ((0, 0), (1, 3), (3, 1)):
        assert P[m, n] == pytest.approx(sp.transition_probability(sp.TransitionQuery(m, n, 0.05), p1_measure, P1), rel=1e-12)
    # detailed balance: pi_m P_{m,n} = pi_n P_{n,m}
    assert pi_n(P1, 1) * P[1, 3] == pytest.approx(pi_n(P1, 3) * P[3, 1], rel=1e-10)


def test_coverage_error():
    short = sp.n_extremal_measure("P1", 1.0, (sp.MASS_SPACING * 6) ** 3)
    with pytest.raises(sp.CoverageError):
        sp.transition_probability(sp.TransitionQuery(0, 0, 1e-4), short, P1)
    with pytest.raises(sp.CoverageError):
        sp.transition_table(short, P1, 2, 1e-4)


def test_chapman_kolmogorov(p1_measure):
    assert sp.chapman_kolmogorov_residual(p1_measure, P1, 3, 0.01, 0.01) <= 1e-4


def test_generator_cross_check(p1_measure):
    for m, n in ((0, 0), (2, 1)):
        assert sp.generator_cross_check(m, n, 1e-4, 300, P1, p1_measure) <= 1e-6


def test_generator_probability_properties():
    assert sp.generator_probability(P1, 2, 2, 0.0) == 1.0
    assert sp.generator_probability(P1, 2, 3, 0.0) == 0.0
    row = [sp.generator_probability(P1, 0, n, 1e-5) for n in range(3)]
    assert all(p >= 0 for p in row) and sum(row) <= 1 + 1e-12
    assert row[0] > row[1] > row[2]
    with pytest.raises(ValueError):
        sp.generator_probability(P1, 0, 0, 1e-4, truncN=100)


def test_generator_truncation_alarm():
    # a fast chain leaks through state 200 well before t = 0.05
    with pytest.raises(sp.SpectralError):
        sp.generator_probability(RateSchedule("P1", 1.0), 150, 150, 5e-4, truncN=200)


def test_kolmogorov_forward(p1_measure):
    assert sp.kolmogorov_residual(p1_measure, P1, 3, 0.01) <= 1e-5


def test_cubic_fit(p1_measure):
    fit = sp.cubic_coefficient_fit(p1_measure.points)
    assert fit["reference"] == pytest.approx(sp.MASS_SPACING**3)
    assert fit["a"] == pytest.approx(sp.MASS_SPACING, rel=0.01)
    with pytest.raises(ValueError):
        sp.cubic_coefficient_fit(p1_measure.points[:5])


def test_csv_writers(tmp_path, p1_measure):
    p = tmp_path / "m.csv"
    sp.write_measure_csv(p, p1_measure)
    lines = p.read_text().splitlines()
    assert lines[0] == "k,x_k,rho_k" and len(lines) == len(p1_measure) + 1
    k, x, r = lines[1].split(",")
    assert float(x) == p1_measure.points[0] and float(r) == p1_measure.weights[0]
    q = tmp_path / "t.csv"
    sp.write_transition_csv(q, [(0, 1, 0.5, 0.25)])
    assert q.read_text().splitlines() == ["m,n,t,P", "0,1,0.5,0.25"]
