import cmath
import math

import numpy as np
import pytest

from cubic_bdp import nevanlinna as nv
from cubic_bdp.polynomials import sum_polynomials
from cubic_bdp.processes import RateSchedule
from cubic_bdp.quadrature import SingularWeight, integrate_nodes
from cubic_bdp.specialfns import beta_fn, sigma, theta0

TH0 = theta0()
Z_SAMPLE = np.array([0.0, 1 + 1j, -3.0, 4 - 3j, 10j, -12 + 5j, 25.0, -20 - 15j])


def rel(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(1.0, np.abs(b))))


def test_entire_kernel_examples():
    for z in (0.0, 3 - 1j, -40.0):
        assert nv.entire_kernel(0, z, 0.0) == 1
    assert nv.entire_kernel(1, 0.0, TH0) == pytest.approx(TH0, rel=1e-15)
    assert nv.entire_kernel(2, 1.0, 1.0) == pytest.approx(sigma(2, 1.0), rel=1e-13)


def test_entire_kernel_branch_free():
    # the kernel is a function of z: crossing the negative axis changes nothing
    for w in (0.3, 1.0, TH0):
        for l in range(3):
            a = nv.entire_kernel(l, complex(-8.0, 1e-12), w)
            b = nv.entire_kernel(l, complex(-8.0, -1e-12), w)
            assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


def test_entire_kernel_series_and_closed_form_meet():
    # both sides of the switch-over radius agree with the sigma oracle
    for r in (3.9, 4.1, 8.0):
        z = (r / TH0) ** 3 * cmath.exp(0.7j)
        zeta = nv.principal_cbrt(z)
        for l in range(3):
            ref = sigma(l, zeta * TH0) / zeta**l
            assert abs(nv.entire_kernel(l, z, TH0) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_shifted_kernel_scales_out_growth():
    z, w, m = 2000.0 + 500j, TH0, 25.0
    a = nv.entire_kernel(1, z, w, log_shift=m)
    b = nv.entire_kernel(1, z, w) * math.exp(-m)
    assert abs(a - b) <= 1e-10 * abs(b)


def test_cal_F_against_series():
    s = RateSchedule("P1", 1.0)
    z = 1 + 1j
    assert rel(nv.cal_F(z, 1.0), sum_polynomials(s, z)) <= 1e-6
    f0 = nv.cal_F(0.0, 1.0)
    assert f0.real > 0 and abs(f0.imag) == 0
    assert rel(f0, sum_polynomials(s, 0.0)) <= 1e-6


def test_cal_F_with_mu0_and_second_route():
    z = 2.0
    lhs = 1 - z / 10 * nv.cal_F(z, 1.5, 10.0)
    assert abs(nv.cal_F_alt(z, 1.5, 10.0) - lhs) <= 1e-8
    s = RateSchedule("P1", 0.6, 4.0)
    zs = np.array([-2.0, 3 + 2j])
    assert rel(nv.cal_F(zs, 0.6, 4.0), sum_polynomials(s, zs)) <= 1e-6
    with pytest.raises(ValueError):
        nv.cal_F_alt(z, 0.9, 1.0)
    with pytest.raises(ValueError):
        nv.cal_F_alt(z, 1.5, 0.0)


def test_cal_G_against_series_and_second_route():
    assert rel(nv.cal_G(-1.0, 1.0), sum_polynomials(RateSchedule("P2", 1.0), -1.0)) <= 1e-6
    z = 3.0
    lhs = 1 - z / 5 * nv.cal_G(z, 0.7, 5.0)
    assert abs(nv.cal_G_alt(z, 0.7, 5.0) - lhs) <= 1e-8
    with pytest.raises(ValueError):
        nv.cal_G_alt(z, 0.3, 5.0)


def test_cal_G_at_zero():
    c = 1.0
    k = 3 / beta_fn(5 / 3, 1 / 3) * 3 * c * (3 * c + 1)
    ref = k * integrate_nodes(SingularWeight(3 * c - 1, -1 / 3), lambda nd: nd.theta_hat**2 / 2)
    assert nv.cal_G(0.0, c) == pytest.approx(ref, rel=1e-10)


def test_generating_function_domain():
    with pytest.raises(ValueError):
        nv.cal_F(1.0, 0.0)
    with pytest.raises(ValueError):
        nv.cal_G(1.0, 1.0, -1.0)


@pytest.mark.parametrize("fam", ["P1", "P2"])
@pytest.mark.parametrize("c", [0.2, 1.0, 2.5])
def test_normalization_at_zero(fam, c):
    v = nv.matrix(fam, c)(0.0)
    assert abs(v["C"] - 1) <= 1e-10
    assert abs(v["B"] + 1) <= 1e-10
    assert v["D"] == 0


@pytest.mark.parametrize("fam,c", [("P1", 0.3), ("P1", 1.0), ("P2", 0.5), ("P2", 2.0)])
def test_determinant_is_one(fam, c):
    m = nv.matrix(fam, c)
    assert float(np.max(np.abs(m.determinant(Z_SAMPLE) - 1))) <= 1e-6


def test_matrix_validation():
    with pytest.raises(ValueError):
        nv.matrix("P3", 1.0)
    with pytest.raises(ValueError):
        nv.matrix("P1", -1.0)


def test_elements_real_on_real_axis():
    m = nv.matrix("P2", 0.8)
    v = m(np.array([-30.0, -1.0, 2.0, 500.0]))
    for name, vals in v.items():
        assert np.all(np.abs(vals.imag) <= 1e-12 * np.maximum(1, np.abs(vals))), name


def test_conjugate_symmetry():
    m = nv.matrix("P1", 0.7)
    z = 6 - 8j
    a, b = m(z), m(z.conjugate())
    for k in a:
        assert abs(a[k] - b[k].conjugate()) <= 1e-12 * max(1, abs(a[k]))


def test_simplified_forms():
    m = nv.matrix("P1", 1.0)
    z = 4 - 3j
    b1, d1 = nv.simplified_elements(1.0, z)
    v = m(z)
    assert abs(b1 - v["B"]) <= 1e-8 * abs(v["B"])
    assert abs(d1 - v["D"]) <= 1e-8 * abs(v["D"])
    b0, d0 = nv.simplified_elements(1.0, 0.0)
    assert b0 == pytest.approx(-1, abs=1e-10) and d0 == 0
    with pytest.raises(ValueError):
        nv.simplified_elements(1 / 3, 1.0)


@pytest.mark.parametrize("fam", ["P1", "P2"])
def test_assembly_from_generating_functions(fam):
    c = 0.6
    zs = np.array([1.5 + 0.5j, -6.0, 9j])
    m = nv.matrix(fam, c)
    direct = m(zs)
    built = nv.assembled_elements(fam, c, zs)
    for k in nv.ELEMENT_NAMES:
        assert rel(built[k], direct[k]) <= 1e-7, k


def test_coefficients_examples():
    co = nv.coefficients("P1", 0.9, "C", 200)
    assert co[0].value == pytest.approx(1, rel=1e-10)
    assert all(xi.sign == (-1) ** n for n, xi in enumerate(co))
    d = nv.coefficients("P1", 0.9, "D", 50)
    assert d[0].sign == 0 and d[0].value == 0.0
    assert all(xi.sign == (-1) ** (n - 1) for n, xi in enumerate(d) if n)
    b = nv.coefficients("P2", 0.9, "B~", 10)
    assert b[0].value == pytest.approx(-1, rel=1e-10)
    with pytest.raises(ValueError):
        nv.coefficients("P1", 1.0, "E", 5)


@pytest.mark.parametrize("fam", ["P1", "P2"])
def test_coefficient_series_matches_quadrature(fam):
    m = nv.matrix(fam, 1.3)
    for el in nv.ELEMENT_NAMES:
        co = nv.coefficients(fam, 1.3, el, 150)
        for z in (5.0, -7 + 6j):
            a = nv.coefficient_series_value(co, z)
            b = m.element(el).evaluate(z)
            assert abs(a - b) <= 1e-6 * max(1.0, abs(b)), (el, z)


def test_coefficients_reach_large_index():
    co = nv.coefficients("P2", 0.4, "A", 5000)
    assert len(co) == 5001
    assert all(math.isfinite(xi.log_magnitude) for xi in co)
    assert co[5000].value == 0.0 or abs(co[5000].value) < 1e-300


def test_alpha_and_plain_matrix():
    a = nv.alpha("P1", 1.0)
    assert a < 0
    assert -1 / a > 1 / 80
    m = nv.matrix("P1", 1.0)
    assert m.alpha == a
    v0 = m(0.0)
    assert v0["A"] == pytest.approx(-1 / a, rel=1e-10)
    A, B = nv.to_plain(m)
    assert abs(A(0.0)) <= 1e-10 * abs(1 / a)
    assert A(0.0) == pytest.approx(v0["A"] + 1 / a, abs=1e-12)
    zs = np.array([2 + 1j, -9.0])
    v = m(zs)
    det = A(zs) * v["D"] - B(zs) * v["C"]
    assert float(np.max(np.abs(det - 1))) <= 1e-6


def test_derivative_by_finite_difference():
    spec = nv.matrix("P1", 0.8).element("D")
    z, h = 3 + 2j, 1e-4
    fd = (spec.evaluate(z + h) - spec.evaluate(z - h)) / (2 * h)
    assert abs(spec.derivative(z) - fd) <= 1e-6 * abs(fd)


def test_csv_exports(tmp_path):
    co = nv.coefficients("P1", 1.0, "C", 4)
    p = tmp_path / "c.csv"
    nv.write_coefficients_csv(p, co)
    lines = p.read_text().splitlines()
    assert lines[0] == "n,sign,log_abs_xi" and len(lines) == 6
    q = tmp_path / "s.csv"
    nv.write_samples_csv(q, [1 + 2j], [3 - 4j])
    assert q.read_text().splitlines()[1] == "1,2,3,-4"
