"""Generating functions and Nevanlinna matrices as singular integrals.

Every quantity here has the shape

    prefactor * z^p * int_0^1 u^a (1-u^3)^b E_l(z, theta_hat(u)) du,

with the entire kernels

    E_l(z, w) = sigma_l(zeta w) / zeta^l = sum_n (-1)^n w^(3n+l) z^n / (3n+l)!,

which depend on z only (not on the choice of cube root zeta).  Near z = 0
the kernels are summed as power series in y = -z w^3; elsewhere the
three-exponential closed form is used with the principal cube root.

Exponential growth can be scaled out: every evaluator accepts a
``log_shift`` M and returns the value times exp(-M).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from .processes import RateSchedule, alpha_sum
from .quadrature import (
    QuadNodes,
    ScaledCoefficient,
    SingularWeight,
    coefficient_integrals,
    integrate_nodes,
)
from .specialfns import THETA0, beta_fn

__all__ = [
    "entire_kernel",
    "shifted_kernel",
    "kernel_derivative",
    "growth_shift",
    "cal_F",
    "cal_F_alt",
    "cal_G",
    "cal_G_alt",
    "ElementSpec",
    "NevanlinnaMatrix",
    "matrix",
    "simplified_elements",
    "assembled_elements",
    "coefficients",
    "coefficient_series_value",
    "alpha",
    "to_plain",
    "write_coefficients_csv",
    "write_samples_csv",
]

_J = complex(0.5, math.sqrt(3) / 2)
OMEGAS = (-1.0 + 0j, _J, _J.conjugate())  # cube roots of -1
_SERIES_RADIUS = 4.0  # |zeta w| below which the power series is used
_SERIES_TERMS = 26
_INV_FACT = np.array([1.0 / math.factorial(k) for k in range(3 * _SERIES_TERMS + 6)])
ELEMENT_NAMES = ("A", "B", "C", "D")  # A~, B~, C, D
DEFAULT_TOL = 1e-12


def principal_cbrt(z: complex) -> complex:
    if z == 0:
        return 0j
    r, phi = abs(z), math.atan2(z.imag, z.real)
    return r ** (1 / 3) * complex(math.cos(phi / 3), math.sin(phi / 3))


def growth_shift(z: complex, wmax: float = THETA0) -> float:
    """M = wmax * max_omega max(0, Re(omega zeta)), an upper bound for ln|E_l|."""
    zeta = principal_cbrt(complex(z))
    return wmax * max(0.0, max((w * zeta).real for w in OMEGAS))


def _series(l: int, z: complex, w: np.ndarray, start: int = 0) -> np.ndarray:
    """sum_{n >= 0} (-1)^n w^(3n+l+3s) z^n / (3n+l+3s)!  with s = start."""
    y = -z * w**3
    acc = np.zeros(w.shape, dtype=complex)
    # Horner in y
    for n in range(_SERIES_TERMS - 1, -1, -1):
        acc = acc * y + _INV_FACT[3 * n + l + 3 * start]
    return acc * w ** (l + 3 * start)


def _closed(l: int, zeta: complex, w: np.ndarray, log_shift: float) -> np.ndarray:
    out = np.zeros(w.shape, dtype=complex)
    for om in OMEGAS:
        out += om ** (-l) * np.exp(om * zeta * w - log_shift)
    return out / (3.0 * zeta**l)


def entire_kernel(l: int, z, w, log_shift: float = 0.0):
    """E_l(z, w) * exp(-log_shift) for w in [0, theta0] (array or scalar)."""
    if l not in (0, 1, 2):
        raise ValueError("l must be 0, 1 or 2")
    z = complex(z)
    w_arr = np.atleast_1d(np.asarray(w, dtype=float))
    zeta = principal_cbrt(z)
    small = abs(zeta) * w_arr <= _SERIES_RADIUS
    out = np.empty(w_arr.shape, dtype=complex)
    if np.any(small):
        out[small] = _series(l, z, w_arr[small]) * math.exp(-log_shift)
    if np.any(~small):
        out[~small] = _closed(l, zeta, w_arr[~small], log_shift)
    return out[0] if np.ndim(w) == 0 else out


def shifted_kernel(z, w, log_shift: float = 0.0):
    """(1 - E_0(z, w)) / z * exp(-log_shift), finite at z = 0 where it equals w^3/6."""
    z = complex(z)
    w_arr = np.atleast_1d(np.asarray(w, dtype=float))
    zeta = principal_cbrt(z)
    small = abs(zeta) * w_arr <= _SERIES_RADIUS
    out = np.empty(w_arr.shape, dtype=complex)
    if np.any(small):
        # (1 - E_0)/z = - sum_{n>=0} (-1)^(n+1) w^(3n+3) z^n / (3n+3)!
        out[small] = _series(0, z, w_arr[small], start=1) * math.exp(-log_shift)
    if np.any(~small):
        out[~small] = (math.exp(-log_shift) - _closed(0, zeta, w_arr[~small], log_shift)) / z
    return out[0] if np.ndim(w) == 0 else out


def kernel_derivative(l: int, z, w, log_shift: float = 0.0):
    """d/dz E_l(z, w) * exp(-log_shift)."""
    z = complex(z)
    w_arr = np.atleast_1d(np.asarray(w, dtype=float))
    zeta = principal_cbrt(z)
    small = abs(zeta) * w_arr <= _SERIES_RADIUS
    out = np.empty(w_arr.shape, dtype=complex)
    if np.any(small):
        ws = w_arr[small]
        y = -z * ws**3
        acc = np.zeros(ws.shape, dtype=complex)
        for m in range(_SERIES_TERMS - 1, -1, -1):
            acc = acc * y + (m + 1) * _INV_FACT[3 * m + 3 + l]
        out[small] = -acc * ws ** (l + 3) * math.exp(-log_shift)
    if np.any(~small):
        wl = w_arr[~small]
        if l == 0:
            out[~small] = -wl * _closed(2, zeta, wl, log_shift) / 3.0
        else:
            out[~small] = (wl * _closed(l - 1, zeta, wl, log_shift) - l * _closed(l, zeta, wl, log_shift)) / (3.0 * z)
    return out[0] if np.ndim(w) == 0 else out


# ---------------------------------------------------------------------------
# generic integral term


@dataclass(frozen=True)
class _Term:
    """coef * int u^a (1-u^3)^b K(z, theta_hat) du, K = E_l (l = 0, 1, 2) or the shifted kernel ('K')."""

    coef: float
    a: float
    b: float
    kernel: object  # 0, 1, 2 or "K"


def _as_zlist(z) -> tuple[np.ndarray, bool]:
    arr = np.atleast_1d(np.asarray(z, dtype=complex))
    return arr, np.ndim(z) == 0


def _integrate_terms(terms: Iterable[_Term], zs: np.ndarray, shifts: np.ndarray, tol: float) -> np.ndarray:
    total = np.zeros(zs.shape, dtype=complex)
    # at large |z| the scaled kernels live in a layer of width ~ |z|^(-1/3) at u = 0
    zmax = float(np.max(np.abs(zs), initial=0.0))
    for term in terms:
        w = SingularWeight(term.a, term.b)
        extra = (term.a + 1.0) * math.log1p(zmax ** (1 / 3) * THETA0)

        def g(nodes: QuadNodes, term=term):
            th = nodes.theta_hat
            rows = []
            for z, m in zip(zs, shifts):
                if term.kernel == "K":
                    rows.append(shifted_kernel(z, th, m))
                else:
                    rows.append(entire_kernel(term.kernel, z, th, m))
            return np.array(rows)

        total += term.coef * integrate_nodes(w, g, tol=tol, extra_lo=extra)
    return total


def _finish(out: np.ndarray, scalar: bool):
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# generating functions


def _check_c(c: float, mu0: float):
    if not c > 0:
        raise ValueError("c must be > 0")
    if not mu0 >= 0:
        raise ValueError("mu0 must be >= 0")


def cal_F(z, c: float, mu0: float = 0.0, tol: float = DEFAULT_TOL):
    """sum_n F_n(z; c, mu0) through its integral representation.

    3/B(c+1/3, 2/3) * [ 3c int u^(3c-1)(1-u^3)^(-2/3) E_1 du
                        + mu0 int u^(3c)(1-u^3)^(-1/3) (1-E_0)/z du ]
    """
    _check_c(c, mu0)
    zs, scalar = _as_zlist(z)
    k = 3.0 / beta_fn(c + 1 / 3, 2 / 3)
    terms = [_Term(k * 3 * c, 3 * c - 1, -2 / 3, 1)]
    if mu0 != 0:
        terms.append(_Term(k * mu0, 3 * c, -1 / 3, "K"))
    return _finish(_integrate_terms(terms, zs, np.zeros(zs.size), tol), scalar)


def cal_F_alt(z, c: float, mu0: float, tol: float = DEFAULT_TOL):
    """1 - (z/mu0) cal_F(z; c, mu0) by the second representation (needs c > 1, mu0 > 0)."""
    if not c > 1:
        raise ValueError("this representation needs c > 1")
    if not mu0 > 0:
        raise ValueError("this representation needs mu0 > 0")
    zs, scalar = _as_zlist(z)
    m1 = (3 * c - 1) * (3 * c) ** 2
    terms = [
        _Term(3.0 / beta_fn(c - 2 / 3, 2 / 3) * m1 / mu0, 3 * c - 3, -1 / 3, 0),
        _Term(3.0 / beta_fn(c + 1 / 3, 2 / 3) * (mu0 - m1) / mu0, 3 * c, -1 / 3, 0),
    ]
    return _finish(_integrate_terms(terms, zs, np.zeros(zs.size), tol), scalar)


def cal_G(z, c: float, mu0: float = 0.0, tol: float = DEFAULT_TOL):
    """sum_n G_n(z; c, mu0) through its integral representation.

    3/B(c+2/3, 1/3) * [ 3c(3c+1) int u^(3c-1)(1-u^3)^(-1/3) E_2 du
                        + mu0 int u^(3c+1)(1-u^3)^(-2/3) (1-E_0)/z du ]
    """
    _check_c(c, mu0)
    zs, scalar = _as_zlist(z)
    k = 3.0 / beta_fn(c + 2 / 3, 1 / 3)
    terms = [_Term(k * 3 * c * (3 * c + 1), 3 * c - 1, -1 / 3, 2)]
    if mu0 != 0:
        terms.append(_Term(k * mu0, 3 * c + 1, -2 / 3, "K"))
    return _finish(_integrate_terms(terms, zs, np.zeros(zs.size), tol), scalar)


def cal_G_alt(z, c: float, mu0: float, tol: float = DEFAULT_TOL):
    """1 - (z/mu0) cal_G(z; c, mu0) by the second representation (needs c > 1/3, mu0 > 0)."""
    if not c > 1 / 3:
        raise ValueError("this representation needs c > 1/3")
    if not mu0 > 0:
        raise ValueError("this representation needs mu0 > 0")
    zs, scalar = _as_zlist(z)
    m1 = (3 * c) ** 2 * (3 * c + 1)
    terms = [
        _Term(3.0 / beta_fn(c - 1 / 3, 1 / 3) * m1 / mu0, 3 * c - 2, -2 / 3, 0),
        _Term(3.0 / beta_fn(c + 2 / 3, 1 / 3) * (mu0 - m1) / mu0, 3 * c + 1, -2 / 3, 0),
    ]
    return _finish(_integrate_terms(terms, zs, np.zeros(zs.size), tol), scalar)


# ---------------------------------------------------------------------------
# matrix elements


@dataclass(frozen=True)
class ElementSpec:
    """prefactor * z^z_power * int u^a (1-u^3)^b E_l(z, theta_hat(u)) du."""

    name: str
    prefactor: float
    a: float
    b: float
    l: int
    z_power: int = 0

    @property
    def weight(self) -> SingularWeight:
        return SingularWeight(self.a, self.b)

    def evaluate(self, z, tol: float = DEFAULT_TOL, scaled: bool = False):
        """Element value(s); with ``scaled`` return (value * exp(-M), M) with M = growth_shift(z)."""
        zs, scalar = _as_zlist(z)
        shifts = np.array([growth_shift(v) for v in zs]) if scaled else np.zeros(zs.size)
        vals = _integrate_terms([_Term(self.prefactor, self.a, self.b, self.l)], zs, shifts, tol)
        vals = vals * zs**self.z_power
        if scaled:
            return (_finish(vals, scalar), float(shifts[0]) if scalar else shifts)
        return _finish(vals, scalar)

    def derivative(self, z, tol: float = DEFAULT_TOL, scaled: bool = False):
        """d/dz of the element, optionally scaled like :meth:`evaluate`."""
        zs, scalar = _as_zlist(z)
        shifts = np.array([growth_shift(v) for v in zs]) if scaled else np.zeros(zs.size)
        w = self.weight

        def g(nodes):
            th = nodes.theta_hat
            rows = []
            for v, m in zip(zs, shifts):
                d = kernel_derivative(self.l, v, th, m)
                if self.z_power:
                    d = v * d + entire_kernel(self.l, v, th, m)
                rows.append(d)
            return np.array(rows)

        extra = (self.a + 1.0) * math.log1p(float(np.max(np.abs(zs), initial=0.0)) ** (1 / 3) * THETA0)
        vals = self.prefactor * integrate_nodes(w, g, tol=tol, extra_lo=extra)
        if scaled:
            return (_finish(vals, scalar), float(shifts[0]) if scalar else shifts)
        return _finish(vals, scalar)

    def coefficients(self, n_max: int) -> list[ScaledCoefficient]:
        """Taylor coefficients xi_0 .. xi_{n_max} of the element in powers of z."""
        return element_coefficients(self, n_max)


def _p1_specs(c: float) -> dict:
    kb = 3.0 / beta_fn(c + 1, 1 / 3)
    kc = 3.0 / beta_fn(c + 1 / 3, 2 / 3)
    return {
        "A": ElementSpec("A", kb / (3 * c + 1), 3 * c, -1 / 3, 2),
        "B": ElementSpec("B", -kb * 3 * c / (3 * c + 1), 3 * c - 1, -2 / 3, 0),
        "C": ElementSpec("C", kc, 3 * c, -1 / 3, 0),
        "D": ElementSpec("D", kc * 3 * c, 3 * c - 1, -2 / 3, 1, z_power=1),
    }


def _p2_specs(c: float) -> dict:
    kb = 3.0 / beta_fn(c + 1, 2 / 3)
    kc = 3.0 / beta_fn(c + 2 / 3, 1 / 3)
    return {
        "A": ElementSpec("A", kb / (3 * c + 2), 3 * c, 0.0, 2),
        "B": ElementSpec("B", -kb * 3 * c / (3 * c + 2), 3 * c - 1, -1 / 3, 0),
        "C": ElementSpec("C", kc * (3 * c + 1), 3 * c, 0.0, 1),
        "D": ElementSpec("D", kc * 3 * c * (3 * c + 1), 3 * c - 1, -1 / 3, 2, z_power=1),
    }


@dataclass(frozen=True)
class NevanlinnaMatrix:
    """The modified matrix (A~, B~, C, D) of the pure process of one family at one c."""

    family: str
    c: float
    specs: dict = field(repr=False)

    def element(self, name: str) -> ElementSpec:
        return self.specs[name]

    def __call__(self, z, tol: float = DEFAULT_TOL) -> dict:
        return {k: self.specs[k].evaluate(z, tol) for k in ELEMENT_NAMES}

    def determinant(self, z, tol: float = DEFAULT_TOL):
        v = self(z, tol)
        return v["A"] * v["D"] - v["B"] * v["C"]

    @property
    def alpha(self) -> float:
        return alpha(self.family, self.c)

    def schedule(self) -> RateSchedule:
        return RateSchedule(self.family, self.c, 0.0)


def matrix(family: str, c: float) -> NevanlinnaMatrix:
    """Modified Nevanlinna matrix of P1 or P2 (pure process, mu0 = 0)."""
    fam = family.upper()
    if not c > 0:
        raise ValueError("c must be > 0")
    if fam == "P1":
        return NevanlinnaMatrix(fam, float(c), _p1_specs(c))
    if fam == "P2":
        return NevanlinnaMatrix(fam, float(c), _p2_specs(c))
    raise ValueError(f"family must be P1 or P2, got {family!r}")


def simplified_elements(c: float, z, tol: float = DEFAULT_TOL):
    """(B~_1, D_1) of P1 from the forms obtained by one integration by parts (c > 1/3).

    B~_1 = -3/B(c+1,1/3) * 3c(3c-1)/(3c+1) * int u^(3c-2) E_1 du
    D_1  =  3/B(c+1/3,2/3) * 3c(3c-1) * z * int u^(3c-2) E_2 du
    """
    if not c > 1 / 3:
        raise ValueError("the simplified forms need c > 1/3")
    b_spec = ElementSpec("B", -3.0 / beta_fn(c + 1, 1 / 3) * 3 * c * (3 * c - 1) / (3 * c + 1), 3 * c - 2, 0.0, 1)
    d_spec = ElementSpec("D", 3.0 / beta_fn(c + 1 / 3, 2 / 3) * 3 * c * (3 * c - 1), 3 * c - 2, 0.0, 2, z_power=1)
    return b_spec.evaluate(z, tol), d_spec.evaluate(z, tol)


def assembled_elements(family: str, c: float, z, tol: float = DEFAULT_TOL) -> dict:
    """The four elements rebuilt from the generating functions at shifted parameters.

    P1: D = z F(c, 0),  C = 1 - (z/mu_1) F(c+1, mu_1),  B~ = -1 + (z/lambda_0) G(c+1/3, lambda_0),
        A~ = G(c+1/3, lambda_0)/lambda_0 - G(c+4/3, lambda_1)/lambda_1.
    P2: the same with F and G exchanged and shifts c+2/3, c+5/3.
    """
    fam = family.upper()
    s = RateSchedule(fam, c)
    lam0, lam1, mu1 = float(s.lam(0)), float(s.lam(1)), float(s.mu(1))
    zs, scalar = _as_zlist(z)
    own, other = (cal_F, cal_G) if fam == "P1" else (cal_G, cal_F)
    d1 = 1 / 3 if fam == "P1" else 2 / 3
    g0 = np.atleast_1d(other(zs, c + d1, lam0, tol))
    g1 = np.atleast_1d(other(zs, c + d1 + 1, lam1, tol))
    out = {
        "A": g0 / lam0 - g1 / lam1,
        "B": -1 + zs / lam0 * g0,
        "C": 1 - zs / mu1 * np.atleast_1d(own(zs, c + 1, mu1, tol)),
        "D": zs * np.atleast_1d(own(zs, c, 0.0, tol)),
    }
    return {k: _finish(v, scalar) for k, v in out.items()}


# ---------------------------------------------------------------------------
# Taylor coefficients


def element_coefficients(spec: ElementSpec, n_max: int) -> list[ScaledCoefficient]:
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    m = n_max + 1 - spec.z_power
    n = np.arange(max(m, 0))
    k = 3 * n + spec.l
    log_i = coefficient_integrals(spec.weight, k) if m > 0 else np.array([])
    log_mag = math.log(abs(spec.prefactor)) + log_i + k * math.log(THETA0) - gammaln(k + 1.0)
    sgn = 1 if spec.prefactor > 0 else -1
    out = [ScaledCoefficient(0, -math.inf)] * spec.z_power
    out += [ScaledCoefficient(int(sgn * (-1) ** j), float(v)) for j, v in zip(n, log_mag)]
    return out[: n_max + 1]


def coefficients(family: str, c: float, element: str, n_max: int) -> list[ScaledCoefficient]:
    """xi_0 .. xi_{n_max} of one element (``"A"``, ``"B"``, ``"C"`` or ``"D"``)."""
    key = element.upper().replace("~", "").replace("TILDE", "")
    if key not in ELEMENT_NAMES:
        raise ValueError(f"element must be one of {ELEMENT_NAMES}")
    return element_coefficients(matrix(family, c).element(key), n_max)


def coefficient_series_value(coeffs: list[ScaledCoefficient], z) -> complex:
    """sum_n xi_n z^n evaluated in log space term by term."""
    z = complex(z)
    if z == 0:
        return complex(coeffs[0].value)
    lz, az = math.log(abs(z)), math.atan2(z.imag, z.real)
    terms = []
    for n, xi in enumerate(coeffs):
        if xi.sign == 0:
            continue
        lm = xi.log_magnitude + n * lz
        if lm < -745:
            continue
        terms.append(xi.sign * math.exp(lm) * complex(math.cos(n * az), math.sin(n * az)))
    return complex(math.fsum(t.real for t in terms), math.fsum(t.imag for t in terms))


# ---------------------------------------------------------------------------
# plain matrix


def alpha(family: str, c: float) -> float:
    """alpha < 0 defined by -1/alpha = sum_{n>=1} 1/(mu_n pi_n)."""
    return -1.0 / alpha_sum(RateSchedule(family, c))


def to_plain(m: NevanlinnaMatrix):
    """Evaluators (A, B) with A = A~ + C/alpha and B = B~ + D/alpha."""
    a = m.alpha

    def A(z, tol: float = DEFAULT_TOL):
        return m.specs["A"].evaluate(z, tol) + m.specs["C"].evaluate(z, tol) / a

    def B(z, tol: float = DEFAULT_TOL):
        return m.specs["B"].evaluate(z, tol) + m.specs["D"].evaluate(z, tol) / a

    return A, B


# ---------------------------------------------------------------------------
# exports


def write_coefficients_csv(path, coeffs: list[ScaledCoefficient]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "sign", "log_abs_xi"])
        for n, xi in enumerate(coeffs):
            w.writerow([n, xi.sign, f"{xi.log_magnitude:.17g}"])


def write_samples_csv(path, zs, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["re_z", "im_z", "re_N", "im_N"])
        for z, v in zip(zs, values):
            z, v = complex(z), complex(v)
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])
