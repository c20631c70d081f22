"""Elementary special functions: Gamma/Beta/Pochhammer, the order-3
trigonometric functions sigma_l, and the theta family

    theta(t)     = int_0^t (1 - u^3)^(-2/3) du,
    theta_hat(t) = theta0 - theta(t),
    theta0       = Gamma(1/3)^3 / (2 pi sqrt(3)).

Everything here is vectorised over numpy arrays where that is useful for
quadrature, and scalar-safe otherwise.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy.special import betainc

__all__ = [
    "gamma_fn",
    "log_factorial",
    "beta_fn",
    "log_beta",
    "pochhammer",
    "sigma",
    "sigma_series",
    "THETA0",
    "theta0",
    "theta",
    "theta_hat",
    "theta_diff",
    "theta_pair_from_tau",
]

SQRT3 = math.sqrt(3.0)
# the three cube roots of -1: -1, j, conj(j) with j = exp(i pi/3)
_J = cmath.exp(1j * math.pi / 3)
_OMEGAS = (-1.0 + 0j, _J, _J.conjugate())


def gamma_fn(x: float) -> float:
    """Gamma function for real x > 0."""
    if not x > 0:
        raise ValueError(f"gamma_fn needs x > 0, got {x}")
    if x > 171.0:
        raise OverflowError(f"Gamma({x}) overflows; use log_factorial")
    return math.gamma(x)


def log_factorial(alpha):
    """ln((alpha)!) = ln Gamma(alpha + 1); accepts arrays."""
    if np.ndim(alpha) == 0:
        return math.lgamma(alpha + 1.0)
    from scipy.special import gammaln

    return gammaln(np.asarray(alpha, dtype=float) + 1.0)


def log_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise ValueError(f"Beta needs a, b > 0, got ({a}, {b})")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def beta_fn(a: float, b: float) -> float:
    """Euler Beta function B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)."""
    if not (a > 0 and b > 0):
        raise ValueError(f"Beta needs a, b > 0, got ({a}, {b})")
    if a + b < 170.0:
        return math.gamma(a) * math.gamma(b) / math.gamma(a + b)
    return math.exp(log_beta(a, b))


def pochhammer(a: float, n: int) -> float:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1); (a)_0 = 1."""
    if n < 0:
        raise ValueError("pochhammer needs n >= 0")
    if n <= 200:
        return math.prod(a + k for k in range(n))
    return math.exp(math.lgamma(a + n) - math.lgamma(a))


# ---------------------------------------------------------------------------
# trigonometric functions of order 3


def sigma(l: int, u):
    """sigma_l(u) = sum_n (-1)^n u^(3n+l) / (3n+l)!, from the exponential form.

    sigma_l(u) = (1/3) sum_{w^3 = -1} w^(-l) exp(w u).
    Accepts complex scalars or arrays.
    """
    if l not in (0, 1, 2):
        raise ValueError("l must be 0, 1 or 2")
    u = np.asarray(u, dtype=complex)
    out = sum(w ** (-l) * np.exp(w * u) for w in _OMEGAS) / 3.0
    return out[()] if out.ndim == 0 else out


def sigma_series(l: int, u: complex, terms: int = 60) -> complex:
    """Power-series evaluation of sigma_l with compensated summation.

    Kept as an independent oracle for :func:`sigma`.
    """
    if l not in (0, 1, 2):
        raise ValueError("l must be 0, 1 or 2")
    u = complex(u)
    # term_n = (-1)^n u^(3n+l)/(3n+l)!, built by ratio to avoid big factorials
    term = u**l / math.factorial(l)
    re, im = [], []
    for n in range(terms):
        re.append(term.real)
        im.append(term.imag)
        k = 3 * n + l
        term = -term * u**3 / ((k + 1) * (k + 2) * (k + 3))
    return complex(math.fsum(re), math.fsum(im))


# ---------------------------------------------------------------------------
# theta family

THETA0 = math.gamma(1.0 / 3.0) ** 3 / (2.0 * math.pi * SQRT3)
_THIRD = 1.0 / 3.0
_SERIES_TERMS = 160


def theta0() -> float:
    """theta0 = int_0^1 (1-u^3)^(-2/3) du = Gamma(1/3)^3 / (2 pi sqrt 3)."""
    return THETA0


def _phi_series(s):
    """Phi(s) = (1/3) int_0^s v^(-2/3) (1-v)^(-2/3) dv for 0 <= s <= ~0.75.

    Phi(u^3) = theta(u); the series is sum_k (2/3)_k s^(k+1/3) / (k! (3k+1)).
    """
    s = np.asarray(s, dtype=float)
    acc = np.zeros_like(s)
    coef = 1.0  # (2/3)_k / k!
    power = np.ones_like(s)
    for k in range(_SERIES_TERMS):
        acc = acc + coef * power / (3 * k + 1)
        coef *= (k + 2.0 / 3.0) / (k + 1.0)
        power = power * s
        if k > 8 and float(np.max(power, initial=0.0)) * coef < 1e-18:
            break
    return np.cbrt(s) * acc


def _phi_beta(s):
    """Phi(s) through the regularized incomplete Beta function."""
    return THETA0 * betainc(_THIRD, _THIRD, np.asarray(s, dtype=float))


def _check_unit(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > 1) or np.any(~np.isfinite(t)):
        raise ValueError("theta functions are defined on [0, 1]")
    return t


def theta(t):
    """theta(t) = int_0^t (1-u^3)^(-2/3) du on [0, 1].

    Series for t <= 0.9, theta0 - theta_hat(t) above.
    """
    t = _check_unit(t)
    out = np.empty_like(t)
    lo = t <= 0.9
    out[lo] = _phi_series(t[lo] ** 3)
    hi = ~lo
    if np.any(hi):
        out[hi] = THETA0 - _theta_hat_beta(t[hi])
    return out[()] if out.ndim == 0 else out


def _theta_hat_beta(t):
    # 1 - t^3 with no cancellation near t = 1
    omt3 = (1.0 - t) * (1.0 + t + t * t)
    return _phi_beta(omt3)


def theta_hat(t):
    """theta_hat(t) = theta0 - theta(t), computed independently of theta.

    Incomplete-Beta form for t > 0.5, series complement below.
    """
    t = _check_unit(t)
    out = np.empty_like(t)
    hi = t > 0.5
    out[hi] = _theta_hat_beta(t[hi])
    lo = ~hi
    out[lo] = THETA0 - _phi_series(t[lo] ** 3)
    return out[()] if out.ndim == 0 else out


def theta_diff(t: float, u: float) -> float:
    """Theta(t, u) = theta(t) - theta(u) for 0 <= u <= t <= 1."""
    if u > t:
        raise ValueError("theta_diff needs u <= t")
    if u > 0.5:
        return float(theta_hat(u) - theta_hat(t))
    return float(theta(t) - theta(u))


def theta_pair_from_tau(tau, one_minus_tau):
    """(theta, theta_hat) at u = tau^(1/3), given tau and 1 - tau separately.

    Quadrature nodes carry 1 - tau to full relative precision, which keeps
    theta_hat accurate next to u = 1 and theta accurate next to u = 0.
    """
    tau = np.asarray(tau, dtype=float)
    omt = np.asarray(one_minus_tau, dtype=float)
    th = np.empty_like(tau)
    th_hat = np.empty_like(tau)
    lo = tau <= 0.5
    th[lo] = _phi_series(tau[lo])
    th_hat[lo] = THETA0 - th[lo]
    hi = ~lo
    th_hat[hi] = _phi_beta(omt[hi])
    th[hi] = THETA0 - th_hat[hi]
    return th, th_hat
