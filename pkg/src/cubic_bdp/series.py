"""Truncated power series in one formal variable t, and the order-by-order
check of the linear differential systems satisfied by the triplet
generating functions.

The generating functions are

    G_l(t) = sum_n d_{3n+l} t^(3n+3c+l) / (3n+3c+l)!        (P1, d-triplet)

and likewise with the e-triplet for P2.  Factoring out t^(3c+l) and the
power of zeta that makes every coefficient a polynomial in z leaves series
in t^3 with integer exponents only; t D_t acting on G_l becomes
(3c + l) + t D_t on the reduced series.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .polynomials import triplet
from .processes import RateSchedule

__all__ = ["TruncatedSeries", "gl_series", "ode_residual", "sigma_coefficients"]

MAX_ORDER = 200


class TruncatedSeries:
    """c_0 + c_1 t + ... + c_N t^N, with every operation truncated at N."""

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex if np.iscomplexobj(coeffs) else float)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty 1-d sequence")
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def order(self) -> int:
        return self._c.size - 1

    @classmethod
    def monomial(cls, k: int, order: int, value=1.0) -> "TruncatedSeries":
        c = np.zeros(order + 1, dtype=complex if isinstance(value, complex) else float)
        if k <= order:
            c[k] = value
        return cls(c)

    def _check(self, other: "TruncatedSeries"):
        if not isinstance(other, TruncatedSeries):
            raise TypeError("expected a TruncatedSeries")
        if other.order != self.order:
            raise ValueError(f"truncation orders differ: {self.order} vs {other.order}")

    def __add__(self, other):
        if np.isscalar(other):
            c = self._c.astype(np.result_type(self._c, type(other)))
            c[0] += other
            return TruncatedSeries(c)
        self._check(other)
        return TruncatedSeries(self._c + other._c)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self._c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, k) -> "TruncatedSeries":
        return TruncatedSeries(self._c * k)

    def multiply(self, other: "TruncatedSeries") -> "TruncatedSeries":
        self._check(other)
        return TruncatedSeries(np.convolve(self._c, other._c)[: self.order + 1])

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return self.multiply(other)
        return self.scale(other)

    __rmul__ = __mul__

    def differentiate(self) -> "TruncatedSeries":
        if self.order < 1:
            raise ValueError("differentiation needs order >= 1")
        return TruncatedSeries(self._c[1:] * np.arange(1, self.order + 1))

    def euler(self) -> "TruncatedSeries":
        """t d/dt, which keeps the truncation order."""
        return TruncatedSeries(self._c * np.arange(self.order + 1))

    def times_t(self, k: int = 1) -> "TruncatedSeries":
        """Multiply by t^k; the result is known to order N + k."""
        return TruncatedSeries(np.concatenate((np.zeros(k, dtype=self._c.dtype), self._c)))

    def truncate(self, order: int) -> "TruncatedSeries":
        if order > self.order:
            raise ValueError("cannot extend a truncated series")
        return TruncatedSeries(self._c[: order + 1])

    def __call__(self, t):
        return np.polyval(self._c[::-1], t)

    def __repr__(self):
        return f"TruncatedSeries(order={self.order}, coeffs={self._c!r})"


def sigma_coefficients(l: int, order: int) -> TruncatedSeries:
    """Taylor series of sigma_l(u) = sum_n (-1)^n u^(3n+l) / (3n+l)!."""
    c = np.zeros(order + 1)
    for k in range(l, order + 1, 3):
        c[k] = (-1) ** ((k - l) // 3) / math.factorial(k)
    return TruncatedSeries(c)


def _check_order(N: int):
    if not 0 <= N <= MAX_ORDER:
        raise ValueError(f"series order must be in [0, {MAX_ORDER}]")


def gl_series(l: int, z, schedule: RateSchedule, N: int = 60) -> TruncatedSeries:
    """Reduced generating series sum_n g_{l,n} t^(3n), truncated at t^N.

    g_{l,n} = zeta^(0,2,1)[l] t_{3n+l} / (3n+3c+l)!, where t is the d-triplet
    for P1 or the e-triplet for P2.  Each coefficient is a polynomial in z,
    so zeta never appears.
    """
    if l not in (0, 1, 2):
        raise ValueError("l must be 0, 1 or 2")
    _check_order(N)
    z = complex(z)
    nmax = N // 3
    tr = triplet(schedule, z ** (1 / 3) if z != 0 else 0j, nmax)
    c = np.zeros(N + 1, dtype=complex)
    for n in range(nmax + 1):
        log_f = gammaln(3 * n + 3 * schedule.c + l + 1)
        val = tr.scaled[n, l]
        if val == 0:
            continue
        log_mag = math.log(abs(val)) + tr.log_scale[n] - log_f
        if log_mag > 700:
            raise OverflowError(f"series coefficient n={n} exceeds double range")
        c[3 * n] = (val / abs(val)) * math.exp(log_mag)
    return TruncatedSeries(c)


def ode_residual(system: str, z, c: float, mu0: float, N: int = 60) -> float:
    """Largest coefficient of the residuals of the three-equation system.

    In reduced form, with g_l the series of :func:`gl_series` and
    E_k = k + t d/dt:

    P1:  (1-t^3) E_{3c} g0 - t^3 g0 + t^3 g2               = 1/(3c-1)!
         (1-t^3) E_{3c+1} g1 - 2 t^3 g1 + z g0             = mu0/(3c)!
         E_{3c+2} g2 + g1                                  = 0
    P2:  (1-t^3) E_{3c} h0 - 2 t^3 h0 + t^3 h2             = 1/(3c-1)!
         E_{3c+1} h1 + z h0                                = 0
         (1-t^3) E_{3c+2} h2 - t^3 h2 + h1                 = -mu0/(3c+1)!
    """
    system = system.upper()
    s = RateSchedule(system, c, mu0)
    _check_order(N)
    g = [gl_series(l, z, s, N) for l in range(3)]
    one_m_t3 = TruncatedSeries.monomial(0, N) - TruncatedSeries.monomial(3, N)

    def E(k, x):
        return x.euler() + x.scale(k)

    def t3(x):
        return x.times_t(3).truncate(N)

    a = 3 * c
    if system == "P1":
        r = [
            one_m_t3 * E(a, g[0]) - t3(g[0]) + t3(g[2]) - math.exp(-math.lgamma(a)),
            one_m_t3 * E(a + 1, g[1]) - 2 * t3(g[1]) + g[0].scale(z) - mu0 * math.exp(-math.lgamma(a + 1)),
            E(a + 2, g[2]) + g[1],
        ]
    else:
        r = [
            one_m_t3 * E(a, g[0]) - 2 * t3(g[0]) + t3(g[2]) - math.exp(-math.lgamma(a)),
            E(a + 1, g[1]) + g[0].scale(z),
            one_m_t3 * E(a + 2, g[2]) - t3(g[2]) + g[1] + mu0 * math.exp(-math.lgamma(a + 2)),
        ]
    return float(max(np.max(np.abs(x.coeffs)) for x in r))
