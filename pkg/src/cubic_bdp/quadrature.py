"""Integrals int_0^1 u^a (1-u^3)^b g(u) du with endpoint singularities.

The substitution tau = u^3 turns the weight into tau^((a-2)/3) (1-tau)^b / 3,
and a double-exponential map tau = 1 / (1 + exp(-pi sinh t)) absorbs both
endpoint singularities.  Nodes carry tau and 1 - tau separately so that
theta and theta_hat stay accurate at both ends of [0, 1].

The trapezoid rule in t is refined by halving the step; the difference
between successive levels is the error estimate.  The node sequence is
fixed, so results are reproducible for given inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .specialfns import THETA0, theta_pair_from_tau

__all__ = [
    "SingularWeight",
    "QuadratureError",
    "QuadNodes",
    "integrate",
    "integrate_nodes",
    "coefficient_integral",
    "coefficient_integrals",
    "ScaledCoefficient",
]

_EPS = np.finfo(float).eps
_TAIL_LOG = 50.0  # truncate the t-range where the weight is below e^-50
_H0 = 0.5
_MAX_LEVEL = 9
TOL_FLOOR = 1e-13


class QuadratureError(RuntimeError):
    """Raised when the level-to-level error estimate stalls above tolerance."""


@dataclass(frozen=True)
class SingularWeight:
    """Weight f(u) = u^a (1-u^3)^b with a > -1, b >= -2/3."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a > -1:
            raise ValueError(f"weight exponent a must be > -1, got {self.a}")
        if not self.b >= -2.0 / 3.0 - 1e-15:
            raise ValueError(f"weight exponent b must be >= -2/3, got {self.b}")

    def beta_integral(self) -> float:
        """int_0^1 u^a (1-u^3)^b du = B((a+1)/3, b+1) / 3."""
        p, q = (self.a + 1) / 3.0, self.b + 1.0
        return math.exp(math.lgamma(p) + math.lgamma(q) - math.lgamma(p + q)) / 3.0


@dataclass
class QuadNodes:
    """One batch of quadrature nodes with their log-weights (step included)."""

    tau: np.ndarray
    one_minus_tau: np.ndarray
    log_weight: np.ndarray
    _theta: tuple | None = None

    @property
    def u(self) -> np.ndarray:
        return np.cbrt(self.tau)

    def _thetas(self):
        if self._theta is None:
            self._theta = theta_pair_from_tau(self.tau, self.one_minus_tau)
        return self._theta

    @property
    def theta(self) -> np.ndarray:
        return self._thetas()[0]

    @property
    def theta_hat(self) -> np.ndarray:
        return self._thetas()[1]

    def log_theta_hat_ratio(self) -> np.ndarray:
        """ln(theta_hat / theta0), accurate where theta_hat ~ theta0."""
        th, th_hat = self._thetas()
        lo = self.tau <= 0.5
        out = np.empty_like(th)
        out[lo] = np.log1p(-th[lo] / THETA0)
        with np.errstate(divide="ignore"):
            out[~lo] = np.log(th_hat[~lo] / THETA0)
        return out


def _t_range(w: SingularWeight, extra_lo: float = 0.0) -> tuple[float, float]:
    """Half-widths of the t-interval; ``extra_lo`` widens the u ~ 0 side when the
    integrand is concentrated there and the integral itself is tiny."""
    p = (w.a + 1.0) / 3.0  # exponent of tau after the Jacobian
    q = w.b + 1.0
    return math.asinh((_TAIL_LOG + extra_lo) / (math.pi * p)), math.asinh(_TAIL_LOG / (math.pi * q))


def _nodes_at(w: SingularWeight, t: np.ndarray, h: float) -> QuadNodes:
    s = math.pi * np.sinh(t)
    log_tau = -np.logaddexp(0.0, -s)
    log_omt = -np.logaddexp(0.0, s)
    lw = (
        math.log(h * math.pi / 3.0)
        + np.log(np.cosh(t))
        + (w.a + 1.0) / 3.0 * log_tau
        + (w.b + 1.0) * log_omt
    )
    return QuadNodes(np.exp(log_tau), np.exp(log_omt), lw)


def _level_abscissae(t_lo: float, t_hi: float, level: int) -> tuple[np.ndarray, float]:
    """New abscissae added at a refinement level, and the step at that level."""
    h = _H0 / 2**level
    if level == 0:
        k = np.arange(math.floor(-t_lo / h), math.ceil(t_hi / h) + 1)
        return k * h, h
    k = np.arange(math.floor(-t_lo / h), math.ceil(t_hi / h) + 1)
    k = k[k % 2 != 0]
    return k * h, h


def integrate_nodes(
    w: SingularWeight,
    g: Callable[[QuadNodes], np.ndarray],
    tol: float = 1e-13,
    full_output: bool = False,
    max_level: int = _MAX_LEVEL,
    extra_lo: float = 0.0,
):
    """Integrate f(u) g over [0, 1] where g receives a :class:`QuadNodes` batch.

    ``g`` may return real or complex values, or a 2-d array of shape
    (k, n_nodes) to integrate k functions on the same nodes.  When g decays
    fast away from u = 0 (a boundary layer of width 1/t, say), pass
    ``extra_lo`` ~ (a+1) ln t so the node range reaches far enough.
    """
    if tol < TOL_FLOOR:
        raise ValueError(f"tol must be >= {TOL_FLOOR}")
    t_lo, t_hi = _t_range(w, extra_lo)
    total = None
    l1 = None
    prev = None
    n_eval = 0
    for level in range(max_level + 1):
        t, h = _level_abscissae(t_lo, t_hi, level)
        nodes = _nodes_at(w, t, h)
        vals = np.asarray(g(nodes))
        n_eval += t.size
        wts = np.exp(nodes.log_weight)
        s = vals @ wts
        a = np.abs(vals) @ wts
        if total is None:
            total, l1 = s, a
        else:
            # halving the step: previous sum rescaled by 1/2
            total = 0.5 * total + s
            l1 = 0.5 * l1 + a
        if prev is not None:
            err = np.abs(total - prev)
            scale = np.maximum(tol * np.abs(total), 100 * _EPS * l1)
            if level >= 2 and np.all(err <= scale):
                return (total, float(np.max(err)), n_eval) if full_output else total
        prev = total
    raise QuadratureError(
        f"quadrature did not converge: error estimate {np.max(err):.3e} "
        f"above tolerance after {n_eval} evaluations"
    )


def integrate(w: SingularWeight, g: Callable[[np.ndarray], np.ndarray], tol: float = 1e-13, full_output: bool = False):
    """int_0^1 u^a (1-u^3)^b g(u) du for a continuous, bounded g.

    The error estimate is relative to the value, or to the L1 norm of the
    integrand when cancellation makes that unattainable.
    """
    return integrate_nodes(w, lambda nodes: g(nodes.u), tol=tol, full_output=full_output)


# ---------------------------------------------------------------------------
# coefficient integrals  I_{l,n} = int f(u) theta_hat(u)^(3n+l) du


@dataclass(frozen=True)
class ScaledCoefficient:
    """A real number stored as sign * exp(log_magnitude)."""

    sign: int
    log_magnitude: float

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other):
        if isinstance(other, ScaledCoefficient):
            return ScaledCoefficient(self.sign * other.sign, self.log_magnitude + other.log_magnitude)
        if other == 0:
            return ScaledCoefficient(0, -math.inf)
        return ScaledCoefficient(self.sign * (1 if other > 0 else -1), self.log_magnitude + math.log(abs(other)))

    __rmul__ = __mul__


def _log_integrals_on(nodes: QuadNodes, powers: np.ndarray) -> np.ndarray:
    """ln int f (theta_hat/theta0)^k du for every k in ``powers`` on fixed nodes."""
    lr = nodes.log_theta_hat_ratio()
    # (k, nodes) matrix of log-integrands; everything is positive
    logs = powers[:, None] * lr[None, :] + nodes.log_weight[None, :]
    m = np.max(logs, axis=1)
    return m + np.log(np.sum(np.exp(logs - m[:, None]), axis=1))


def coefficient_integrals(w: SingularWeight, powers, tol: float = 1e-11) -> np.ndarray:
    """ln of int_0^1 f(u) (theta_hat(u)/theta0)^k du for an array of powers k >= 0.

    All integrands are positive, so sums are carried out in log space;
    the step is halved until every entry agrees with the previous level.
    """
    powers = np.asarray(powers, dtype=float)
    # (theta_hat/theta0)^k ~ exp(-k u / theta0) pushes the mass towards u ~ 1/k
    kmax = float(np.max(powers, initial=0.0))
    t_lo, t_hi = _t_range(w, extra_lo=(w.a + 1.0) * math.log1p(kmax))
    prev = None
    for level in range(_MAX_LEVEL + 1):
        t, h = _level_abscissae(t_lo, t_hi, level)
        new = _log_integrals_on(_nodes_at(w, t, h), powers)
        cur = new if prev is None else np.logaddexp(prev - math.log(2.0), new)
        if prev is not None and level >= 3:
            if np.all(np.abs(np.expm1(cur - prev)) <= tol):
                return cur
        prev = cur
    raise QuadratureError("coefficient integrals did not converge")


def coefficient_integral(w: SingularWeight, l: int, n: int, scale_by_theta0: bool = True) -> ScaledCoefficient:
    """I_{l,n} = int_0^1 f(u) theta_hat(u)^(3n+l) du as a ScaledCoefficient.

    With ``scale_by_theta0`` the integrand uses (theta_hat/theta0)^(3n+l) and the
    factor theta0^(3n+l) is restored in log space (the returned value is the
    same; the flag only selects the evaluation route).
    """
    if l not in (0, 1, 2) or n < 0:
        raise ValueError("need l in {0,1,2} and n >= 0")
    k = 3 * n + l
    if scale_by_theta0:
        log_i = float(coefficient_integrals(w, [k])[0])
        return ScaledCoefficient(1, log_i + k * math.log(THETA0))
    val = integrate_nodes(w, lambda nodes: nodes.theta_hat**k, tol=1e-12)
    return ScaledCoefficient(1, math.log(val))


def log_factorials(k) -> np.ndarray:
    return gammaln(np.asarray(k, dtype=float) + 1.0)
