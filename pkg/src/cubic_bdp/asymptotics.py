"""Growth of the Nevanlinna matrix elements: order, type and indicator.

For an entire function with Taylor coefficients xi_n,

    order  rho   = limsup n ln n / ln(1/|xi_n|),
    type   sigma = limsup (n / (e rho)) |xi_n|^(rho/n),
    indicator h(phi) = limsup ln|N(r e^{i phi})| / r^rho.

Limits are replaced by finite-window estimators.  Both the order and the
indicator converge logarithmically when read off literally, so the default
estimators fit the known shape of the sub-leading terms instead:

* ln(1/|xi_n|) = (1/rho) n ln n + beta n + kappa ln n + const on n in [N/2, N];
* ln|N(r e^{i phi})| = h s + kappa ln s + const with s = r^(1/3), on a ladder
  of radii, each rung taking the largest value over a short cluster of
  radii to ride over the zeros of oscillating directions.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .nevanlinna import ElementSpec, coefficients, matrix
from .quadrature import ScaledCoefficient, SingularWeight, integrate_nodes
from .specialfns import THETA0

__all__ = [
    "order_estimate",
    "type_estimate",
    "indicator_reference",
    "indicator_estimate",
    "lemma1_ratio",
    "GrowthReport",
    "growth_report",
    "midpoint_grid",
]

MIN_COEFFS = 500
# zeros of an element along a ray near the positive axis are spaced by about
# this much in s = r^(1/3)
ZERO_SPACING = 2 * math.pi / (math.sqrt(3) * THETA0)


def _log_mags(coeffs: Sequence[ScaledCoefficient]) -> np.ndarray:
    if len(coeffs) < MIN_COEFFS:
        raise ValueError(f"need at least {MIN_COEFFS} coefficients")
    lm = np.array([x.log_magnitude if x.sign != 0 else -np.inf for x in coeffs])
    return lm


def _window(lm: np.ndarray, frac: float):
    N = len(lm) - 1
    n = np.arange(N + 1, dtype=float)
    sel = (n >= max(2, int(N * frac))) & np.isfinite(lm)
    if sel.sum() < 10:
        raise ValueError("degenerate coefficients: too few nonzero entries in the tail window")
    return n[sel], lm[sel]


def order_estimate(coeffs: Sequence[ScaledCoefficient], method: str = "fit", window: float = 0.5) -> float:
    """Order from the tail window n in [window*N, N].

    ``fit``   : regression of ln(1/|xi_n|) on (n ln n, n, ln n, 1); returns 1/slope.
    ``proxy`` : max of n ln n / |ln|xi_n|| over the window (the literal limsup).
    ``slope`` : regression of ln(1/|xi_n|)/n on ln n.
    """
    n, lm = _window(_log_mags(coeffs), window)
    y = -lm
    if method == "proxy":
        return float(np.max(n * np.log(n) / np.abs(lm)))
    if method == "slope":
        return float(1.0 / np.polyfit(np.log(n), y / n, 1)[0])
    if method == "fit":
        X = np.column_stack([n * np.log(n), n, np.log(n), np.ones_like(n)])
        coef = np.linalg.lstsq(X, y, rcond=None)[0]
        return float(1.0 / coef[0])
    raise ValueError(f"unknown method {method!r}")


def type_estimate(coeffs: Sequence[ScaledCoefficient], rho: float, method: str = "max", window: float = 0.5) -> float:
    """Type for a given order rho.

    ``max`` : (1/(e rho)) max_n n |xi_n|^(rho/n) over the window.
    ``fit`` : ln(1/|xi_n|) - n ln(n)/rho regressed on (n, ln n, 1); the n-slope
              beta gives sigma = exp(-rho beta - 1) / rho.
    """
    if not rho > 0:
        raise ValueError("rho must be > 0")
    n, lm = _window(_log_mags(coeffs), window)
    if method == "max":
        return float(np.max(np.exp(np.log(n) + rho * lm / n)) / (math.e * rho))
    if method == "fit":
        y = -lm - n * np.log(n) / rho
        X = np.column_stack([n, np.log(n), np.ones_like(n)])
        beta = np.linalg.lstsq(X, y, rcond=None)[0][0]
        return float(math.exp(-rho * beta - 1.0) / rho)
    raise ValueError(f"unknown method {method!r}")


def indicator_reference(phi: float) -> float:
    """theta0 cos((phi - pi)/3) on [0, 2 pi]."""
    if not 0 <= phi <= 2 * math.pi + 1e-12:
        raise ValueError("phi must lie in [0, 2 pi]")
    return THETA0 * math.cos((phi - math.pi) / 3)


def midpoint_grid(k: int = 24) -> np.ndarray:
    """phi_j = (j + 1/2) 2 pi / k; for even k/2 this avoids pi/2 and 3 pi/2."""
    return (np.arange(k) + 0.5) * 2 * math.pi / k


def _log_abs_fn(evaluator) -> Callable[[complex], float]:
    if isinstance(evaluator, ElementSpec):

        def f(z):
            v, m = evaluator.evaluate(z, tol=1e-10, scaled=True)
            return math.log(abs(v)) + m

        return f
    return lambda z: math.log(abs(evaluator(z)))


@dataclass(frozen=True)
class IndicatorEstimate:
    phi: float
    h: float  # fitted growth rate
    raw: float  # ln|N| / r^(1/3) at the largest radius
    kappa: float  # fitted coefficient of ln r^(1/3)


def indicator_estimate(
    evaluator,
    phi: float,
    r_ladder: Sequence[float] | None = None,
    cluster: int = 7,
    details: bool = False,
):
    """Indicator of an element in direction phi from a ladder of radii.

    ``evaluator`` is an :class:`ElementSpec` (evaluated in log-magnitude form,
    safe at any radius) or a plain callable z -> complex.
    """
    if not 0 <= phi <= 2 * math.pi + 1e-12:
        raise ValueError("phi must lie in [0, 2 pi]")
    if r_ladder is None:
        r_ladder = np.geomspace(1e9 / 512, 1e9, 6)
    rl = np.asarray(r_ladder, dtype=float)
    if rl.size < 3 or np.any(np.diff(rl) <= 0):
        raise ValueError("r_ladder must hold at least 3 increasing radii")
    if rl[-1] > 1e12:
        raise ValueError("largest radius must be <= 1e12")
    f = _log_abs_fn(evaluator)
    e = complex(math.cos(phi), math.sin(phi))
    s = np.cbrt(rl)
    ys = []
    for sk in s:
        pts = sk + np.linspace(-ZERO_SPACING / 2, ZERO_SPACING / 2, cluster) if cluster > 1 else [sk]
        ys.append(max(f(p**3 * e) for p in pts if p > 0))
    X = np.column_stack([s, np.log(s), np.ones_like(s)])
    coef = np.linalg.lstsq(X, np.array(ys), rcond=None)[0]
    raw = f(rl[-1] * e) / s[-1]
    out = IndicatorEstimate(float(phi), float(coef[0]), float(raw), float(coef[1]))
    return out if details else out.h


def lemma1_ratio(a: float, b: float, phi: float, t: float, tol: float = 1e-12) -> float:
    """t^(a+1) |int_0^1 u^a (1-u^3)^b exp(-t e^{i phi} theta(u)) du| / Gamma(a+1).

    Tends to 1 as t grows, for |phi| < pi/2.
    """
    if not abs(phi) < math.pi / 2:
        raise ValueError("phi must lie in (-pi/2, pi/2)")
    z = complex(math.cos(phi), math.sin(phi))
    w = SingularWeight(a, b)
    val = integrate_nodes(
        w, lambda nodes: np.exp(-t * z * nodes.theta), tol=tol, extra_lo=(a + 1) * math.log1p(t)
    )
    return float(math.exp((a + 1) * math.log(t) + math.log(abs(val)) - math.lgamma(a + 1)))


# ---------------------------------------------------------------------------


@dataclass
class GrowthReport:
    family: str
    c: float
    element: str
    order_estimate: float
    type_estimate: float
    indicator_samples: list = field(default_factory=list)  # (phi, h, reference)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["phi", "h_estimate", "h_reference"])
            for phi, h, ref in self.indicator_samples:
                w.writerow([f"{phi:.17g}", f"{h:.17g}", f"{ref:.17g}"])


def growth_report(
    family: str,
    c: float,
    element: str,
    n_coeffs: int = 2000,
    n_phi: int = 24,
    r_max: float = 1e9,
    workers: int = 1,
) -> GrowthReport:
    """Order and type from ``n_coeffs`` Taylor coefficients, indicator on a midpoint grid of ``n_phi`` directions.

    ``workers`` > 1 spreads the directions over a thread pool; results do not
    depend on it.
    """
    co = coefficients(family, c, element, n_coeffs)
    rho = order_estimate(co)
    typ = type_estimate(co, 1 / 3)
    spec = matrix(family, c).element(element.upper())
    ladder = np.geomspace(r_max / 512, r_max, 6)
    phis = [float(p) for p in midpoint_grid(n_phi)] if n_phi else []

    def one(phi):
        return (phi, indicator_estimate(spec, phi, ladder), indicator_reference(phi))

    if workers > 1 and len(phis) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(one, phis))
    else:
        samples = [one(p) for p in phis]
    return GrowthReport(family.upper(), float(c), element.upper(), rho, typ, samples)
