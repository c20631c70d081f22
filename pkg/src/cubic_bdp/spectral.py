"""N-extremal measures, Karlin-McGregor transition probabilities and
independent checks against the truncated generator.

An N-extremal solution of the moment problem sits on the zeros of
B~ + tau D (tau = 0 by default) or, in the limiting case, on the zeros of D,
which include x = 0.  The mass at a support point x is

    rho(x) = 1 / sum_n F_n(x)^2 / pi_n = 1 / (B~ D' - B~' D)(x).

Transition probabilities follow from

    P_{m,n}(t) = (1/pi_m) sum_k rho_k exp(-x_k t) F_m(x_k) F_n(x_k).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .nevanlinna import NevanlinnaMatrix, matrix
from .polynomials import christoffel_sum_with_error, christoffel_sum, eval_poly_sequence, kernel_sum
from .processes import RateSchedule
from .specialfns import THETA0

__all__ = [
    "MASS_SPACING",
    "SpectralError",
    "CoverageError",
    "find_mass_points",
    "refine_brackets",
    "DiscreteMeasure",
    "masses",
    "n_extremal_measure",
    "TransitionQuery",
    "transition_probability",
    "transition_table",
    "generator_probability",
    "generator_cross_check",
    "kolmogorov_residual",
    "chapman_kolmogorov_residual",
    "cubic_coefficient_fit",
    "write_measure_csv",
    "write_transition_csv",
]

MASS_SPACING = 2 * math.pi / (math.sqrt(3) * THETA0)  # asymptotic gap of x_k^(1/3)
_GRID_STEP = MASS_SPACING / 8
_BATCH = 64


class SpectralError(RuntimeError):
    """Bracketing, summation or truncation failed."""


class CoverageError(SpectralError):
    """The measure does not reach far enough for the requested spectral sum."""


def _combo(m: NevanlinnaMatrix, tau: float, mode: str):
    mode = mode.upper()
    if mode not in ("B", "D"):
        raise ValueError("mode must be 'B' (zeros of B~ + tau D) or 'D' (zeros of D)")
    b, d = m.element("B"), m.element("D")

    def f(xs):
        if mode == "D":
            v, _ = d.evaluate(xs, scaled=True, tol=1e-12)
            return np.real(v)
        vb, _ = b.evaluate(xs, scaled=True, tol=1e-12)
        if tau == 0:
            return np.real(vb)
        vd, _ = d.evaluate(xs, scaled=True, tol=1e-12)
        return np.real(vb + tau * vd)

    return f


def find_mass_points(m: NevanlinnaMatrix, x_max: float, tau: float = 0.0, mode: str = "B") -> np.ndarray:
    """Zeros in (0, x_max] of B~ + tau D (mode 'B') or of D (mode 'D').

    The scan runs on a grid uniform in x^(1/3) with step 1/8 of the
    asymptotic gap, on values scaled by exp(-M(x)) so that nothing overflows.
    All sign changes are refined together by :func:`refine_brackets` to
    relative 1e-13.
    """
    if not x_max > 0:
        raise ValueError("x_max must be > 0")
    f = _combo(m, tau, mode)
    s = np.arange(1e-2, np.cbrt(x_max) + _GRID_STEP, _GRID_STEP)
    x = np.minimum(s**3, x_max)
    x = np.unique(x)
    vals = np.concatenate([f(x[i : i + _BATCH]) for i in range(0, x.size, _BATCH)])
    sgn = np.sign(vals)
    if np.any(sgn == 0):
        # exact hits are zeros themselves; nudge to keep brackets strict
        sgn[sgn == 0] = 1
    idx = np.nonzero(sgn[:-1] != sgn[1:])[0]
    return refine_brackets(f, x[idx], x[idx + 1], vals[idx], vals[idx + 1])


def refine_brackets(f, a, b, fa, fb, rtol: float = 1e-13, max_iter: int = 200) -> np.ndarray:
    """Illinois (modified false position) on many brackets at once.

    ``f`` maps an array of abscissae to an array of values.  Every step keeps
    a sign change inside each bracket, so the result stays bracketed like
    bisection but converges superlinearly.
    """
    a, b = np.array(a, dtype=float), np.array(b, dtype=float)
    fa, fb = np.array(fa, dtype=float), np.array(fb, dtype=float)
    side = np.zeros(a.size, dtype=int)
    root = np.full(a.size, np.nan)
    active = np.ones(a.size, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        i = np.nonzero(active)[0]
        c = (a[i] * fb[i] - b[i] * fa[i]) / (fb[i] - fa[i])
        # fall back to the midpoint if the secant leaves the bracket
        bad = ~((c > a[i]) & (c < b[i]))
        c[bad] = 0.5 * (a[i][bad] + b[i][bad])
        fc = np.asarray(f(c), dtype=float)
        for j, k in enumerate(i):
            if fc[j] == 0:
                root[k], active[k] = c[j], False
                continue
            if np.sign(fc[j]) == np.sign(fb[k]):
                b[k], fb[k] = c[j], fc[j]
                if side[k] == 1:
                    fa[k] *= 0.5
                side[k] = 1
            else:
                a[k], fa[k] = c[j], fc[j]
                if side[k] == -1:
                    fb[k] *= 0.5
                side[k] = -1
            if b[k] - a[k] <= rtol * abs(c[j]):
                root[k], active[k] = c[j], False
    if active.any():
        bad = np.nonzero(active)[0]
        raise SpectralError(f"unresolved brackets: {[(a[k], b[k]) for k in bad]}")
    return root


@dataclass
class DiscreteMeasure:
    """Points x_1 < x_2 < ... with positive weights rho_k."""

    points: np.ndarray
    weights: np.ndarray
    rel_err: np.ndarray | None = None  # estimated relative error of each weight
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.points.shape != self.weights.shape:
            raise ValueError("points and weights must have the same length")
        if np.any(np.diff(self.points) <= 0):
            raise ValueError("points must be strictly increasing")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")

    def __len__(self):
        return self.points.size

    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def integrate(self, values) -> float:
        """sum_k rho_k values_k."""
        return math.fsum(self.weights * np.asarray(values, dtype=float))


def masses(
    points,
    schedule: RateSchedule,
    tail_tol: float = 1e-8,
    method: str = "series",
    m: NevanlinnaMatrix | None = None,
) -> DiscreteMeasure:
    """Weights rho_k = 1 / sum_n F_n(x_k)^2 / pi_n at the given support points.

    ``series`` sums the polynomials directly with a closed-form tail and a
    Richardson step, and repeats the step one level coarser; the gap between
    the two serves as the error estimate.  Points where it exceeds ``tail_tol`` are flagged in
    ``meta["unconverged"]``.  ``nevanlinna`` uses 1 / (B~' D - B~ D')
    instead (pure processes only).
    """
    x = np.asarray(points, dtype=float)
    if method == "series":
        rich, est = christoffel_sum_with_error(schedule, x)
        if not np.all(np.isfinite(rich)) or np.any(rich <= 0):
            raise SpectralError("weight series did not produce a positive finite sum")
        err = est / rich
        w = 1.0 / rich
        meta = {"method": "series", "unconverged": [float(v) for v in x[err > tail_tol]]}
        return DiscreteMeasure(x, w, err, meta)
    if method == "nevanlinna":
        if schedule.mu0 != 0:
            raise ValueError("the Nevanlinna route is for pure processes (mu0 = 0)")
        m = m or matrix(schedule.family, schedule.c)
        b, d = m.element("B"), m.element("D")
        vb, sh = b.evaluate(x, scaled=True)
        vd, _ = d.evaluate(x, scaled=True)
        db, _ = b.derivative(x, scaled=True)
        dd, _ = d.derivative(x, scaled=True)
        wr = np.real(db * vd - vb * dd)
        if np.any(wr <= 0):
            raise SpectralError("non-positive Wronskian at a support point")
        w = np.exp(-np.log(wr) - 2 * np.asarray(sh))
        return DiscreteMeasure(x, w, None, {"method": "nevanlinna"})
    raise ValueError(f"unknown method {method!r}")


def n_extremal_measure(
    family: str,
    c: float,
    x_max: float,
    tau: float = 0.0,
    mode: str = "B",
    method: str = "series",
) -> DiscreteMeasure:
    """Support points and weights of one N-extremal solution.

    In mode 'D' the point x = 0 (a zero of D) is included, with mass
    1 / sum_n pi_n.
    """
    m = matrix(family, c)
    pts = find_mass_points(m, x_max, tau, mode)
    if mode.upper() == "D":
        pts = np.concatenate(([0.0], pts))
    meas = masses(pts, RateSchedule(family, c), method=method, m=m)
    meas.meta.update({"family": family.upper(), "c": c, "tau": tau, "mode": mode.upper()})
    return meas


# ---------------------------------------------------------------------------
# transition probabilities


@dataclass(frozen=True)
class TransitionQuery:
    m: int
    n: int
    t: float

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError("states must be >= 0")
        if not self.t > 0:
            raise ValueError("t must be > 0")


def _poly_matrix(schedule: RateSchedule, x: np.ndarray, nmax: int) -> np.ndarray:
    """F_j(x_k) for j <= nmax, shape (nmax+1, len(x))."""
    return np.array([eval_poly_sequence(schedule, xv, nmax).values.real for xv in x]).T


def _pi(schedule: RateSchedule, n: int) -> float:
    from .processes import pi_n

    return pi_n(schedule, n)


def _check_coverage(terms: np.ndarray, total: float, where: str):
    tail = np.max(np.abs(terms[-3:])) if terms.size >= 3 else np.inf
    if not tail <= 1e-16 * max(1.0, abs(total)):
        raise CoverageError(f"{where}: last spectral terms {tail:.3e} not negligible; raise x_max")


def transition_probability(q: TransitionQuery, measure: DiscreteMeasure, schedule: RateSchedule) -> float:
    """(1/pi_m) sum_k rho_k exp(-x_k t) F_m(x_k) F_n(x_k).

    The measure must extend far enough that the last summands are below
    1e-16 relative to the result.
    """
    x = measure.points
    F = _poly_matrix(schedule, x, max(q.m, q.n))
    terms = measure.weights * np.exp(-x * q.t) * F[q.m] * F[q.n] / _pi(schedule, q.m)
    total = math.fsum(terms)
    _check_coverage(terms, total, "transition_probability")
    return total


def transition_table(measure: DiscreteMeasure, schedule: RateSchedule, nmax: int, t: float, dt_order: int = 0) -> np.ndarray:
    """Matrix P[m, n](t) for m, n <= nmax (or its dt_order-th time derivative)."""
    x = measure.points
    F = _poly_matrix(schedule, x, nmax)
    pis = np.array([_pi(schedule, j) for j in range(nmax + 1)])
    w = measure.weights * np.exp(-x * t) * (-x) ** dt_order
    last = np.abs(w[-3:, None] * F[:, -3:].T).max() if x.size >= 3 else np.inf
    P = (F * w) @ F.T / pis[:, None]
    if not last * np.max(np.abs(F[:, -3:])) <= 1e-16 * max(1.0, np.max(np.abs(P))):
        raise CoverageError("transition_table: measure does not reach far enough")
    return P


def _uniformized(schedule: RateSchedule, m: int, t: float, truncN: int):
    """Row m of exp(t Q) for the generator truncated to states 0..truncN."""
    k = np.arange(truncN + 1, dtype=float)
    lam, mu = schedule.lam(k), schedule.mu(k)
    diag = -(lam + mu)
    rate = float(np.max(lam + mu))
    lt = rate * t
    kmax = int(lt + 12 * math.sqrt(lt) + 50)
    v = np.zeros(truncN + 1)
    v[m] = 1.0
    out = np.zeros_like(v)
    for j in range(kmax + 1):
        lw = -lt + j * math.log(lt) - gammaln(j + 1.0) if lt > 0 else (0.0 if j == 0 else -np.inf)
        if lw > -745:
            out += math.exp(lw) * v
        # v <- v (I + Q/rate)
        nv = v * (1 + diag / rate)
        nv[1:] += v[:-1] * lam[:-1] / rate
        nv[:-1] += v[1:] * mu[1:] / rate
        v = nv
    return out


def generator_probability(schedule: RateSchedule, m: int, n: int, t: float, truncN: int = 300) -> float:
    """P_{m,n}(t) from exp(tQ) on the truncated chain, by uniformization.

    The probability that leaked out through state truncN bounds the
    truncation error; a leak above 1e-8 raises :class:`SpectralError`.
    """
    if truncN < 200:
        raise ValueError("truncN must be >= 200")
    if t == 0:
        return 1.0 if m == n else 0.0
    row = _uniformized(schedule, m, t, truncN)
    if schedule.mu0 == 0:
        leak = 1.0 - math.fsum(row)
        if leak > 1e-8:
            raise SpectralError(f"truncation bound violated: leaked mass {leak:.3e}")
    return float(row[n])


def generator_cross_check(m: int, n: int, t: float, truncN: int, schedule: RateSchedule, measure: DiscreteMeasure) -> float:
    """|spectral P_{m,n}(t) - (exp(tQ_truncN))_{m,n}|."""
    spec = transition_probability(TransitionQuery(m, n, t), measure, schedule)
    return abs(spec - generator_probability(schedule, m, n, t, truncN))


def kolmogorov_residual(measure: DiscreteMeasure, schedule: RateSchedule, nmax: int, t: float, h: float | None = None) -> float:
    """Max over m, n <= nmax of |dP/dt - (lambda_{n-1} P_{m,n-1} + mu_{n+1} P_{m,n+1} - (lambda_n + mu_n) P_{m,n})|.

    dP/dt is a fourth-order central difference of the spectral sum.
    """
    h = h or 1e-3 * t
    P = [transition_table(measure, schedule, nmax + 1, t + k * h) for k in (-2, -1, 1, 2)]
    dP = (P[0] - 8 * P[1] + 8 * P[2] - P[3]) / (12 * h)
    P0 = transition_table(measure, schedule, nmax + 1, t)
    worst = 0.0
    for m_ in range(nmax + 1):
        for n_ in range(nmax + 1):
            rhs = -(float(schedule.lam(n_)) + float(schedule.mu(n_))) * P0[m_, n_]
            rhs += float(schedule.mu(n_ + 1)) * P0[m_, n_ + 1]
            if n_ > 0:
                rhs += float(schedule.lam(n_ - 1)) * P0[m_, n_ - 1]
            worst = max(worst, abs(dP[m_, n_] - rhs))
    return worst


def chapman_kolmogorov_residual(measure: DiscreteMeasure, schedule: RateSchedule, nmax: int, t: float, s: float) -> float:
    """Max over m, n <= nmax of |P(t+s) - sum_j P_{m,j}(t) P_{j,n}(s)|.

    The sum over all intermediate states j is the bilinear series
    sum_j F_j(x) F_j(y) / pi_j (direct part plus closed-form tail).
    """
    x = measure.points
    F = _poly_matrix(schedule, x, nmax)
    pis = np.array([_pi(schedule, j) for j in range(nmax + 1)])
    wt = measure.weights * np.exp(-x * t)
    ws = measure.weights * np.exp(-x * s)
    keep_t = wt > 1e-18 * wt.max()
    keep_s = ws > 1e-18 * ws.max()
    K = kernel_sum(schedule, x[keep_t], x[keep_s])
    # sum_j P_{m,j}(t) P_{j,n}(s) = (1/pi_m) sum_{k,l} wt_k ws_l F_m(x_k) K_kl F_n(x_l)
    lhs = (F[:, keep_t] * wt[keep_t]) @ K @ (F[:, keep_s] * ws[keep_s]).T / pis[:, None]
    direct = transition_table(measure, schedule, nmax, t + s)
    return float(np.max(np.abs(direct - lhs)))


def cubic_coefficient_fit(points, k0: int = 10) -> dict:
    """Fit x_k^(1/3) = a k + b over k >= k0 and report a^3 next to (2 pi/(sqrt(3) theta0))^3.

    Reported only; no claim is made about how a depends on c.
    """
    x = np.asarray(points, dtype=float)
    x = x[x > 0]
    k = np.arange(1, x.size + 1, dtype=float)
    sel = k >= k0
    if sel.sum() < 3:
        raise ValueError("not enough points beyond k0")
    a, b = np.polyfit(k[sel], np.cbrt(x[sel]), 1)
    return {"a": float(a), "b": float(b), "cubic_coefficient": float(a**3), "reference": MASS_SPACING**3}


def write_measure_csv(path, measure: DiscreteMeasure) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "x_k", "rho_k"])
        for k, (x, r) in enumerate(zip(measure.points, measure.weights)):
            w.writerow([k, f"{x:.17g}", f"{r:.17g}"])


def write_transition_csv(path, rows) -> None:
    """rows: iterable of (m, n, t, P)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "n", "t", "P"])
        for m_, n_, t, p in rows:
            w.writerow([m_, n_, f"{t:.17g}", f"{p:.17g}"])
