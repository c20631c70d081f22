"""Command-line front end.

    python3 -m cubic_bdp <command> [options]

Commands: rates, polys, genfun, matrix, coeffs, growth, spectrum,
transition, verify.  Tables go to ``--out`` (or stdout) as CSV or JSON with
17 significant digits, so identical options give byte-identical files.
In CSV mode, summary values that do not fit the table (fits, warnings) are
written to stderr.

Exit codes: 0 success, 1 numerical failure (or a failed verify check),
2 usage error.
"""

from __future__ import annotations

import argparse
import cmath
import io
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import asymptotics, nevanlinna, polynomials, processes, quadrature, series, spectral, specialfns
from .quadrature import SingularWeight

__all__ = ["RunConfig", "Table", "main", "parse_complex", "COMMANDS", "OPERATIONS_BY_COMMAND"]

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# parsing and configuration

_COMPLEX_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


def parse_complex(text: str) -> complex:
    """Parse a literal such as ``1+2i``, ``-3.5``, ``2i``, ``i`` or ``1e3-4e-2i``."""
    t = text.strip().replace(" ", "")
    if not t:
        raise UsageError("empty complex literal")
    if t.endswith(("i", "j")):
        body = t[:-1]
        if body in ("", "+", "-"):
            body += "1"
        elif body[-1] in "+-":
            body += "1"
        try:
            return complex(body + "j")
        except ValueError:
            raise UsageError(f"not a complex literal: {text!r}") from None
    if not _COMPLEX_RE.match(t):
        raise UsageError(f"not a complex literal: {text!r}")
    return complex(float(t), 0.0)


def parse_complex_list(text: str) -> tuple[complex, ...]:
    return tuple(parse_complex(p) for p in text.split(",") if p.strip())


def worker_count() -> int:
    """Thread cap from CUBIC_BDP_THREADS (default: CPU count)."""
    raw = os.environ.get("CUBIC_BDP_THREADS")
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"CUBIC_BDP_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"CUBIC_BDP_THREADS must be a positive integer, got {raw!r}")
    return n


@dataclass(frozen=True)
class RunConfig:
    command: str
    family: str = "P1"
    c: float = 1.0
    mu0: float = 0.0
    z: tuple = (0j,)
    nmax: int | None = None
    tol: float | None = None
    out: str | None = None
    format: str = "csv"
    element: str = "D"
    xmax: float = 1e5
    tau: float = 0.0
    mode: str = "B"
    weights: str = "series"
    t: tuple = (0.01,)
    truncn: int | None = None
    nphi: int = 24
    rmax: float = 1e9
    quick: bool = False
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.family not in ("P1", "P2"):
            raise UsageError("family must be p1 or p2")
        if not (math.isfinite(self.c) and self.c > 0):
            raise UsageError("--c must be a finite number > 0")
        if not (math.isfinite(self.mu0) and self.mu0 >= 0):
            raise UsageError("--mu0 must be a finite number >= 0")
        if self.nmax is not None and self.nmax < 0:
            raise UsageError("--nmax must be >= 0")
        if self.tol is not None and not 0 < self.tol < 1:
            raise UsageError("--tol must lie in (0, 1)")
        if self.format not in ("csv", "json"):
            raise UsageError("--format must be csv or json")
        if self.element not in nevanlinna.ELEMENT_NAMES:
            raise UsageError("--element must be one of A, B, C, D")
        if not self.xmax > 0:
            raise UsageError("--xmax must be > 0")
        if self.mode not in ("B", "D"):
            raise UsageError("--mode must be B or D")
        if any(not tv > 0 for tv in self.t):
            raise UsageError("--t values must be > 0")
        if self.truncn is not None and self.truncn < 200:
            raise UsageError("--truncn must be >= 200")
        if self.nphi < 0 or not self.rmax > 0 or self.rmax > 1e12:
            raise UsageError("--nphi must be >= 0 and --rmax in (0, 1e12]")
        if any(not cmath.isfinite(zv) for zv in self.z):
            raise UsageError("--z values must be finite")
        if self.command in ("matrix", "coeffs", "growth", "spectrum", "transition") and self.mu0 != 0:
            raise UsageError(f"{self.command} works with the pure process; drop --mu0")
        return self

    def schedule(self) -> processes.RateSchedule:
        return processes.RateSchedule(self.family, self.c, self.mu0)


@dataclass
class Table:
    columns: list
    rows: list
    summary: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# formatting


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.17g}"
    return str(v)


def _json(v) -> str:
    """JSON text with floats written to 17 significant digits (non-finite -> null)."""
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return _fmt(v) if math.isfinite(v) else "null"
    if isinstance(v, (complex, np.complexfloating)):
        return _json({"re": v.real, "im": v.imag})
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def render(table: Table, cfg: RunConfig) -> str:
    if cfg.format == "json":
        doc = {
            "command": cfg.command,
            "family": cfg.family,
            "c": cfg.c,
            "mu0": cfg.mu0,
            "records": [dict(zip(table.columns, r)) for r in table.rows],
        }
        doc.update(table.summary)
        return _json(doc) + "\n"
    buf = io.StringIO()
    buf.write(",".join(table.columns) + "\n")
    for r in table.rows:
        buf.write(",".join(_fmt(x) for x in r) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_rates(cfg: RunConfig) -> Table:
    s = cfg.schedule()
    nmax = 20 if cfg.nmax is None else cfg.nmax
    rows = [(n, processes.lambda_n(s, n), processes.mu_n(s, n), processes.pi_n(s, n)) for n in range(nmax + 1)]
    rep = processes.stieltjes_check(s, max(100_000, nmax))
    summary = {
        "sum_pi": rep.sum_pi,
        "sum_recip": rep.sum_recip,
        "slope_pi": rep.slope_pi,
        "slope_recip": rep.slope_recip,
    }
    if s.mu0 == 0:
        d = processes.kmg_dual(s)
        summary["dual"] = {"family": d.family, "c": d.c, "mu0": d.mu0}
    return Table(["n", "lambda_n", "mu_n", "pi_n"], rows, summary)


def cmd_polys(cfg: RunConfig) -> Table:
    s = cfg.schedule()
    nmax = 20 if cfg.nmax is None else cfg.nmax
    rows = []
    worst = 0.0
    for z in cfg.z:
        res = polynomials.eval_poly_sequence(s, z, nmax)
        for n, v in enumerate(res.values):
            rows.append((z.real, z.imag, n, v.real, v.imag))
        if res.overflow:
            raise ArithmeticError(f"polynomial values overflow before n = {nmax} at z = {z}")
        worst = max(worst, polynomials.check_relation(s, z, min(nmax, 60)))
    return Table(["z_re", "z_im", "n", "F_re", "F_im"], rows, {"triplet_relation_max_rel_err": worst})


def _genfun(cfg: RunConfig):
    if cfg.family == "P1":
        return nevanlinna.cal_F, nevanlinna.cal_F_alt, 1.0
    return nevanlinna.cal_G, nevanlinna.cal_G_alt, 1.0 / 3.0


def cmd_genfun(cfg: RunConfig) -> Table:
    s = cfg.schedule()
    tol = cfg.tol or nevanlinna.DEFAULT_TOL
    integral, alt, c_min = _genfun(cfg)
    zs = np.array(cfg.z, dtype=complex)
    iv = np.atleast_1d(integral(zs, cfg.c, cfg.mu0, tol))
    sv = np.atleast_1d(polynomials.sum_polynomials(s, zs, N=cfg.nmax or None))
    use_alt = cfg.c > c_min and cfg.mu0 > 0
    av = np.atleast_1d(alt(zs, cfg.c, cfg.mu0, tol)) if use_alt else None
    cols = ["z_re", "z_im", "integral_re", "integral_im", "series_re", "series_im"]
    if use_alt:
        cols += ["alt_re", "alt_im"]
    rows = []
    for k, z in enumerate(zs):
        r = [z.real, z.imag, iv[k].real, iv[k].imag, sv[k].real, sv[k].imag]
        if use_alt:
            r += [av[k].real, av[k].imag]
        rows.append(tuple(r))
    return Table(cols, rows, {"max_abs_diff": float(np.max(np.abs(iv - sv)))})


def cmd_matrix(cfg: RunConfig) -> Table:
    m = nevanlinna.matrix(cfg.family, cfg.c)
    tol = cfg.tol or nevanlinna.DEFAULT_TOL
    zs = np.array(cfg.z, dtype=complex)
    v = m(zs, tol)
    v = {k: np.atleast_1d(x) for k, x in v.items()}
    pa, pb = nevanlinna.to_plain(m)
    A, B = np.atleast_1d(pa(zs, tol)), np.atleast_1d(pb(zs, tol))
    rows = []
    for k, z in enumerate(zs):
        det = v["A"][k] * v["D"][k] - v["B"][k] * v["C"][k]
        r = [z.real, z.imag]
        for x in (v["A"][k], v["B"][k], v["C"][k], v["D"][k], A[k], B[k], det):
            r += [x.real, x.imag]
        rows.append(tuple(r))
    cols = ["z_re", "z_im"]
    for name in ("A_tilde", "B_tilde", "C", "D", "A", "B", "det"):
        cols += [f"{name}_re", f"{name}_im"]
    return Table(cols, rows, {"alpha": nevanlinna.alpha(cfg.family, cfg.c)})


def cmd_coeffs(cfg: RunConfig) -> Table:
    nmax = 100 if cfg.nmax is None else cfg.nmax
    co = nevanlinna.coefficients(cfg.family, cfg.c, cfg.element, nmax)
    rows = [(n, x.sign, x.log_magnitude, x.value if x.log_magnitude > -700 else 0.0) for n, x in enumerate(co)]
    return Table(["n", "sign", "log_abs", "value"], rows, {"element": cfg.element})


def cmd_growth(cfg: RunConfig) -> Table:
    n = 2000 if cfg.nmax is None else cfg.nmax
    if n < asymptotics.MIN_COEFFS:
        raise UsageError(f"growth needs --nmax >= {asymptotics.MIN_COEFFS}")
    rep = asymptotics.growth_report(cfg.family, cfg.c, cfg.element, n, cfg.nphi, cfg.rmax, workers=cfg.workers)
    rows = [(phi, h, ref, h - ref) for phi, h, ref in rep.indicator_samples]
    summary = {
        "element": rep.element,
        "order_estimate": rep.order_estimate,
        "type_estimate": rep.type_estimate,
        "theta0": specialfns.theta0(),
    }
    return Table(["phi", "h_estimate", "h_reference", "difference"], rows, summary)


def _measure(cfg: RunConfig, x_max: float | None = None):
    m = nevanlinna.matrix(cfg.family, cfg.c)
    pts = spectral.find_mass_points(m, x_max or cfg.xmax, cfg.tau, cfg.mode)
    if cfg.mode == "D":
        pts = np.concatenate(([0.0], pts))
    meas = spectral.masses(pts, cfg.schedule(), tail_tol=cfg.tol or 1e-8, method=cfg.weights, m=m)
    return meas


def cmd_spectrum(cfg: RunConfig) -> Table:
    meas = _measure(cfg)
    rows = [(k, x, r) for k, (x, r) in enumerate(zip(meas.points, meas.weights))]
    summary = {"total_mass": meas.total_mass(), "points": int(meas.points.size)}
    pos = meas.points[meas.points > 0]
    if pos.size >= 13:
        summary["cubic_fit"] = spectral.cubic_coefficient_fit(pos)
    if meas.meta.get("unconverged"):
        summary["unconverged_points"] = len(meas.meta["unconverged"])
    return Table(["k", "x_k", "rho_k"], rows, summary)


def cmd_transition(cfg: RunConfig) -> Table:
    s = cfg.schedule()
    meas = _measure(cfg)
    nmax = 5 if cfg.nmax is None else cfg.nmax
    cols = ["m", "n", "t", "P"]
    if cfg.truncn:
        cols += ["P_generator", "abs_diff"]
    rows = []
    for t in cfg.t:
        for m_ in range(nmax + 1):
            for n_ in range(nmax + 1):
                p = spectral.transition_probability(spectral.TransitionQuery(m_, n_, t), meas, s)
                r = [m_, n_, t, p]
                if cfg.truncn:
                    g = spectral.generator_probability(s, m_, n_, t, cfg.truncn)
                    r += [g, abs(p - g)]
                rows.append(tuple(r))
    return Table(cols, rows, {"measure_points": int(meas.points.size)})


# ---------------------------------------------------------------------------
# verify


@dataclass
class Check:
    name: str
    residual: float
    tolerance: float
    note: str = ""

    @property
    def passed(self) -> bool:
        return math.isfinite(self.residual) and self.residual <= self.tolerance


def _rel(a, b) -> float:
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


_Z_SMALL = (0.5 + 0.25j, -1.5 + 0j, 2.0 - 1.0j, 3.0 + 2.0j)
_Z_MED = (1.0 + 2.0j, -4.0 + 0.5j, 7.0 - 3.0j, 9.5 + 0j)
_Z_LARGE = (12.0 + 5.0j, -20.0 + 3.0j, 0.0 - 24.0j)


def _verify_checks(cfg: RunConfig) -> list[tuple[str, float, Callable[[], float]]]:
    """(name, tolerance, thunk) for every invariant in the suite."""
    fam, c, mu0 = cfg.family, cfg.c, cfg.mu0
    s = cfg.schedule()
    pure = processes.RateSchedule(fam, c)
    th0 = specialfns.theta0()
    checks = []

    def add(name, tol):
        def deco(fn):
            checks.append((name, tol, fn))
            return fn

        return deco

    @add("theta0_quadrature", 1e-10)
    def _():
        q = quadrature.integrate(SingularWeight(0.0, -2 / 3), lambda u: np.ones_like(u))
        closed = specialfns.gamma_fn(1 / 3) ** 3 / (2 * math.pi * math.sqrt(3))
        return max(_rel(q, closed), _rel(th0, closed))

    @add("beta_and_pochhammer", 1e-12)
    def _():
        g = specialfns.gamma_fn
        b = _rel(specialfns.beta_fn(c + 1 / 3, 2 / 3), g(c + 1 / 3) * g(2 / 3) / g(c + 1))
        p = _rel(specialfns.pochhammer(c, 7), g(c + 7) / g(c))
        return max(b, p)

    @add("sigma_closed_vs_series", 1e-10)
    def _():
        worst = 0.0
        for u in (0.3, -2.0, 5.0 + 1.0j, 12.0 - 7.0j, 20.0j, -14.0 + 14.0j):
            for l in range(3):
                a, b = specialfns.sigma(l, u), specialfns.sigma_series(l, u, terms=120)
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
        return worst

    @add("theta_split", 1e-13)
    def _():
        t = np.linspace(0.0, 1.0, 41)
        a = float(np.max(np.abs(specialfns.theta(t) + specialfns.theta_hat(t) - th0)))
        b = abs(specialfns.theta_diff(0.9, 0.2) - (specialfns.theta(0.9) - specialfns.theta(0.2)))
        return max(a, b)

    @add("series_product_rule", 1e-12)
    def _():
        a = series.TruncatedSeries(np.linspace(1.0, 2.0, 12))
        b = series.TruncatedSeries(np.cos(np.arange(12.0)))
        lhs = (a * b).differentiate()
        rhs = a.truncate(10) * b.differentiate() + a.differentiate() * b.truncate(10)
        return float(np.max(np.abs((lhs - rhs).coeffs)))

    @add("rates_and_pi", 1e-12)
    def _():
        worst = 0.0
        for n in range(1, 50):
            lam = 27 * math.prod(n + x for x in s.birth_shifts())
            mu = 27 * math.prod(n + x for x in s.death_shifts())
            worst = max(worst, _rel(processes.lambda_n(s, n), lam), _rel(processes.mu_n(s, n), mu))
            worst = max(worst, _rel(processes.pi_n(s, n), processes.pi_closed_form(s, n)))
        return worst

    @add("karlin_mcgregor_dual_rates", 1e-12)
    def _():
        d = processes.kmg_dual(pure)
        n = np.arange(30)
        return max(_rel(d.lam(n), pure.mu(n + 1)), _rel(d.mu(n[1:]), pure.lam(n[1:])))

    @add("stieltjes_tail_slope", 0.05)
    def _():
        rep = processes.stieltjes_check(s, 100_000)
        return abs(rep.slope_pi - (-4 / 3 if fam == "P1" else -5 / 3))

    @add("triplet_zeta_rotation", 1e-12)
    def _():
        zeta = 1.3 * cmath.exp(0.4j)
        a = polynomials.triplet(s, zeta, 15)
        b = polynomials.triplet(s, zeta * cmath.exp(2j * math.pi / 3), 15)
        return float(np.max(np.abs(a.scaled - b.scaled) / np.maximum(np.abs(a.scaled), 1e-300)))

    @add("polynomial_triplet_relation", 1e-8)
    def _():
        return max(polynomials.check_relation(s, z, 12) for z in _Z_SMALL + _Z_MED)

    @add("ode_system_residual", 1e-10)
    def _():
        return max(series.ode_residual(fam, z, c, mu0, 60) for z in _Z_SMALL)

    @add("gl_series_constant_term", 1e-12)
    def _():
        g0 = series.gl_series(0, 1.0 + 1.0j, s, 30)
        return abs(g0.coeffs[0] - math.exp(-math.lgamma(3 * c + 1)))

    integral, alt, c_min = _genfun(cfg)

    @add("generating_function_vs_sum", 1e-6)
    def _():
        zs = np.array(_Z_SMALL + _Z_MED)
        iv = integral(zs, c, mu0)
        sv = polynomials.sum_polynomials(s, zs)
        return float(np.max(np.abs(iv - sv) / np.maximum(1.0, np.abs(sv))))

    if c > c_min and mu0 > 0:

        @add("generating_function_second_route", 1e-8)
        def _():
            zs = np.array(_Z_SMALL)
            return float(np.max(np.abs(alt(zs, c, mu0) - (1 - zs / mu0 * integral(zs, c, mu0)))))

    m = nevanlinna.matrix(fam, c)

    @add("matrix_normalization", 1e-10)
    def _():
        v = m(0.0)
        return max(abs(v["C"] - 1), abs(v["B"] + 1), abs(v["D"]))

    @add("matrix_determinant", 1e-6)
    def _():
        zs = np.array(_Z_SMALL + _Z_MED + _Z_LARGE)
        return float(np.max(np.abs(m.determinant(zs) - 1)))

    @add("alpha_and_plain_matrix", 1e-8)
    def _():
        a = nevanlinna.alpha(fam, c)
        v0 = m(0.0)
        pa, pb = nevanlinna.to_plain(m)
        zs = np.array(_Z_SMALL)
        v = m(zs)
        det = pa(zs) * v["D"] - pb(zs) * v["C"]
        return max(abs(v0["A"] + 1 / a) * abs(a), abs(pa(0.0)), float(np.max(np.abs(det - 1))))

    @add("kernel_vs_sigma", 1e-12)
    def _():
        worst = 0.0
        for z in _Z_MED:
            zeta = nevanlinna.principal_cbrt(z)
            for w in (0.1, 0.9, th0):
                for l in range(3):
                    ref = specialfns.sigma(l, zeta * w) / zeta**l
                    worst = max(worst, abs(nevanlinna.entire_kernel(l, z, w) - ref) / max(1.0, abs(ref)))
        return worst

    if fam == "P1" and c > 1 / 3:

        @add("integrated_by_parts_forms", 1e-8)
        def _():
            zs = np.array(_Z_SMALL + _Z_MED[:2])
            b1, d1 = nevanlinna.simplified_elements(c, zs)
            v = m(zs)
            return max(_rel(b1, v["B"]), _rel(d1[np.abs(zs) > 0], v["D"][np.abs(zs) > 0]))

    @add("coefficient_integral_routes", 1e-9)
    def _():
        w = SingularWeight(3 * c - 1, -2 / 3)
        worst = 0.0
        for n in (0, 3, 10, 20):
            for l in range(3):
                a = quadrature.coefficient_integral(w, l, n, scale_by_theta0=True)
                b = quadrature.coefficient_integral(w, l, n, scale_by_theta0=False)
                worst = max(worst, abs(math.expm1(a.log_magnitude - b.log_magnitude)))
        return worst

    @add("coefficients_vs_quadrature", 1e-6)
    def _():
        worst = 0.0
        zs = (1.0 + 2.0j, -4.0 + 0.5j, 7.0 - 3.0j, 0.0 + 10.0j)
        for el in nevanlinna.ELEMENT_NAMES:
            co = nevanlinna.coefficients(fam, c, el, 200)
            for z in zs:
                a = nevanlinna.coefficient_series_value(co, z)
                b = m.element(el).evaluate(z)
                worst = max(worst, abs(a - b) / max(1.0, abs(b)))
        return worst

    coeff_cache = {}

    def coeffs(el):
        if el not in coeff_cache:
            coeff_cache[el] = nevanlinna.coefficients(fam, c, el, 2000)
        return coeff_cache[el]

    @add("order_one_third", 0.01)
    def _():
        return max(abs(asymptotics.order_estimate(coeffs(el)) * 3 - 1) for el in nevanlinna.ELEMENT_NAMES)

    @add("type_theta0", 0.02)
    def _():
        return max(abs(asymptotics.type_estimate(coeffs(el), 1 / 3) / th0 - 1) for el in nevanlinna.ELEMENT_NAMES)

    if cfg.quick:
        return checks

    @add("indicator_profile", 0.02 * th0)
    def _():
        spec = m.element("D")
        grid = asymptotics.midpoint_grid(24)
        return max(
            abs(asymptotics.indicator_estimate(spec, grid[j]) - asymptotics.indicator_reference(grid[j]))
            for j in (0, 11, 15, 23)
        )

    meas_cache = {}

    def measure():
        if "m" not in meas_cache:
            pts = spectral.find_mass_points(m, (spectral.MASS_SPACING * 40) ** 3)
            meas_cache["m"] = spectral.masses(pts, pure)
        return meas_cache["m"]

    @add("mass_points_nonnegative", 1e-10)
    def _():
        return max(0.0, -float(measure().points[0]))

    @add("mass_point_spacing", 0.05)
    def _():
        s3 = np.cbrt(measure().points)
        return float(np.max(np.abs(np.diff(s3)[19:] / spectral.MASS_SPACING - 1)))

    @add("zeros_interlace", 0.0)
    def _():
        xb = spectral.find_mass_points(m, (spectral.MASS_SPACING * 32) ** 3)[:30]
        xd = spectral.find_mass_points(m, (spectral.MASS_SPACING * 32) ** 3, mode="D")[:30]
        merged = np.sort(np.concatenate((xb, xd)))
        tags = np.isin(merged, xb).astype(int)
        return float(np.sum(tags[1:] == tags[:-1]))

    @add("total_mass", 1e-6)
    def _():
        return max(0.0, measure().total_mass() - 1.0)

    @add("discrete_orthogonality", 1e-4)
    def _():
        meas = measure()
        F = np.array([polynomials.eval_poly_sequence(pure, x, 5).values.real for x in meas.points]).T
        pis = np.array([processes.pi_n(pure, j) for j in range(6)])
        G = (F * meas.weights) @ F.T / np.sqrt(np.outer(pis, pis))
        return float(np.max(np.abs(G - np.eye(6))))

    @add("generator_cross_check", 1e-6)
    def _():
        return max(spectral.generator_cross_check(mm, nn, 1e-4, 300, pure, measure()) for mm, nn in ((0, 0), (1, 2)))

    @add("small_time_limit", 1e-4)
    def _():
        return max(
            abs(spectral.transition_probability(spectral.TransitionQuery(a, b, 1e-8), measure(), pure) - (a == b))
            for a in range(4)
            for b in range(4)
        )

    @add("kolmogorov_forward_residual", 1e-5)
    def _():
        return spectral.kolmogorov_residual(measure(), pure, 3, 0.01)

    return checks


def run_verify(cfg: RunConfig) -> list[Check]:
    out = []
    for name, tol, fn in _verify_checks(cfg):
        try:
            out.append(Check(name, float(fn()), tol))
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            out.append(Check(name, math.inf, tol, f"{type(exc).__name__}: {exc}"))
    return out


def cmd_verify(cfg: RunConfig) -> Table:
    checks = run_verify(cfg)
    rows = [(ch.name, ch.residual, ch.tolerance, "PASS" if ch.passed else "FAIL", ch.note) for ch in checks]
    failed = [ch.name for ch in checks if not ch.passed]
    return Table(["check", "residual", "tolerance", "status", "note"], rows, {"failed": failed})


def _verify_text(table: Table) -> str:
    w = max(len(r[0]) for r in table.rows) + 2
    lines = [f"{'check':<{w}}{'residual':>12}{'tolerance':>12}  status"]
    for name, res, tol, status, note in table.rows:
        lines.append(f"{name:<{w}}{res:>12.3e}{tol:>12.1e}  {status}" + (f"  ({note})" if note else ""))
    return "\n".join(lines) + "\n"


COMMANDS: dict[str, Callable[[RunConfig], Table]] = {
    "rates": cmd_rates,
    "polys": cmd_polys,
    "genfun": cmd_genfun,
    "matrix": cmd_matrix,
    "coeffs": cmd_coeffs,
    "growth": cmd_growth,
    "spectrum": cmd_spectrum,
    "transition": cmd_transition,
    "verify": cmd_verify,
}

# which library operations each command calls directly; the test-suite checks
# both that this covers the public operations and that the calls really happen
OPERATIONS_BY_COMMAND = {
    "rates": ["processes.lambda_n", "processes.mu_n", "processes.pi_n", "processes.stieltjes_check", "processes.kmg_dual"],
    "polys": ["polynomials.eval_poly_sequence", "polynomials.check_relation"],
    "genfun": ["nevanlinna.cal_F", "nevanlinna.cal_G", "polynomials.sum_polynomials"],
    "matrix": ["nevanlinna.matrix", "nevanlinna.to_plain", "nevanlinna.alpha"],
    "coeffs": ["nevanlinna.coefficients"],
    "growth": ["asymptotics.growth_report"],
    "spectrum": ["spectral.find_mass_points", "spectral.masses", "spectral.cubic_coefficient_fit"],
    "transition": ["spectral.transition_probability", "spectral.generator_probability"],
    "verify": [
        "specialfns.gamma_fn",
        "specialfns.beta_fn",
        "specialfns.pochhammer",
        "specialfns.sigma",
        "specialfns.theta",
        "specialfns.theta_hat",
        "specialfns.theta0",
        "specialfns.theta_diff",
        "series.gl_series",
        "series.ode_residual",
        "polynomials.triplet",
        "quadrature.integrate",
        "quadrature.coefficient_integral",
        "nevanlinna.entire_kernel",
        "nevanlinna.simplified_elements",
        "asymptotics.order_estimate",
        "asymptotics.type_estimate",
        "asymptotics.indicator_estimate",
        "asymptotics.indicator_reference",
        "spectral.generator_cross_check",
    ],
}


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--family", type=str.lower, choices=["p1", "p2"], default="p1")
    common.add_argument("--c", type=float, default=1.0, help="shape parameter c > 0")
    common.add_argument("--mu0", type=float, default=0.0, help="death rate out of state 0")
    common.add_argument("--z", type=parse_complex_list, default=(0j,), help="comma-separated a+bi values")
    common.add_argument("--nmax", type=int, default=None, help="largest index (meaning depends on the command)")
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")

    p = argparse.ArgumentParser(prog="cubic-bdp", description="Cubic birth-and-death process toolkit.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("rates", parents=[common], help="birth/death rates, pi_n and tail slopes")
    sub.add_parser("polys", parents=[common], help="polynomials F_n(z)")
    sub.add_parser("genfun", parents=[common], help="sum of F_n(z): integral form against the series")
    sub.add_parser("matrix", parents=[common], help="Nevanlinna matrix values at --z")
    for name in ("coeffs", "growth"):
        sp = sub.add_parser(name, parents=[common], help="Taylor coefficients" if name == "coeffs" else "order, type and indicator")
        sp.add_argument("--element", type=str.upper, choices=list(nevanlinna.ELEMENT_NAMES), default="D")
        if name == "growth":
            sp.add_argument("--nphi", type=int, default=24)
            sp.add_argument("--rmax", type=float, default=1e9)
    for name in ("spectrum", "transition"):
        sp = sub.add_parser(name, parents=[common], help="N-extremal measure" if name == "spectrum" else "transition probabilities")
        sp.add_argument("--xmax", type=float, default=1e5 if name == "spectrum" else (spectral.MASS_SPACING * 40) ** 3)
        sp.add_argument("--tau", type=float, default=0.0)
        sp.add_argument("--mode", type=str.upper, choices=["B", "D"], default="B")
        sp.add_argument("--weights", choices=["series", "nevanlinna"], default="series")
        if name == "transition":
            sp.add_argument("--t", type=lambda v: tuple(float(x) for x in v.split(",")), default=(0.01,))
            sp.add_argument("--truncn", type=int, default=None, help="also run the truncated-generator check")
    sp = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    sp.add_argument("--quick", action="store_true", help="skip the indicator and spectral checks")
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if v is not None or k in ("nmax", "tol", "out", "truncn")}
    kw["family"] = ns.family.upper()
    kw["workers"] = worker_count()
    return RunConfig(**kw).validate()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = config_from_args(ns)
        table = COMMANDS[cfg.command](cfg)
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure in {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    if cfg.command == "verify" and cfg.format == "csv" and cfg.out is None:
        text = _verify_text(table)
    else:
        text = render(table, cfg)
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.format == "csv":
        for k, v in table.summary.items():
            if k != "failed":
                print(f"{k}: {_json(v)}", file=sys.stderr)
    if cfg.command == "verify" and table.summary["failed"]:
        print("failed checks: " + ", ".join(table.summary["failed"]), file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
