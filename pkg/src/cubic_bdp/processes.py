"""Rate schedules of the two cubic birth-and-death families.

    P1:  lambda_n = (3n+3c+1)^2 (3n+3c+2),   mu_n = (3n+3c-1)(3n+3c)^2
    P2:  lambda_n = (3n+3c+1)(3n+3c+2)^2,    mu_n = (3n+3c)^2 (3n+3c+1)

for n >= 1, with mu_0 a free parameter (0 for the pure process).

All the sequences that matter (pi_n, 1/(lambda_n pi_n), ...) are ratios of
Gamma functions, and their sums converge only algebraically.
:class:`AsymptoticSeq` carries their large-n expansions so that infinite
tails can be summed in closed form with Hurwitz zeta functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli, comb, gammaln, zeta

__all__ = [
    "RateSchedule",
    "lambda_n",
    "mu_n",
    "pi_n",
    "pi_closed_form",
    "pi_array",
    "StieltjesReport",
    "stieltjes_check",
    "kmg_dual",
    "AsymptoticSeq",
    "GammaRatio",
    "alpha_sum",
]

FAMILIES = ("P1", "P2")


@dataclass(frozen=True)
class RateSchedule:
    """Family (P1 or P2), shape parameter c > 0 and free death rate mu0 >= 0."""

    family: str
    c: float
    mu0: float = 0.0

    def __post_init__(self):
        fam = self.family.upper()
        if fam not in FAMILIES:
            raise ValueError(f"family must be P1 or P2, got {self.family!r}")
        object.__setattr__(self, "family", fam)
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not self.mu0 >= 0:
            raise ValueError(f"mu0 must be >= 0, got {self.mu0}")

    # rates are cubic in n; written in the shifted-variable form 27 prod (n + s)
    def birth_shifts(self) -> tuple[float, float, float]:
        c = self.c
        if self.family == "P1":
            return (c + 1 / 3, c + 1 / 3, c + 2 / 3)
        return (c + 1 / 3, c + 2 / 3, c + 2 / 3)

    def death_shifts(self) -> tuple[float, float, float]:
        c = self.c
        if self.family == "P1":
            return (c - 1 / 3, c, c)
        return (c, c, c + 1 / 3)

    def lam(self, n):
        n = np.asarray(n, dtype=float)
        x = 3 * n + 3 * self.c
        if self.family == "P1":
            return (x + 1) ** 2 * (x + 2)
        return (x + 1) * (x + 2) ** 2

    def mu(self, n):
        n = np.asarray(n, dtype=float)
        x = 3 * n + 3 * self.c
        v = (x - 1) * x**2 if self.family == "P1" else x**2 * (x + 1)
        return np.where(n == 0, self.mu0, v)

    def natural_mu0(self) -> float:
        """mu_0 given by the n >= 1 formula at n = 0."""
        x = 3 * self.c
        return (x - 1) * x**2 if self.family == "P1" else x**2 * (x + 1)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RateSchedule":
        d = json.loads(text)
        return cls(d["family"], float(d["c"]), float(d.get("mu0", 0.0)))


def lambda_n(s: RateSchedule, n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(s.lam(n))


def mu_n(s: RateSchedule, n: int) -> float:
    if n < 0:
        raise ValueError("n must be >= 0")
    return float(s.mu(n))


# ---------------------------------------------------------------------------
# Gamma-ratio sequences and their asymptotic expansions


def _bernoulli_poly(m: int, a: float) -> float:
    b = bernoulli(m)
    return float(sum(comb(m, k, exact=True) * b[k] * a ** (m - k) for k in range(m + 1)))


class AsymptoticSeq:
    """f(n) ~ n^(-p) * sum_j coef[j] n^(-j) for large n."""

    def __init__(self, p: float, coef):
        self.p = float(p)
        self.coef = np.asarray(coef, dtype=float)

    def __mul__(self, other: "AsymptoticSeq") -> "AsymptoticSeq":
        m = len(self.coef)
        return AsymptoticSeq(self.p + other.p, np.convolve(self.coef, other.coef)[:m])

    def __call__(self, n):
        n = np.asarray(n, dtype=float)
        x = 1.0 / n
        return n ** (-self.p) * np.polyval(self.coef[::-1], x)

    def tail_sum(self, n0) -> float:
        """sum_{n >= n0} f(n) from the expansion (n0 large)."""
        j = np.arange(len(self.coef))
        return float(np.sum(self.coef * zeta(self.p + j, n0)))

    def tail_seq(self) -> "AsymptoticSeq":
        """Expansion of R(n) = sum_{k >= n} f(k) (Euler-Maclaurin on each power)."""
        m = len(self.coef)
        out = np.zeros(m + 1)
        b = bernoulli(2 * m + 2)
        for j, cj in enumerate(self.coef):
            s = self.p + j
            # zeta(s, n) ~ n^(1-s)/(s-1) + n^(-s)/2 + sum_k B_2k/(2k)! (s)_(2k-1) n^(-s-2k+1)
            out[j] += cj / (s - 1)
            if j + 1 <= m:
                out[j + 1] += cj / 2
            k = 1
            while j + 2 * k <= m:
                poch = math.prod(s + i for i in range(2 * k - 1))
                out[j + 2 * k] += cj * b[2 * k] / math.factorial(2 * k) * poch
                k += 1
        return AsymptoticSeq(self.p - 1, out[:m])


@dataclass(frozen=True)
class GammaRatio:
    """f(n) = exp(log_k) * prod_i Gamma(n + a_i)^(s_i), with sum_i s_i = 0."""

    log_k: float
    factors: tuple  # ((a, s), ...)

    def __mul__(self, other: "GammaRatio") -> "GammaRatio":
        return GammaRatio(self.log_k + other.log_k, self.factors + other.factors)

    def inverse(self) -> "GammaRatio":
        return GammaRatio(-self.log_k, tuple((a, -s) for a, s in self.factors))

    @staticmethod
    def linear(a: float) -> "GammaRatio":
        """The sequence n + a."""
        return GammaRatio(0.0, ((a + 1.0, 1), (a, -1)))

    @staticmethod
    def pochhammer(a: float) -> "GammaRatio":
        """The sequence (a)_n."""
        return GammaRatio(-math.lgamma(a), ((a, 1),))

    def log(self, n):
        n = np.asarray(n, dtype=float)
        return self.log_k + sum(s * gammaln(n + a) for a, s in self.factors)

    def __call__(self, n):
        return np.exp(self.log(n))

    def power(self) -> float:
        """f(n) ~ n^power."""
        return sum(s * (a - 0.5) for a, s in self.factors)

    def asymptotic(self, order: int = 8) -> AsymptoticSeq:
        if abs(sum(s for _, s in self.factors)) > 1e-12:
            raise ValueError("unbalanced Gamma ratio has no power-law expansion")
        # ln f = ln K + power ln n + sum_k c_k n^-k   (DLMF 5.11.8)
        ck = np.zeros(order)
        for k in range(1, order):
            ck[k] = sum(
                s * (-1) ** (k + 1) * _bernoulli_poly(k + 1, a) / (k * (k + 1)) for a, s in self.factors
            )
        # exp of a power series in x = 1/n, truncated
        e = np.zeros(order)
        e[0] = 1.0
        for m in range(1, order):
            e[m] = sum(k * ck[k] * e[m - k] for k in range(1, m + 1)) / m
        return AsymptoticSeq(-self.power(), math.exp(self.log_k) * e)


@lru_cache(maxsize=64)
def _sequences(family: str, c: float) -> dict:
    s = RateSchedule(family, c)
    lam = GammaRatio(math.log(27.0), ())
    for a in s.birth_shifts():
        lam = lam * GammaRatio.linear(a)
    mu = GammaRatio(math.log(27.0), ())
    for a in s.death_shifts():
        mu = mu * GammaRatio.linear(a)
    # pi_n = prod_{k<n} lambda_k / mu_{k+1}
    pi = GammaRatio(0.0, ())
    for a in s.birth_shifts():
        pi = pi * GammaRatio.pochhammer(a)
    for a in s.death_shifts():
        pi = pi * GammaRatio.pochhammer(a + 1).inverse()
    return {"lam": lam, "mu": mu, "pi": pi, "r": (lam * pi).inverse(), "mupi": (mu * pi).inverse()}


def pi_closed_form(s: RateSchedule, n):
    """pi_n through Pochhammer symbols (both families)."""
    c = s.c
    n = np.asarray(n, dtype=float)

    def lp(a):
        return gammaln(n + a) - math.lgamma(a)

    if s.family == "P1":
        val = 2 * (lp(c + 1 / 3) - lp(c + 1))
    else:
        val = lp(c + 1 / 3) + 2 * lp(c + 2 / 3) - 2 * lp(c + 1) - lp(c + 4 / 3)
    out = np.exp(val)
    return out[()] if out.ndim == 0 else out


def pi_array(s: RateSchedule, n_max: int) -> np.ndarray:
    """pi_0 .. pi_{n_max} as a cumulative sum of log(lambda_k / mu_{k+1})."""
    k = np.arange(n_max, dtype=float)
    logs = np.log(s.lam(k)) - np.log(s.mu(k + 1))
    return np.exp(np.concatenate(([0.0], np.cumsum(logs))))


def pi_n(s: RateSchedule, n: int) -> float:
    """pi_n = lambda_0 ... lambda_{n-1} / (mu_1 ... mu_n), computed in log space."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return 1.0
    k = np.arange(n, dtype=float)
    return float(np.exp(math.fsum(np.log(s.lam(k)) - np.log(s.mu(k + 1)))))


def sequence(s: RateSchedule, name: str) -> GammaRatio:
    """Gamma-ratio form of 'lam', 'mu', 'pi', 'r' = 1/(lam pi) or 'mupi' = 1/(mu pi)."""
    return _sequences(s.family, float(s.c))[name]


def alpha_sum(s: RateSchedule, n_direct: int = 2000) -> float:
    """sum_{n>=1} 1/(mu_n pi_n) = -1/alpha, direct partial sum plus asymptotic tail."""
    n = np.arange(1, n_direct + 1, dtype=float)
    pis = pi_array(s, n_direct)[1:]
    head = math.fsum(1.0 / (s.mu(n) * pis))
    tail = sequence(s, "mupi").asymptotic().tail_sum(n_direct + 1)
    return head + tail


# ---------------------------------------------------------------------------
# Stieltjes indeterminacy criterion


@dataclass(frozen=True)
class StieltjesReport:
    sum_pi: float
    sum_recip: float
    slope_pi: float
    slope_recip: float


def stieltjes_check(s: RateSchedule, N: int) -> StieltjesReport:
    """Partial sums of pi_n and 1/(lambda_n pi_n) up to N with log-log tail slopes.

    Both sums converge (indeterminate Stieltjes problem) when the slopes are
    below -1.  The slopes are fitted on n in [N/2, N].
    """
    if N < 100:
        raise ValueError("stieltjes_check needs N >= 100")
    pis = pi_array(s, N)
    n = np.arange(N + 1, dtype=float)
    recip = 1.0 / (s.lam(n[1:]) * pis[1:])
    win = slice(N // 2, N + 1)
    ln = np.log(n[win])
    slope_pi = np.polyfit(ln, np.log(pis[win]), 1)[0]
    slope_recip = np.polyfit(ln, np.log(recip[N // 2 - 1 :]), 1)[0]
    return StieltjesReport(
        sum_pi=math.fsum(pis),
        sum_recip=math.fsum(recip),
        slope_pi=float(slope_pi),
        slope_recip=float(slope_recip),
    )


def kmg_dual(s: RateSchedule) -> RateSchedule:
    """Karlin-McGregor dual: lambda~_n = mu_{n+1}, mu~_n = lambda_n.

    The dual of P1 at c is P2 at c + 1/3 with mu~_0 = lambda_0; the dual of
    P2 at c is P1 at c + 2/3 with mu~_0 = lambda_0.
    """
    if s.mu0 != 0:
        raise ValueError("the dual is only defined here for the pure process (mu0 = 0)")
    lam0 = float(s.lam(0))
    if s.family == "P1":
        return RateSchedule("P2", s.c + 1 / 3, lam0)
    return RateSchedule("P1", s.c + 2 / 3, lam0)
