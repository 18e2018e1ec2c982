"""Closed-form mean and variance of the interference measure over the CUE.

The polynomial parts of the moments depend only on ``(n, m)``; they are built
exactly over the rationals from the diagram table and the counting
combinators, and only the temperature factors are evaluated in floating point.
Writing ``h^(2s) = f_r + g_r`` (the f- and g-ratios of the thermal module), the
variance becomes ``f_r * V_f + g_r * V_g`` with exact ``V_f, V_g``, which avoids
subtracting two nearly equal floats.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import thermal
from .weingarten import monomial_average

# Coefficient of the B1/B2 terms in the second moment.  The value 2 follows from
# <I^2> = (A + 2B)/Z^4; the alternative 1 disagrees with exact enumeration.
C_B = 2

VARIANCE_TOL = 1e-12


def falling_product(n: int, i: int) -> int:
    """``n[i] = n (n-1) ... (n-i)``: i+1 factors, the number of injective maps into n values."""
    if n < 0 or i < 0:
        raise ValueError("falling_product needs n >= 0 and i >= 0")
    return math.prod(range(n - i, n + 1))


def _fall(n: int, blocks: int) -> int:
    # injective assignments of `blocks` distinct labels from n values
    return falling_product(n, blocks - 1) if blocks else 1


DIAGRAM_TABLE = {
    "F11": lambda N: 1 / (N * (N + 1)),
    "E2": lambda N: -1 / (N * (N * N - 1)),
    "D13": lambda N: 2 / ((N + 3) * (N + 2) * (N + 1) * N),
    "D14": lambda N: 1 / ((N + 3) * (N + 2) * (N + 1) * N),
    "Da22": lambda N: (N * N + N + 2) / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "Db22": lambda N: 8 / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "Dc22": lambda N: -4 / ((N + 3) * (N + 2) * (N * N - 1) * N),
    "Da23": lambda N: (N + 1) / ((N + 3) * (N + 2) * N * N * (N - 1)),
    "Db23": lambda N: -2 / ((N + 3) * (N + 2) * (N * N - 1) * N),
    "Dc23": lambda N: -1 / ((N + 3) * (N + 2) * (N + 1) * N * N),
    "Da24": lambda N: 1 / ((N + 3) * (N - 1) * N * N),
    "Db24": lambda N: -1 / ((N + 3) * (N + 2) * (N * N - 1) * N),
    "Dc24": lambda N: 2 / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "Da32": lambda N: -1 / ((N + 3) * (N + 2) * (N + 1) * N * N),
    "Db32": lambda N: 4 / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "Da33": lambda N: (3 * N - 1) / ((N + 3) * (N * N - 4) * (N * N - 1) * N * N),
    "Db33": lambda N: -(N * N + 1) / ((N + 3) * (N * N - 4) * (N * N - 1) * N * N),
    "Dc33": lambda N: 2 / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "Da34": lambda N: 1 / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "Db34": lambda N: -(N * N + 2 * N + 2) / ((N + 3) * (N * N - 4) * (N * N - 1) * N * N),
    "D42": lambda N: 2 / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "D43": lambda N: 1 / ((N + 3) * (N + 2) * (N * N - 1) * N * N),
    "D44": lambda N: (N * N + 6) / ((N * N - 9) * (N * N - 4) * (N * N - 1) * N * N),
}


def diagram(name: str, N, exact: bool = False):
    """Closed-form value of a named diagram at dimension ``N``."""
    f = DIAGRAM_TABLE[name]
    return f(Fraction(N)) if exact else f(float(N))


def _combine(terms, N: int):
    # sum of coef * diagram(N) in exact arithmetic; zero coefficients are skipped
    # so that diagrams with a pole at small N never get evaluated there
    return sum((Fraction(c) * diagram(name, N, exact=True) for c, name in terms if c), Fraction(0))


def _outer(m: int):
    # coefficients shared by the "collapsed" combinators
    return (
        _fall(m, 4) + 4 * _fall(m, 3) + 2 * _fall(m, 2),
        2 * _fall(m, 3) + 4 * _fall(m, 2),
        _fall(m, 2) + m,
    )


def a11(m: int, N: int) -> Fraction:
    """Equal to B1."""
    f = lambda b: _fall(m, b)  # noqa: E731
    return _combine(
        [(f(4), "D44"), (4 * f(3), "Da34"), (2 * f(3), "Db34"),
         (f(2), "Da24"), (2 * f(2), "Dc24"), (4 * f(2), "Db24"), (m, "D14")],
        N,
    )


def a31(m: int, N: int) -> Fraction:
    c1, c2, c3 = _outer(m)
    return _combine([(c1, "D44"), (c2, "Db34"), (c3, "Da24")], N)


def a32(m: int, N: int) -> Fraction:
    c1, c2, c3 = _outer(m)
    return _combine([(c1, "D43"), (c2, "Db33"), (c3, "Da23")], N)


def a33(m: int, N: int) -> Fraction:
    c1, c2, c3 = _outer(m)
    return _combine([(c1, "D42"), (c2, "Da32"), (c3, "Da22")], N)


def b2(m: int, N: int) -> Fraction:
    c1, c2, c3 = _outer(m)
    return _combine([(c1, "D44"), (c2, "Da34"), (c3, "Dc24")], N)


def _set_partitions(k: int):
    # restricted growth strings: labels[0] = 0, labels[i] <= max(labels[:i]) + 1
    def grow(prefix, top):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for v in range(top + 2):
            yield from grow(prefix + [v], max(top, v))

    yield from grow([0], 0)


# column structure (cols, conj_cols) of the environment sums; the four row
# indices (mu, rho, p, r) share one system index and run over 1..m each
_A11_COLUMNS = ((1, 2, 3, 4), (3, 4, 1, 2))
_A12_COLUMNS = ((1, 2, 3, 1), (2, 1, 1, 3))
_A13_COLUMNS = ((1, 2, 2, 1), (2, 1, 1, 2))


def environment_sum(columns, m: int, N: int) -> Fraction:
    """``sum_{mu, rho, p, r = 1..m}`` of the degree-4 Haar average with the given columns.

    Grouped by which of the four environment indices coincide: each set
    partition contributes (number of injective labelings) x (its average).
    """
    cols, conj_cols = columns
    total = Fraction(0)
    for labels in _set_partitions(4):
        blocks = max(labels) + 1
        if blocks > m:
            continue
        rows = tuple(v + 1 for v in labels)
        total += _fall(m, blocks) * monomial_average(rows, cols, rows, conj_cols, N, exact=True)
    return total


@lru_cache(maxsize=4096)
def a12(m: int, N: int) -> Fraction:
    return environment_sum(_A12_COLUMNS, m, N)


@lru_cache(maxsize=4096)
def a13(m: int, N: int) -> Fraction:
    return environment_sum(_A13_COLUMNS, m, N)


@dataclass(frozen=True)
class MomentTerms:
    """Exact ``(n, m)`` parts: ``<I> = h^s M``, ``<I^2> = n (f_r P_f + g_r P_g)``."""

    n: int
    m: int
    M: Fraction
    P_f: Fraction
    P_g: Fraction

    @property
    def V_f(self) -> Fraction:
        return self.n * self.P_f - self.M**2

    @property
    def V_g(self) -> Fraction:
        return self.n * self.P_g - self.M**2


def _check_nm(n, m):
    for name, v in (("n", n), ("m", m)):
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be an integer >= 1, got {v!r}")
    return int(n), int(m)


def _mean_part(n: int, m: int) -> Fraction:
    N = n * m
    return Fraction(0) if N == 1 else Fraction(n * m * (n - 1) ** 2, N * N - 1)


@lru_cache(maxsize=8192)
def moment_terms(n: int, m: int, c_b: int = C_B) -> MomentTerms:
    n, m = _check_nm(n, m)
    N = n * m
    M = _mean_part(n, m)
    if n == 1:
        return MomentTerms(n, m, M, Fraction(0), Fraction(0))
    fn = lambda b: _fall(n, b)  # noqa: E731
    sq = n * n * (n - 1) ** 2
    v11 = a11(m, N)
    v31 = a31(m, N)
    # a12 needs three distinct system column values, so it only exists for n >= 3
    a1 = fn(4) * v11 + (4 * fn(3) * a12(m, N) if fn(3) else 0) + 2 * fn(2) * a13(m, N)
    a3 = fn(4) * v31 + 4 * fn(3) * a32(m, N) + 2 * fn(2) * a33(m, N)
    p_f = a1 + (n - 1) * a3
    p_g = sq * v11 + (n - 1) * sq * v31 + c_b * n * (n - 1) * v11 + c_b * n * (n - 1) ** 2 * b2(m, N)
    return MomentTerms(n, m, M, p_f, p_g)


def _env(d, s, x):
    env = thermal.ThermalEnvironment(d, s, x)
    return env, env.m


def _exact_ratios(d: int, s: int, x: float):
    # (h^s, f_r, g_r) as rationals at x = 0 or x = inf
    if x == 0:
        m = d**s
        return Fraction(1, m), Fraction(1, m**3), Fraction(m * m - m, m**4)
    if math.isinf(x):
        return Fraction(1), Fraction(1), Fraction(0)
    raise ValueError("exact evaluation is only available at x = 0 and x = inf")


def _ratios(d: int, s: int, x: float):
    if x == 0 or math.isinf(x):
        return tuple(float(v) for v in _exact_ratios(d, s, x))
    return thermal.h_ratio(d, s, x), thermal.f_ratio(d, s, x), thermal.g_ratio(d, s, x)


def mean_interference(n: int, d: int, s: int = 1, x: float = 0.0, exact: bool = False):
    """``h(x)^s n m (n-1)^2 / (n^2 m^2 - 1)`` with ``m = d^s``; 0 when ``n m = 1``."""
    _, m = _env(d, s, x)
    M = _mean_part(*_check_nm(n, m))
    if exact:
        return _exact_ratios(d, s, x)[0] * M
    if x == 0 or math.isinf(x):
        return float(_exact_ratios(d, s, x)[0] * M)
    return thermal.h_ratio(d, s, x) * float(M)


def mean_limits(n: int, m: int) -> tuple[float, float]:
    """``(x -> 0, x -> inf)`` limits of the mean for a single ``m``-level environment."""
    n, m = _check_nm(n, m)
    N = n * m
    if N == 1:
        return 0.0, 0.0
    return float(Fraction(n * (n - 1) ** 2, N * N - 1)), float(Fraction(N * (n - 1) ** 2, N * N - 1))


def mean_from_diagrams(n: int, m: int, h: float) -> float:
    """Mean assembled from the two degree-2 diagrams before simplification."""
    N = n * m
    if N == 1:
        return 0.0
    e2 = diagram("E2", N) if m > 1 else 0.0
    return n * n * (n - 1) * h * (m * diagram("F11", N) + m * (m - 1) * e2)


def second_moment(n: int, d: int, s: int = 1, x: float = 0.0, exact: bool = False, c_b: int = C_B):
    """``<I^2>`` over the CUE for ``s`` spins of ``d`` levels at inverse temperature ``x``."""
    _, m = _env(d, s, x)
    t = moment_terms(n, m, c_b)
    if exact:
        _, f_r, g_r = _exact_ratios(d, s, x)
        return n * (f_r * t.P_f + g_r * t.P_g)
    _, f_r, g_r = _ratios(d, s, x)
    return n * (f_r * float(t.P_f) + g_r * float(t.P_g))


def variance(n: int, d: int, s: int = 1, x: float = 0.0, exact: bool = False, c_b: int = C_B):
    _, m = _env(d, s, x)
    t = moment_terms(n, m, c_b)
    if exact:
        _, f_r, g_r = _exact_ratios(d, s, x)
        v = f_r * t.V_f + g_r * t.V_g
    else:
        _, f_r, g_r = _ratios(d, s, x)
        v = f_r * float(t.V_f) + g_r * float(t.V_g)
    if v < -VARIANCE_TOL:
        raise ArithmeticError(f"negative variance {float(v):.3e} at n={n}, d={d}, s={s}, x={x}")
    return v


def std_dev(n: int, d: int, s: int = 1, x: float = 0.0, c_b: int = C_B) -> float:
    return math.sqrt(max(float(variance(n, d, s, x, c_b=c_b)), 0.0))


@dataclass(frozen=True)
class MomentReport:
    n: int
    d: int
    s: int
    x: float
    mean: float
    second_moment: float
    variance: float
    std_dev: float

    @property
    def m(self) -> int:
        return self.d**self.s


def moment_report(n: int, d: int, s: int = 1, x: float = 0.0) -> MomentReport:
    var = float(variance(n, d, s, x))
    return MomentReport(
        n, d, s, float(x),
        mean=float(mean_interference(n, d, s, x)),
        second_moment=float(second_moment(n, d, s, x)),
        variance=var,
        std_dev=math.sqrt(max(var, 0.0)),
    )


ASYMPTOTIC_REGIMES = ("n_large_x_inf", "n_large_x_0", "m_large_x_inf", "m_large_x_0")


def variance_asymptotics(n: int, m: int, regime: str) -> float:
    """Leading terms of the variance for large ``n`` (two terms) or large ``m`` (one term)."""
    if regime == "n_large_x_inf":
        return 2 * (m - 1) ** 2 / (n * m**4) - 4 * (m**4 - 3 * m**3 + 3 * m**2 - 5 * m + 3) / (m**6 * n**2)
    if regime == "n_large_x_0":
        return 2 * (m * m - 1) / (n * m**6) + (8 - 4 * m**4) / (m**8 * n**2)
    if regime == "m_large_x_inf":
        return 2 * (n - 1) ** 2 / (n**3 * m**2)
    if regime == "m_large_x_0":
        return (n - 1) ** 2 / (n**3 * m**4)
    raise ValueError(f"unknown regime {regime!r}; expected one of {ASYMPTOTIC_REGIMES}")


def counting_identities_check(n: int, m: int) -> bool:
    """Configuration counts of the row and environment index sums."""
    n, m = _check_nm(n, m)
    rows = _fall(n, 4) + 4 * _fall(n, 3) + 2 * _fall(n, 2) == n * n * (n - 1) ** 2
    env = _fall(m, 4) + 6 * _fall(m, 3) + 7 * _fall(m, 2) + m == m**4
    return rows and env
