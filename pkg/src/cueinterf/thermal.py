"""Thermal spin environment: Boltzmann weights and the temperature factors.

Energies are equally spaced, ``E_nu = nu`` (in units of the level spacing) for
``nu = 1..d``, and ``x`` is the dimensionless inverse temperature.  ``x = inf``
stands for zero temperature.  Every ratio that enters the moments is invariant
under a shift of the energies, so internally the sums start at ``nu = 0``
(``zshift``) which keeps them finite for arbitrarily large ``x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DIMENSION_CAP = 2**20


def _check_d(d):
    if int(d) != d or d < 1:
        raise ValueError(f"invalid dimension d={d!r}: must be an integer >= 1")
    return int(d)


def _check_x(x):
    x = float(x)
    if math.isnan(x) or x < 0:
        raise ValueError(f"inverse temperature must be >= 0 (or inf), got {x!r}")
    return x


@dataclass(frozen=True)
class ThermalEnvironment:
    """``s`` independent ``d``-level spins at inverse temperature ``x``."""

    d: int
    s: int = 1
    x: float = 0.0

    def __post_init__(self):
        _check_d(self.d)
        if int(self.s) != self.s or self.s < 1:
            raise ValueError(f"number of spins must be an integer >= 1, got {self.s!r}")
        _check_x(self.x)

    @property
    def m(self) -> int:
        """Total environment dimension ``d**s``."""
        return self.d**self.s


def _zm1(d: int, y: float) -> float:
    """``sum_{k=1}^{d-1} exp(-y k)``, i.e. ``zshift(d, y) - 1`` without cancellation."""
    if d == 1 or math.isinf(y):
        return 0.0
    if y == 0.0:
        return float(d - 1)
    return math.exp(-y) * math.expm1(-y * (d - 1)) / math.expm1(-y)


def zshift(d: int, y: float) -> float:
    """``sum_{k=0}^{d-1} exp(-y k)``; equals 1 at ``y = inf``."""
    return 1.0 + _zm1(_check_d(d), _check_x(y))


def partition_z(d: int, x: float) -> float:
    """Single-spin partition function ``Z(x) = sum_{nu=1}^{d} exp(-x nu)``."""
    d = _check_d(d)
    x = _check_x(x)
    if math.isinf(x):
        return 0.0
    return math.exp(-x) * zshift(d, x)


def thermal_weights(env: ThermalEnvironment, cap: int = DIMENSION_CAP) -> np.ndarray:
    """Diagonal of the thermal state, length ``d**s``.

    The multi-spin vector is the Kronecker power of the single-spin one, so the
    entry for ``(nu_1, ..., nu_s)`` sits at the row-major flat index.
    """
    if env.m > cap:
        raise ValueError(f"environment dimension d**s = {env.d}**{env.s} exceeds the cap {cap}")
    if math.isinf(env.x):
        w1 = np.zeros(env.d)
        w1[0] = 1.0
    else:
        w1 = np.exp(-env.x * np.arange(env.d))
        w1 /= w1.sum()
    w = w1
    for _ in range(env.s - 1):
        w = np.kron(w, w1)
    return w


def h_factor(d: int, x: float) -> float:
    """``h(x) = Z(2x) / Z(x)^2`` for one spin; runs from ``1/d`` at x=0 to 1 at x=inf."""
    d = _check_d(d)
    x = _check_x(x)
    return zshift(d, 2 * x) / zshift(d, x) ** 2


def f_factor(d: int, x: float) -> float:
    """``f(x) = Z(4x)``."""
    return partition_z(d, 4 * _check_x(x))


def g_factor(d: int, x: float) -> float:
    """``g(x) = Z(2x)^2 - Z(4x) = sum_{nu != rho} exp(-2x(nu + rho))``."""
    d = _check_d(d)
    x = _check_x(x)
    if math.isinf(x):
        return 0.0
    a = _zm1(d, 2 * x)
    b = _zm1(d, 4 * x)
    return math.exp(-4 * x) * (2 * a + a * a - b)


def g_factor_product(d: int, x: float) -> float:
    """Product form of ``g``.

    ``e^{-6x} (1-q^d)(1-q^{d-1}) / ((1-q)(1-q^2))`` with ``q = e^{-2x}`` is the
    sum over unordered pairs ``nu < rho``; ``g`` runs over ordered pairs, hence
    the factor 2.
    """
    d = _check_d(d)
    x = _check_x(x)
    if d == 1 or math.isinf(x):
        return 0.0
    if x == 0.0:
        return float(d * (d - 1))
    return (
        2
        * math.exp(-6 * x)
        * (math.expm1(-2 * x * d) / math.expm1(-2 * x))
        * (math.expm1(-2 * x * (d - 1)) / math.expm1(-4 * x))
    )


def _pow_m1(zm1: float, s: int) -> float:
    # (1 + zm1)**s - 1, accurate when zm1 is tiny
    return math.expm1(s * math.log1p(zm1))


def h_ratio(d: int, s: int, x: float) -> float:
    """``h(x)**s``: temperature prefactor of the mean for ``s`` spins."""
    return h_factor(d, x) ** s


def f_ratio(d: int, s: int, x: float) -> float:
    """``f(x)**s / Z(x)**(4s)``."""
    d = _check_d(d)
    x = _check_x(x)
    return (zshift(d, 4 * x) / zshift(d, x) ** 4) ** s


def g_ratio(d: int, s: int, x: float) -> float:
    """``(Z(2x)**(2s) - Z(4x)**s) / Z(x)**(4s)``: the ordered distinct-pair sum for ``s`` spins.

    For ``s = 1`` this is ``g(x) / Z(x)**4``.
    """
    d = _check_d(d)
    x = _check_x(x)
    a = _pow_m1(_zm1(d, 2 * x), s)
    b = _pow_m1(_zm1(d, 4 * x), s)
    return (2 * a + a * a - b) / zshift(d, x) ** (4 * s)
