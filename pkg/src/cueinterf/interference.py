"""Interference measure ``I(P) = sum_i sum_{k != l} |P[i, i, k, l]|^2``."""
from __future__ import annotations

import numpy as np

from .propagator import Superoperator, _split
from .thermal import ThermalEnvironment, thermal_weights

NEGATIVE_TOL = 1e-12


def _clamp(value: float) -> float:
    if value < 0:
        if value < -NEGATIVE_TOL:
            raise ValueError(f"interference evaluated to {value:.3e} < 0 beyond round-off")
        return 0.0
    return float(value)


def _offdiag_sq(q: np.ndarray) -> np.ndarray:
    # q[..., alpha, gamma, delta]; sum over alpha and gamma != delta of |q|^2
    total = np.sum(np.abs(q) ** 2, axis=(-3, -2, -1))
    diag = np.sum(np.abs(np.diagonal(q, axis1=-2, axis2=-1)) ** 2, axis=(-2, -1))
    return total - diag


def interference_of_map(p: Superoperator) -> float:
    """Full-tensor evaluation from the diagonal output rows ``P[i, i, :, :]``."""
    q = np.einsum("iikl->ikl", p.tensor)
    return _clamp(float(_offdiag_sq(q)))


def interference_unitary(u: np.ndarray) -> float:
    """``N - sum_ij |U_ij|^4`` for the closed-system channel of ``u``."""
    u = np.asarray(u)
    return _clamp(u.shape[0] - float(np.sum(np.abs(u) ** 4)))


def _diag_blocks(us: np.ndarray, weights: np.ndarray, n: int) -> np.ndarray:
    # Q[..., alpha, gamma, delta] = sum_{mu,nu} U[(alpha,mu),(gamma,nu)] conj(U[(alpha,mu),(delta,nu)]) w_nu,
    # evaluated as a Gram product Y Y^dagger with Y[alpha] of shape (n, m*m).
    m = weights.size
    lead = us.shape[:-2]
    x = us.reshape(*lead, n, m, n, m) * np.sqrt(weights)
    y = np.swapaxes(x, -3, -2).reshape(*lead, n, n, m * m)
    return y @ np.swapaxes(y, -1, -2).conj()


def interference_fast(u: np.ndarray, env: ThermalEnvironment, n: int) -> float:
    """Interference of the reduced map without building ``P``: O(n^3 m^2) work."""
    w = thermal_weights(env)
    _split(u, n, w.size)
    return _clamp(float(_offdiag_sq(_diag_blocks(np.asarray(u), w, n))))


def interference_batch(us: np.ndarray, weights: np.ndarray, n: int) -> np.ndarray:
    """Vectorized fast path over a stack ``us`` of shape ``(R, N, N)``."""
    weights = np.asarray(weights, dtype=float)
    us = np.asarray(us)
    if us.shape[-1] != n * weights.size:
        raise ValueError(f"dimension mismatch: N = {us.shape[-1]} but n*m = {n * weights.size}")
    vals = _offdiag_sq(_diag_blocks(us, weights, n))
    if np.any(vals < -NEGATIVE_TOL):
        raise ValueError("interference evaluated below zero beyond round-off")
    return np.maximum(vals, 0.0)
