"""Completely positive maps obtained by tracing out a thermal environment.

The joint basis index is ``sys * m + env`` (system-major, zero-based here), so a
joint unitary of size ``n*m`` reshapes to ``U[alpha, mu, gamma, nu]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .thermal import ThermalEnvironment, thermal_weights

TRACE_TOL = 1e-10
HERMITICITY_TOL = 1e-12
CP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Superoperator:
    """``P[alpha, beta, gamma, delta]`` maps ``rho[gamma, delta]`` to ``rho'[alpha, beta]``."""

    tensor: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.tensor, dtype=complex)
        if t.ndim != 4 or len(set(t.shape)) != 1:
            raise ValueError(f"superoperator tensor must have shape (n, n, n, n), got {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "tensor", t)

    @property
    def n(self) -> int:
        return self.tensor.shape[0]

    def trace_defect(self) -> float:
        """``max |sum_alpha P[alpha, alpha, gamma, delta] - delta_{gamma delta}|``."""
        tr = np.einsum("aacd->cd", self.tensor)
        return float(np.max(np.abs(tr - np.eye(self.n))))

    def hermiticity_defect(self) -> float:
        """``max |P[a, b, c, d] - conj(P[b, a, d, c])|``."""
        t = self.tensor
        return float(np.max(np.abs(t - t.transpose(1, 0, 3, 2).conj())))

    def choi_min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(choi_matrix(self)).min())

    def check(self) -> None:
        """Raise ``ValueError`` if any of the three CP-map invariants is violated."""
        if (e := self.trace_defect()) > TRACE_TOL:
            raise ValueError(f"trace preservation violated by {e:.3e}")
        if (e := self.hermiticity_defect()) > HERMITICITY_TOL:
            raise ValueError(f"hermiticity preservation violated by {e:.3e}")
        if (e := self.choi_min_eigenvalue()) < -CP_TOL:
            raise ValueError(f"Choi matrix has negative eigenvalue {e:.3e}")

    def to_json(self) -> str:
        """Debug dump: row-major flattened entries as ``[re, im]`` pairs."""
        flat = self.tensor.ravel()
        return json.dumps({"n": self.n, "entries": [[z.real, z.imag] for z in flat.tolist()]})

    @classmethod
    def from_json(cls, text: str) -> "Superoperator":
        obj = json.loads(text)
        n = obj["n"]
        vals = np.array([complex(re, im) for re, im in obj["entries"]])
        return cls(vals.reshape(n, n, n, n))


def _split(u: np.ndarray, n: int, m: int) -> np.ndarray:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"joint unitary must be square, got shape {u.shape}")
    if u.shape[0] != n * m:
        raise ValueError(
            f"dimension mismatch: joint unitary is {u.shape[0]}x{u.shape[1]} "
            f"but n*m = {n}*{m} requires N = {n * m}"
        )
    return u.reshape(n, m, n, m)


def build_from_weights(u: np.ndarray, weights: np.ndarray, n: int) -> Superoperator:
    """Propagator for an arbitrary diagonal environment state ``weights``."""
    weights = np.asarray(weights, dtype=float)
    u4 = _split(u, n, weights.size)
    p = np.einsum("amgv,bmdv,v->abgd", u4, u4.conj(), weights, optimize=True)
    return Superoperator(p)


def build_propagator(u: np.ndarray, env: ThermalEnvironment, n: int) -> Superoperator:
    """``P[a,b,g,d] = sum_{mu,nu} U[(a,mu),(g,nu)] conj(U[(b,mu),(d,nu)]) eps_nu``."""
    if int(n) != n or n < 1:
        raise ValueError(f"system dimension must be a positive integer, got {n!r}")
    return build_from_weights(u, thermal_weights(env), int(n))


def unitary_channel(v: np.ndarray) -> Superoperator:
    """Conjugation ``rho -> V rho V^dagger`` as a superoperator."""
    v = np.asarray(v, dtype=complex)
    return Superoperator(np.einsum("ag,bd->abgd", v, v.conj()))


def apply(p: Superoperator, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (p.n, p.n):
        raise ValueError(f"dimension mismatch: density matrix {rho.shape} vs superoperator n={p.n}")
    return np.einsum("abgd,gd->ab", p.tensor, rho)


def choi_matrix(p: Superoperator) -> np.ndarray:
    """Reshuffled ``n^2 x n^2`` matrix ``C[(a,g),(b,d)] = P[a,b,g,d]``; PSD iff ``p`` is CP."""
    n = p.n
    return p.tensor.transpose(0, 2, 1, 3).reshape(n * n, n * n)


def partial_trace_evolution(u: np.ndarray, rho: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``Tr_env[U (rho (x) eps) U^dagger]`` by dense matrix products."""
    weights = np.asarray(weights, dtype=float)
    n, m = rho.shape[0], weights.size
    joint = np.kron(rho, np.diag(weights))
    out = u @ joint @ u.conj().T
    return np.einsum("ambm->ab", out.reshape(n, m, n, m))


def is_density_matrix(rho: np.ndarray, tol: float = CP_TOL) -> bool:
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > HERMITICITY_TOL:
        return False
    if abs(np.trace(rho) - 1) > 1e-12:
        return False
    return bool(np.linalg.eigvalsh(rho).min() >= -tol)
