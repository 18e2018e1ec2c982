"""Haar-distributed (CUE) unitary matrices with per-realization seeding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one realization's random stream.

    The stream depends only on ``(master_seed, realization_index)``, so results
    do not change with the number of workers or the order they run in.
    """

    master_seed: int
    realization_index: int = 0

    def __post_init__(self):
        if self.realization_index < 0:
            raise ValueError("realization_index must be non-negative")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.realization_index,))
        return np.random.Generator(np.random.Philox(ss))


def _check_dim(dim):
    if int(dim) != dim or dim < 1:
        raise ValueError(f"invalid dimension {dim!r}: must be a positive integer")
    return int(dim)


def _haar_from_ginibre(z: np.ndarray) -> np.ndarray:
    # QR of a complex Ginibre matrix, then fix the phases of R's diagonal so the
    # decomposition is unique; the resulting Q is Haar distributed (Mezzadri 2007).
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


def _ginibre(rng: np.random.Generator, dim: int) -> np.ndarray:
    re = rng.standard_normal((dim, dim))
    im = rng.standard_normal((dim, dim))
    return (re + 1j * im) / np.sqrt(2.0)


def sample_cue(dim: int, seed: SeedSpec) -> np.ndarray:
    """Draw one ``dim x dim`` unitary from the Haar measure on U(dim)."""
    dim = _check_dim(dim)
    return _haar_from_ginibre(_ginibre(seed.generator(), dim))


def sample_cue_batch(dim: int, master_seed: int, start: int, count: int) -> np.ndarray:
    """Realizations ``start .. start+count-1`` stacked along axis 0.

    Entry ``k`` is bit-identical to ``sample_cue(dim, SeedSpec(master_seed, start + k))``.
    """
    dim = _check_dim(dim)
    z = np.empty((count, dim, dim), dtype=complex)
    for k in range(count):
        z[k] = _ginibre(SeedSpec(master_seed, start + k).generator(), dim)
    return _haar_from_ginibre(z)


def unitarity_defect(u: np.ndarray) -> float:
    """Largest entry of ``|U U^dagger - I|``."""
    u = np.asarray(u)
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


@dataclass
class MomentCheck:
    name: str
    expected: float
    estimate: float
    stderr: float
    z: float
    passed: bool


def _moment_check(name, values, expected, nsigma):
    values = np.asarray(values, dtype=float)
    est = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(values.size))
    if se == 0.0:
        ok = abs(est - expected) < 1e-12
        z = 0.0 if ok else float("inf")
    else:
        z = (est - expected) / se
        ok = abs(z) < nsigma
    return MomentCheck(name, expected, est, se, z, ok)


def haar_self_test(dim: int, samples: int, seed: SeedSpec, nsigma: float = 3.0) -> list[MomentCheck]:
    """Compare low-order entry moments of sampled unitaries with their Haar values.

    Checks ``<|U11|^2> = 1/N``, ``<|U11|^4> = 2/(N(N+1))`` and
    ``<|U11|^2 |U12|^2> = 1/(N(N+1))``; the last one is skipped for ``N = 1``.
    Realizations ``seed.realization_index ...`` of ``seed.master_seed`` are used.
    """
    dim = _check_dim(dim)
    if samples < 10_000:
        raise ValueError("haar_self_test needs at least 10^4 samples")
    us = sample_cue_batch(dim, seed.master_seed, seed.realization_index, samples)
    a11 = np.abs(us[:, 0, 0]) ** 2
    checks = [
        _moment_check("|U11|^2", a11, 1.0 / dim, nsigma),
        _moment_check("|U11|^4", a11**2, 2.0 / (dim * (dim + 1)), nsigma),
    ]
    if dim > 1:
        a12 = np.abs(us[:, 0, 1]) ** 2
        checks.append(_moment_check("|U11|^2|U12|^2", a11 * a12, 1.0 / (dim * (dim + 1)), nsigma))
    return checks
