"""Exact Haar averages of monomials in U and U* of degree k <= 4.

``E[U_{i1 j1}..U_{ik jk} conj(U_{i'1 j'1}..U_{i'k j'k})]`` equals
``sum_{sigma, tau} [i = i' o sigma][j = j' o tau] Wg(tau sigma^-1, N)`` where
``Wg`` is the inverse of the Gram matrix ``G(sigma, tau) = N^{#cycles(sigma tau^-1)}``.
For ``N < k`` the Gram matrix is singular and its Moore-Penrose inverse still
gives the correct integrals (the extra kernel directions pair with index
configurations that cannot occur when there are fewer than k distinct values).
"""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .cue import SeedSpec, _haar_from_ginibre
from .thermal import ThermalEnvironment, thermal_weights

MAX_ORDER = 4
RESIDUAL_TOL = 1e-10
BRUTE_TERM_CAP = 2_000_000


@dataclass(frozen=True)
class Permutation:
    """Bijection of ``{0..k-1}``; ``mapping[i]`` is the image of ``i``."""

    mapping: tuple[int, ...]

    def __post_init__(self):
        if sorted(self.mapping) != list(range(len(self.mapping))):
            raise ValueError(f"not a bijection: {self.mapping}")

    @property
    def k(self) -> int:
        return len(self.mapping)

    def __call__(self, i: int) -> int:
        return self.mapping[i]

    def compose(self, other: "Permutation") -> "Permutation":
        """``self o other``: apply ``other`` first."""
        return Permutation(tuple(self.mapping[j] for j in other.mapping))

    def inverse(self) -> "Permutation":
        inv = [0] * self.k
        for i, j in enumerate(self.mapping):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycle_type(self) -> tuple[int, ...]:
        seen = [False] * self.k
        lengths = []
        for start in range(self.k):
            if seen[start]:
                continue
            n, j = 0, start
            while not seen[j]:
                seen[j] = True
                j = self.mapping[j]
                n += 1
            lengths.append(n)
        return tuple(sorted(lengths, reverse=True))

    def num_cycles(self) -> int:
        return len(self.cycle_type())


def _check_order(k):
    if int(k) != k or not 1 <= k <= MAX_ORDER:
        raise ValueError(f"order k must be in 1..{MAX_ORDER}, got {k!r}")
    return int(k)


@lru_cache(maxsize=None)
def _perms(k: int) -> tuple[Permutation, ...]:
    return tuple(Permutation(p) for p in itertools.permutations(range(k)))


def enumerate_permutations(k: int) -> list[Permutation]:
    """All ``k!`` permutations in lexicographic order of their mappings."""
    return list(_perms(_check_order(k)))


def cycle_types(k: int) -> list[tuple[int, ...]]:
    """Partitions of ``k`` in the order their classes first appear in ``enumerate_permutations``."""
    return list(dict.fromkeys(p.cycle_type() for p in _perms(_check_order(k))))


@lru_cache(maxsize=None)
def _quotient_classes(k: int) -> np.ndarray:
    # C[i, j] = class index of perms[i] o perms[j]^-1
    perms = _perms(k)
    types = cycle_types(k)
    out = np.empty((len(perms), len(perms)), dtype=np.intp)
    for i, s in enumerate(perms):
        for j, t in enumerate(perms):
            out[i, j] = types.index(s.compose(t.inverse()).cycle_type())
    return out


def gram_matrix(k: int, n_dim: int) -> np.ndarray:
    k = _check_order(k)
    cyc = np.array([len(t) for t in cycle_types(k)], dtype=float)
    return float(n_dim) ** cyc[_quotient_classes(k)]


@dataclass(frozen=True, eq=False)
class WeingartenMatrix:
    k: int
    N: int
    perms: tuple[Permutation, ...]
    values: np.ndarray
    residual: float

    def class_value(self, cycle_type: tuple[int, ...]) -> float:
        """``Wg`` on the conjugacy class with the given cycle type."""
        idx = [p.cycle_type() for p in self.perms].index(tuple(cycle_type))
        return float(self.values[idx, 0])


@lru_cache(maxsize=None)
def weingarten(k: int, n_dim: int) -> WeingartenMatrix:
    """Solve ``G W = I`` for the k!-by-k! Weingarten matrix at dimension ``N``."""
    k = _check_order(k)
    if int(n_dim) != n_dim or n_dim < k:
        raise ValueError(f"Gram matrix is singular for N={n_dim!r} < k={k}; need N >= k")
    g = gram_matrix(k, n_dim)
    w = np.linalg.solve(g, np.eye(g.shape[0]))
    res = float(np.max(np.abs(g @ w - np.eye(g.shape[0]))))
    if res >= RESIDUAL_TOL:
        raise ArithmeticError(f"Weingarten residual {res:.3e} at k={k}, N={n_dim}")
    w.setflags(write=False)
    return WeingartenMatrix(k, int(n_dim), _perms(k), w, res)


@lru_cache(maxsize=None)
def _class_values_float(k: int, n_dim: int) -> np.ndarray:
    if n_dim >= k:
        w = weingarten(k, n_dim).values
    else:
        w = np.linalg.pinv(gram_matrix(k, n_dim))
    # column of the identity permutation, then one representative per class
    col = w[:, 0]
    cls = _quotient_classes(k)[:, 0]
    return np.array([col[np.flatnonzero(cls == c)[0]] for c in range(len(cycle_types(k)))])


# exact rational linear algebra on small dense matrices


def _solve_exact(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    """Gauss-Jordan solve of ``a x = b`` for square nonsingular ``a``."""
    n = len(a)
    m = [row[:] + rb[:] for row, rb in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[col], m[piv] = m[piv], m[col]
        inv = 1 / m[col][col]
        m[col] = [v * inv for v in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [vr - f * vc for vr, vc in zip(m[r], m[col])]
    return [row[n:] for row in m]


def _rref(a: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    m = [row[:] for row in a]
    rows, cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [vi - f * vr for vi, vr in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m[:r], pivots


def _matmul(a, b):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def _transpose(a):
    return [list(r) for r in zip(*a)]


def _eye(n):
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def exact_pinv(a: list[list[Fraction]]) -> list[list[Fraction]]:
    """Moore-Penrose inverse of a real rational matrix via a full-rank factorization ``a = C F``."""
    f, pivots = _rref(a)
    c = [[row[j] for j in pivots] for row in a]
    ct, ft = _transpose(c), _transpose(f)
    r = len(pivots)
    ffti = _solve_exact(_matmul(f, ft), _eye(r))
    ctci = _solve_exact(_matmul(ct, c), _eye(r))
    return _matmul(_matmul(ft, ffti), _matmul(ctci, ct))


@lru_cache(maxsize=None)
def weingarten_exact(k: int, n_dim: int) -> dict[tuple[int, ...], Fraction]:
    """``Wg`` per cycle type as exact rationals; any ``N >= 1``."""
    k = _check_order(k)
    n_dim = int(n_dim)
    types = cycle_types(k)
    cls = _quotient_classes(k)
    ncyc = [len(t) for t in types]
    perms = _perms(k)
    reps = [next(i for i in range(len(perms)) if cls[i, 0] == c) for c in range(len(types))]
    if n_dim >= k:
        # central element: restrict G W = I (identity column) to one row per class
        a = [[Fraction(0)] * len(types) for _ in types]
        for li, i in enumerate(reps):
            for j in range(len(perms)):
                a[li][cls[j, 0]] += Fraction(n_dim) ** ncyc[cls[i, j]]
        b = [[Fraction(int(li == 0))] for li in range(len(types))]
        sol = _solve_exact(a, b)
        vals = [row[0] for row in sol]
    else:
        g = [[Fraction(n_dim) ** ncyc[cls[i, j]] for j in range(len(perms))] for i in range(len(perms))]
        w = exact_pinv(g)
        vals = [w[i][0] for i in reps]
    return dict(zip(types, vals))


# monomial averages


def _canon(seq) -> tuple[int, ...]:
    labels: dict = {}
    return tuple(labels.setdefault(v, len(labels)) for v in seq)


def _matching_perms(left: tuple, right: tuple) -> list[int]:
    # indices of sigma with left[j] == right[sigma(j)] for all j
    perms = _perms(len(left))
    return [i for i, s in enumerate(perms) if all(left[j] == right[s(j)] for j in range(len(left)))]


@lru_cache(maxsize=None)
def _class_counts(row_key: tuple, col_key: tuple) -> tuple[int, ...]:
    # row_key/col_key: canonical labels of (U indices + U* indices), length 2k
    k = len(row_key) // 2
    types = cycle_types(k)
    sig = _matching_perms(row_key[:k], row_key[k:])
    tau = _matching_perms(col_key[:k], col_key[k:])
    cls = _quotient_classes(k)
    counts = [0] * len(types)
    for t in tau:
        for s in sig:
            counts[cls[t, s]] += 1
    return tuple(counts)


def _keyed_average(row_key: tuple, col_key: tuple, n_dim: int, exact: bool):
    k = len(row_key) // 2
    if k == 0:
        return Fraction(1) if exact else 1.0
    counts = _class_counts(row_key, col_key)
    if exact:
        wg = weingarten_exact(k, n_dim)
        return sum((c * wg[t] for c, t in zip(counts, cycle_types(k)) if c), Fraction(0))
    return float(np.dot(counts, _class_values_float(k, n_dim)))


def monomial_average(rows, cols, conj_rows, conj_cols, N: int, exact: bool = False):
    """Haar average of ``prod_j U[rows[j], cols[j]] * conj(U[conj_rows[j], conj_cols[j]])``.

    Indices are 1-based.  The result is always real; it is returned as ``float``
    or, with ``exact=True``, as ``Fraction``.
    """
    rows, cols, conj_rows, conj_cols = (tuple(v) for v in (rows, cols, conj_rows, conj_cols))
    k = len(rows)
    if not len(cols) == len(conj_rows) == len(conj_cols) == k:
        raise ValueError("index lists must all have the same length")
    if k > MAX_ORDER:
        raise ValueError(f"order {k} exceeds {MAX_ORDER}")
    if int(N) != N or N < 1:
        raise ValueError(f"invalid dimension N={N!r}")
    for v in rows + cols + conj_rows + conj_cols:
        if int(v) != v or not 1 <= v <= N:
            raise ValueError(f"index {v!r} outside 1..{N}")
    zero = Fraction(0) if exact else 0.0
    if Counter(rows) != Counter(conj_rows) or Counter(cols) != Counter(conj_cols):
        return zero
    return _keyed_average(_canon(rows + conj_rows), _canon(cols + conj_cols), int(N), exact)


# Index structures of the named diagrams, as (rows, cols, conj_rows, conj_cols).
# The four-factor ones come from the second-moment sums: factor j pairs
# U[rows[j], cols[j]] with conj(U[conj_rows[j], conj_cols[j]]); the digit pair in
# the name is (#distinct row indices, #distinct column indices).
DIAGRAMS: dict[str, tuple[tuple[int, ...], ...]] = {
    "F11": ((1, 1), (1, 2), (1, 1), (1, 2)),
    "E2": ((1, 2), (1, 2), (1, 2), (2, 1)),
    "D14": ((1, 1, 1, 1), (1, 2, 3, 4), (1, 1, 1, 1), (3, 4, 1, 2)),
    "Da24": ((1, 2, 1, 2), (1, 2, 3, 4), (1, 2, 1, 2), (3, 4, 1, 2)),
    "Db24": ((1, 2, 2, 2), (1, 2, 3, 4), (1, 2, 2, 2), (3, 4, 1, 2)),
    "Dc24": ((1, 1, 2, 2), (1, 2, 3, 4), (1, 1, 2, 2), (3, 4, 1, 2)),
    "Da34": ((1, 2, 3, 3), (1, 2, 3, 4), (1, 2, 3, 3), (3, 4, 1, 2)),
    "Db34": ((1, 2, 3, 2), (1, 2, 3, 4), (1, 2, 3, 2), (3, 4, 1, 2)),
    "D44": ((1, 2, 3, 4), (1, 2, 3, 4), (1, 2, 3, 4), (3, 4, 1, 2)),
    "D13": ((1, 1, 1, 1), (1, 2, 3, 1), (1, 1, 1, 1), (2, 1, 1, 3)),
    "Da23": ((1, 1, 2, 2), (1, 2, 3, 1), (1, 1, 2, 2), (2, 1, 1, 3)),
    "Db23": ((1, 2, 2, 2), (1, 2, 3, 1), (1, 2, 2, 2), (2, 1, 1, 3)),
    "Dc23": ((1, 2, 1, 2), (1, 2, 3, 1), (1, 2, 1, 2), (2, 1, 1, 3)),
    "Da33": ((1, 2, 3, 2), (1, 2, 3, 1), (1, 2, 3, 2), (2, 1, 1, 3)),
    "Db33": ((1, 2, 3, 3), (1, 2, 3, 1), (1, 2, 3, 3), (2, 1, 1, 3)),
    "Dc33": ((1, 2, 2, 3), (1, 2, 3, 1), (1, 2, 2, 3), (2, 1, 1, 3)),
    "D43": ((1, 2, 3, 4), (1, 2, 3, 1), (1, 2, 3, 4), (2, 1, 1, 3)),
    "Da22": ((1, 1, 2, 2), (1, 2, 2, 1), (1, 1, 2, 2), (2, 1, 1, 2)),
    "Db22": ((1, 2, 2, 1), (1, 2, 2, 1), (1, 2, 2, 1), (2, 1, 1, 2)),
    "Dc22": ((1, 2, 2, 2), (1, 2, 2, 1), (1, 2, 2, 2), (2, 1, 1, 2)),
    "Da32": ((1, 2, 3, 3), (1, 2, 2, 1), (1, 2, 3, 3), (2, 1, 1, 2)),
    "Db32": ((1, 2, 2, 3), (1, 2, 2, 1), (1, 2, 2, 3), (2, 1, 1, 2)),
    "D42": ((1, 2, 3, 4), (1, 2, 2, 1), (1, 2, 3, 4), (2, 1, 1, 2)),
    # one row index, two column indices; needed by the second moment but has no closed form in the table
    "D12": ((1, 1, 1, 1), (1, 2, 2, 1), (1, 1, 1, 1), (2, 1, 1, 2)),
}


def diagram_value(name: str, N: int, exact: bool = False):
    try:
        rows, cols, crows, ccols = DIAGRAMS[name]
    except KeyError:
        raise KeyError(f"unknown diagram {name!r}") from None
    return monomial_average(rows, cols, crows, ccols, N, exact=exact)


# brute-force moments of the interference measure


def _weights_for(m: int, x: float, weights) -> np.ndarray:
    if weights is None:
        return thermal_weights(ThermalEnvironment(m, 1, x))
    w = np.asarray(weights, dtype=float)
    if w.size != m:
        raise ValueError(f"weights have length {w.size}, expected m={m}")
    return w


def _reduce(row_counts: Counter, col_sums: dict, n_dim: int) -> float:
    total = 0.0
    for rk, rc in sorted(row_counts.items()):
        for ck, cw in sorted(col_sums.items()):
            total += rc * cw * _keyed_average(rk, ck, n_dim, False)
    return total


def brute_mean(n: int, m: int, x: float = 0.0, weights=None) -> float:
    """Mean interference as an explicit sum of degree-2 Haar averages.

    ``I = sum_{alpha, gamma != delta} sum_{mu, rho, nu, sigma} w_nu w_sigma
    U[(a,mu),(g,nu)] U*[(a,mu),(d,nu)] U*[(a,rho),(g,sigma)] U[(a,rho),(d,sigma)]``.
    """
    if n * m > 64:
        raise ValueError(f"brute_mean is capped at n*m <= 64, got {n * m}")
    w = _weights_for(m, x, weights)
    if n == 1:
        return 0.0
    rows = Counter()
    for a, mu, rho in itertools.product(range(n), range(m), range(m)):
        r1, r2 = (a, mu), (a, rho)
        rows[_canon((r1, r2, r1, r2))] += 1
    cols: dict = {}
    for g, d in itertools.permutations(range(n), 2):
        for nu, sig in itertools.product(range(m), repeat=2):
            key = _canon(((g, nu), (d, sig), (d, nu), (g, sig)))
            cols[key] = cols.get(key, 0.0) + w[nu] * w[sig]
    return _reduce(rows, cols, n * m)


def brute_second_moment(n: int, m: int, x: float = 0.0, weights=None) -> float:
    """``<I^2>`` as an explicit sum of degree-4 Haar averages.

    Rows ``(a,mu), (a,rho), (b,p), (b,r)``; U columns ``(g,nu), (d,sig), (e,q), (f,s)``;
    U* columns ``(d,nu), (g,sig), (f,q), (e,s)``; constraints ``g != d``, ``f != e``;
    weight ``w_nu w_sig w_q w_s``.  The sum factorizes into a row part and a
    column part that are grouped by index pattern before the averages are taken.
    """
    terms = (n * (n - 1)) ** 2 * m**4
    if terms > BRUTE_TERM_CAP:
        raise ValueError(f"brute_second_moment needs {terms} column terms, cap is {BRUTE_TERM_CAP}")
    w = _weights_for(m, x, weights)
    if n == 1:
        return 0.0
    rows = Counter()
    for a, b in itertools.product(range(n), repeat=2):
        for mu, rho, p, r in itertools.product(range(m), repeat=4):
            rr = ((a, mu), (a, rho), (b, p), (b, r))
            rows[_canon(rr + rr)] += 1
    cols: dict = {}
    pairs = list(itertools.permutations(range(n), 2))
    for (g, d), (f, e) in itertools.product(pairs, repeat=2):
        for nu, sig, q, s in itertools.product(range(m), repeat=4):
            key = _canon(((g, nu), (d, sig), (e, q), (f, s), (d, nu), (g, sig), (f, q), (e, s)))
            cols[key] = cols.get(key, 0.0) + w[nu] * w[sig] * w[q] * w[s]
    return _reduce(rows, cols, n * m)


def mc_monomial_average(rows, cols, conj_rows, conj_cols, N: int, samples: int, seed: SeedSpec,
                        chunk: int = 20_000) -> tuple[complex, float]:
    """Sample mean of the monomial over CUE draws and its standard error.

    One generator (from ``seed``) feeds all draws; indices are 1-based.
    """
    if samples < 10_000:
        raise ValueError("mc_monomial_average needs at least 10^4 samples")
    r = np.asarray(rows) - 1
    c = np.asarray(cols) - 1
    cr = np.asarray(conj_rows) - 1
    cc = np.asarray(conj_cols) - 1
    rng = seed.generator()
    total = 0j
    total_sq = 0.0
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        z = (rng.standard_normal((b, N, N)) + 1j * rng.standard_normal((b, N, N))) / np.sqrt(2.0)
        u = _haar_from_ginibre(z)
        v = np.prod(u[:, r, c], axis=1) * np.prod(u[:, cr, cc].conj(), axis=1)
        total += v.sum()
        total_sq += float(np.sum(np.abs(v) ** 2))
        done += b
    mean = total / samples
    var = (total_sq - samples * abs(mean) ** 2) / (samples - 1)
    return complex(mean), float(np.sqrt(max(var, 0.0) / samples))
