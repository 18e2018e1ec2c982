"""Monte Carlo sampling of the interference distribution.

Realizations are processed in fixed-size chunks.  Chunk ``c`` always covers the
realizations ``c*chunk .. (c+1)*chunk - 1`` and every realization has its own
random stream, so the per-chunk results do not depend on how many workers run
them; partial statistics are merged in chunk order.
"""
from __future__ import annotations

import csv
import io
import math
import platform
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import moments
from .cue import sample_cue_batch
from .interference import interference_batch
from .thermal import DIMENSION_CAP, ThermalEnvironment, thermal_weights

CHUNK_SIZE = 2048
TABLE1_X = 0.1
TABLE1_ROWS = ((4, 2), (4, 4), (4, 8), (8, 2), (8, 4))


@dataclass(frozen=True)
class EnsembleConfig:
    n: int
    d: int
    s: int = 1
    x: float = 0.0
    realizations: int = 100_000
    master_seed: int = 0
    bins: int = 50
    bin_scale: str = "log"
    workers: int = 1

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        env = ThermalEnvironment(self.d, self.s, self.x)
        if env.m > DIMENSION_CAP:
            raise ValueError(f"environment dimension {self.d}**{self.s} exceeds the cap {DIMENSION_CAP}")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if self.bin_scale not in ("linear", "log"):
            raise ValueError(f"bin_scale must be 'linear' or 'log', got {self.bin_scale!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")

    @property
    def env(self) -> ThermalEnvironment:
        return ThermalEnvironment(self.d, self.s, self.x)

    @property
    def m(self) -> int:
        return self.d**self.s


@dataclass
class RunningStats:
    """Streaming count, mean, sum of squared deviations, min and max."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min: float = math.inf
    max: float = -math.inf

    def push(self, value: float) -> None:
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)
        self.min = min(self.min, value)
        self.max = max(self.max, value)

    @classmethod
    def from_array(cls, values) -> "RunningStats":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls()
        mean = float(v.mean())
        return cls(int(v.size), mean, float(np.sum((v - mean) ** 2)), float(v.min()), float(v.max()))

    def merge(self, other: "RunningStats") -> "RunningStats":
        """Combine two disjoint sample sets (Chan et al. pairwise update)."""
        if other.count == 0:
            return RunningStats(self.count, self.mean, self.m2, self.min, self.max)
        if self.count == 0:
            return RunningStats(other.count, other.mean, other.m2, other.min, other.max)
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningStats(n, mean, m2, min(self.min, other.min), max(self.max, other.max))

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.count) if self.count else math.nan

    @property
    def std_stderr(self) -> float:
        # normal-theory approximation s / sqrt(2 (R - 1))
        return self.std / math.sqrt(2 * (self.count - 1)) if self.count > 1 else math.nan


@dataclass
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    @classmethod
    def from_samples(cls, samples, bins: int, scale: str = "log") -> "Histogram":
        v = np.asarray(samples, dtype=float)
        if v.size == 0:
            raise ValueError("cannot histogram an empty sample")
        lo, hi = float(v.min()), float(v.max())
        if scale == "log":
            if lo <= 0:
                raise ValueError("log-binned histogram needs strictly positive samples; use linear bins")
            if lo == hi:
                lo, hi = lo / 2, hi * 2
            edges = np.geomspace(lo, hi, bins + 1)
        elif scale == "linear":
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
            edges = np.linspace(lo, hi, bins + 1)
        else:
            raise ValueError(f"unknown bin scale {scale!r}")
        counts, _ = np.histogram(v, bins=edges)
        return cls(edges, counts, int(v.size))

    @property
    def density(self) -> np.ndarray:
        return self.counts / (self.total * np.diff(self.edges))


@dataclass
class EnsembleResult:
    config: EnsembleConfig
    stats: RunningStats
    histogram: Histogram
    samples: np.ndarray | None
    elapsed: float


def _chunk(args) -> tuple[RunningStats, np.ndarray]:
    n, m_weights, dim, seed, start, count = args
    us = sample_cue_batch(dim, seed, start, count)
    vals = interference_batch(us, m_weights, n)
    return RunningStats.from_array(vals), vals


def sample_interference(config: EnsembleConfig) -> tuple[RunningStats, np.ndarray]:
    w = thermal_weights(config.env)
    dim = config.n * w.size
    jobs = [
        (config.n, w, dim, config.master_seed, start, min(CHUNK_SIZE, config.realizations - start))
        for start in range(0, config.realizations, CHUNK_SIZE)
    ]
    if config.workers == 1 or len(jobs) == 1:
        parts = [_chunk(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(_chunk, jobs))
    total = RunningStats()
    for st, _ in parts:
        total = total.merge(st)
    return total, np.concatenate([v for _, v in parts])


def run_ensemble(config: EnsembleConfig, keep_samples: bool = False) -> EnsembleResult:
    t0 = time.perf_counter()
    st, samples = sample_interference(config)
    scale = config.bin_scale
    if scale == "log" and st.min <= 0:
        scale = "linear"
    hist = Histogram.from_samples(samples, config.bins, scale)
    return EnsembleResult(config, st, hist, samples if keep_samples else None, time.perf_counter() - t0)


@dataclass(frozen=True)
class LogNormalFit:
    mu: float
    sigma: float
    ks_distance: float
    used: int
    excluded: int


def lognormal_pdf(i, mu: float, sigma: float):
    i = np.asarray(i, dtype=float)
    return np.exp(-((np.log(i) - mu) ** 2) / (2 * sigma**2)) / (i * sigma * math.sqrt(2 * math.pi))


def fit_lognormal(samples) -> LogNormalFit:
    """Maximum-likelihood log-normal fit; non-positive samples are dropped and counted."""
    v = np.asarray(samples, dtype=float)
    pos = v[v > 0]
    if pos.size < 10:
        raise ValueError(f"need at least 10 positive samples for a log-normal fit, got {pos.size}")
    logs = np.log(pos)
    mu = float(logs.mean())
    sigma = float(logs.std())
    if sigma == 0.0:
        raise ValueError("all samples are equal; log-normal width would be zero")
    ks = sps.kstest(pos, "lognorm", args=(sigma, 0.0, math.exp(mu))).statistic
    return LogNormalFit(mu, sigma, float(ks), int(pos.size), int(v.size - pos.size))


def analytic_cdf_check_n2(samples) -> float:
    """KS distance to ``F(I) = 1 - sqrt(1 - I)``, the law of I for a single 2x2 unitary."""
    v = np.asarray(samples, dtype=float)
    if v.size == 0:
        raise ValueError("no samples")
    cdf = lambda t: 1.0 - np.sqrt(1.0 - np.clip(t, 0.0, 1.0))  # noqa: E731
    return float(sps.kstest(v, cdf).statistic)


@dataclass(frozen=True)
class Table1Row:
    n: int
    m: int
    mc_mean: float
    mc_se: float
    ana_mean: float
    mc_std: float
    mc_std_se: float
    ana_std: float


def table1_report(realizations: int = 100_000, master_seed: int = 0, workers: int = 1) -> list[Table1Row]:
    rows = []
    for n, m in TABLE1_ROWS:
        cfg = EnsembleConfig(n, m, 1, TABLE1_X, realizations, master_seed, workers=workers)
        st, _ = sample_interference(cfg)
        rows.append(Table1Row(
            n, m, st.mean, st.stderr, moments.mean_interference(n, m, 1, TABLE1_X),
            st.std, st.std_stderr, moments.std_dev(n, m, 1, TABLE1_X),
        ))
    return rows


GRID_LIMITS = (2, 1024)


def moment_grid(n_values, m_values, x: float, quantity: str = "mean") -> list[tuple[int, int, float]]:
    """``(n, m, ln q)`` for every pair, ``q`` the analytic mean or standard deviation."""
    if quantity not in ("mean", "std"):
        raise ValueError(f"quantity must be 'mean' or 'std', got {quantity!r}")
    lo, hi = GRID_LIMITS
    for v in list(n_values) + list(m_values):
        if not lo <= v <= hi:
            raise ValueError(f"grid values must lie in {lo}..{hi}, got {v}")
    out = []
    for n in n_values:
        for m in m_values:
            q = moments.mean_interference(n, m, 1, x) if quantity == "mean" else moments.std_dev(n, m, 1, x)
            out.append((int(n), int(m), math.log(q)))
    return out


# output formats


def json_safe(obj):
    """Replace non-finite floats (not valid JSON) by the strings "inf", "-inf", "nan"."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    return obj


def fmt(v) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(v), ".17g")


def histogram_csv(hist: Histogram, master_seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# master_seed={master_seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["edge_low", "edge_high", "count", "density"])
    for lo, hi, c, dens in zip(hist.edges[:-1], hist.edges[1:], hist.counts, hist.density):
        w.writerow([fmt(lo), fmt(hi), int(c), fmt(dens)])
    return buf.getvalue()


def samples_csv(samples, master_seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# master_seed={master_seed}\n")
    buf.write("interference\n")
    buf.writelines(fmt(v) + "\n" for v in samples)
    return buf.getvalue()


def read_samples_csv(path) -> np.ndarray:
    """Read a one-column sample file (header line and ``#`` comments skipped)."""
    vals = []
    with open(path, newline="") as fh:
        for row in csv.reader(line for line in fh if not line.startswith("#")):
            if not row:
                continue
            try:
                vals.append(float(row[0]))
            except ValueError:
                continue  # header
    return np.array(vals)


def grid_csv(grid, master_seed: int | None = None) -> str:
    buf = io.StringIO()
    if master_seed is not None:
        buf.write(f"# master_seed={master_seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "value"])
    for n, m, v in grid:
        w.writerow([n, m, fmt(v)])
    return buf.getvalue()


def table1_csv(rows: list[Table1Row], master_seed: int) -> str:
    buf = io.StringIO()
    buf.write(f"# master_seed={master_seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "m", "mc_mean", "mc_se", "ana_mean", "mc_std", "ana_std"])
    for r in rows:
        w.writerow([r.n, r.m, fmt(r.mc_mean), fmt(r.mc_se), fmt(r.ana_mean), fmt(r.mc_std), fmt(r.ana_std)])
    return buf.getvalue()


def version_string() -> str:
    """``git describe`` of the source tree when available, else the installed version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


@dataclass
class Manifest:
    command: str
    config: dict
    master_seed: int | None
    version: str = field(default_factory=version_string)
    elapsed_seconds: float = 0.0
    python: str = field(default_factory=platform.python_version)
    numpy: str = np.__version__

    def to_dict(self) -> dict:
        return asdict(self)


def manifest_for(result: EnsembleResult) -> Manifest:
    cfg = asdict(result.config)
    return Manifest("mc", cfg, result.config.master_seed, elapsed_seconds=result.elapsed)
