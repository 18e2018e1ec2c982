"""Command line front end: ``cueinterf {mc,moments,verify,table1,grid,fit}``."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import ensemble, moments, weingarten
from .thermal import DIMENSION_CAP

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
WORKERS_ENV = "CUEINTERF_WORKERS"
DEFAULT_N_LIST = (4, 5, 6, 8)


class UsageError(Exception):
    pass


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _x_value(text: str) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        v = float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(v) or v < 0:
        raise argparse.ArgumentTypeError(f"x must be >= 0 or 'inf', got {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def parse_axis(text: str) -> list[int]:
    """``"8"``, ``"2:16"`` (every integer), ``"2:64:4"`` (step 4) or ``"2:1024:log[:count]"``."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return [int(parts[0])]
        lo, hi = int(parts[0]), int(parts[1])
        if lo > hi:
            raise ValueError
        if len(parts) >= 3 and parts[2] == "log":
            count = int(parts[3]) if len(parts) == 4 else 20
            return sorted({int(round(v)) for v in np.geomspace(lo, hi, count)})
        step = int(parts[2]) if len(parts) == 3 else 1
        return list(range(lo, hi + 1, step))
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use a, a:b, a:b:step or a:b:log[:count]") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_env_args(p, need_n=True):
    if need_n:
        p.add_argument("--n", type=int, required=True, help="system dimension")
    p.add_argument("--d", type=int, default=2, help="levels per environment spin")
    p.add_argument("--s", type=int, default=1, help="number of environment spins")
    p.add_argument("--x", type=_x_value, default=0.0, help="inverse temperature; 'inf' for T = 0")


def _check_env_args(args):
    if args.n < 1:
        raise UsageError(f"--n must be >= 1, got {args.n}")
    if args.d < 1 or args.s < 1:
        raise UsageError("--d and --s must be >= 1")
    if args.d**args.s > DIMENSION_CAP:
        raise UsageError(f"environment dimension {args.d}**{args.s} exceeds the cap {DIMENSION_CAP}")


# subcommands


def cmd_mc(args) -> int:
    _check_env_args(args)
    cfg = ensemble.EnsembleConfig(
        args.n, args.d, args.s, args.x, args.realizations, args.seed,
        args.bins, args.bin_scale, args.workers,
    )
    res = ensemble.run_ensemble(cfg, keep_samples=bool(args.samples))
    man = ensemble.manifest_for(res).to_dict()
    st = res.stats
    summary = {
        "count": st.count, "mean": st.mean, "stderr": st.stderr, "std": st.std,
        "std_stderr": st.std_stderr, "min": st.min, "max": st.max,
    }
    if args.format == "json":
        hist = res.histogram
        body = {
            "manifest": man,
            "stats": summary,
            "histogram": {
                "edges": hist.edges.tolist(), "counts": hist.counts.tolist(),
                "density": hist.density.tolist(), "total": hist.total,
            },
        }
        _emit(json.dumps(ensemble.json_safe(body), indent=2) + "\n", args.out)
    else:
        _emit(ensemble.histogram_csv(res.histogram, cfg.master_seed), args.out)
        man["stats"] = summary
        text = json.dumps(ensemble.json_safe(man), indent=2) + "\n"
        if args.out:
            Path(args.out + ".manifest.json").write_text(text)
        else:
            sys.stderr.write(text)
    if args.samples:
        Path(args.samples).write_text(ensemble.samples_csv(res.samples, cfg.master_seed))
    return EXIT_OK


def cmd_moments(args) -> int:
    _check_env_args(args)
    rep = moments.moment_report(args.n, args.d, args.s, args.x)
    fields = asdict(rep)
    if args.format == "json":
        print(json.dumps(ensemble.json_safe(fields), indent=2))
    elif args.format == "csv":
        print(",".join(fields))
        print(",".join(str(v) if isinstance(v, int) else ensemble.fmt(v) for v in fields.values()))
    else:
        print(f"n={rep.n} d={rep.d} s={rep.s} m={rep.m} x={rep.x:g}")
        print(f"mean           {rep.mean:.5f}")
        print(f"second_moment  {rep.second_moment:.5f}")
        print(f"variance       {rep.variance:.5f}")
        print(f"std            {rep.std_dev:.5f}")
    return EXIT_OK


def _rel(a, b) -> float:
    return abs(a - b) / abs(b) if b else abs(a)


def verify_diagrams(n_list) -> list[tuple[str, int, float, float, float, bool]]:
    rows = []
    for N in n_list:
        for name in moments.DIAGRAM_TABLE:
            closed = moments.diagram(name, N)
            oracle = weingarten.diagram_value(name, N)
            err = _rel(oracle, closed)
            rows.append((name, N, closed, oracle, err, err <= 1e-12))
    return rows


def verify_second_moment(pairs, xs=(0.0, 0.5, 5.0)):
    rows = []
    for n, m in pairs:
        for x in xs:
            brute = weingarten.brute_second_moment(n, m, x)
            ana = moments.second_moment(n, m, 1, x)
            alt = moments.second_moment(n, m, 1, x, c_b=3 - moments.C_B)
            rows.append((n, m, x, brute, _rel(ana, brute), _rel(alt, brute)))
    return rows


def cmd_verify(args) -> int:
    n_list = args.n_list or list(DEFAULT_N_LIST)
    bad = [N for N in n_list if N < weingarten.MAX_ORDER]
    if bad:
        raise UsageError(f"diagram checks need N >= {weingarten.MAX_ORDER} (degree-4 Gram matrix); got {bad}")
    ok = True
    print(f"{'diagram':<8}{'N':>4}  {'closed form':>24}  {'oracle':>24}  {'rel err':>9}")
    drows = verify_diagrams(n_list)
    for name, N, c, o, e, good in drows:
        ok &= good
        print(f"{name:<8}{N:>4}  {c:>24.17g}  {o:>24.17g}  {e:>9.2e}  {'pass' if good else 'FAIL'}")
    npass = sum(r[-1] for r in drows)
    print(f"diagrams: {npass}/{len(drows)} pass")

    print("\nmean: brute-force sum vs closed form")
    for n in (2, 3, 4):
        for m in (1, 2, 3, 4):
            for x in (0.0, 0.5, 5.0):
                e = _rel(moments.mean_interference(n, m, 1, x), weingarten.brute_mean(n, m, x))
                good = e <= 1e-12
                ok &= good
                if not good:
                    print(f"  n={n} m={m} x={x}: rel err {e:.2e} FAIL")
    print("  done")

    pairs = [(2, 2), (2, 3), (3, 2)] if args.deep else [(2, 2)]
    print(f"\nsecond moment: brute force vs closed form (c_B = {moments.C_B}; alternative {3 - moments.C_B})")
    worst_alt = 0.0
    for n, m, x, brute, e, e_alt in verify_second_moment(pairs):
        good = e <= 1e-10
        ok &= good
        worst_alt = max(worst_alt, e_alt)
        print(f"  n={n} m={m} x={x:<4g} brute={brute:.17g} rel err {e:.2e} (alternative {e_alt:.2e}) "
              f"{'pass' if good else 'FAIL'}")
    arb = worst_alt > 0.01
    ok &= arb
    print(f"  alternative coefficient rejected: {'yes' if arb else 'NO'}")
    print("\nOK" if ok else "\nFAILED")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_table1(args) -> int:
    t0 = time.perf_counter()
    rows = ensemble.table1_report(args.realizations, args.seed, args.workers)
    if args.format == "csv":
        _emit(ensemble.table1_csv(rows, args.seed), args.out)
    elif args.format == "json":
        body = {
            "manifest": ensemble.Manifest(
                "table1", {"realizations": args.realizations, "x": ensemble.TABLE1_X, "workers": args.workers},
                args.seed, elapsed_seconds=time.perf_counter() - t0,
            ).to_dict(),
            "rows": [asdict(r) for r in rows],
        }
        _emit(json.dumps(ensemble.json_safe(body), indent=2) + "\n", args.out)
    else:
        lines = [f"x={ensemble.TABLE1_X} realizations={args.realizations} seed={args.seed}",
                 f"{'n':>3}{'m':>3}  {'<I> mc':>9} {'se':>8}  {'<I> ana':>9}  {'sd mc':>9} {'se':>8}  {'sd ana':>9}"]
        for r in rows:
            lines.append(f"{r.n:>3}{r.m:>3}  {r.mc_mean:9.5f} {r.mc_se:8.5f}  {r.ana_mean:9.5f}  "
                         f"{r.mc_std:9.5f} {r.mc_std_se:8.5f}  {r.ana_std:9.5f}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_grid(args) -> int:
    grid = ensemble.moment_grid(args.n, args.m, args.x, args.quantity)
    if args.format == "json":
        body = {"x": args.x, "quantity": args.quantity,
                "cells": [{"n": n, "m": m, "value": v} for n, m, v in grid]}
        _emit(json.dumps(ensemble.json_safe(body), indent=2) + "\n", args.out)
    else:
        _emit(ensemble.grid_csv(grid), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    samples = ensemble.read_samples_csv(args.input)
    fit = ensemble.fit_lognormal(samples)
    out = {"mu": fit.mu, "sigma": fit.sigma, "ks_distance": fit.ks_distance,
           "used": fit.used, "excluded": fit.excluded}
    if args.n2_check:
        out["ks_n2_analytic"] = ensemble.analytic_cdf_check_n2(samples)
    if args.format == "json":
        print(json.dumps(out, indent=2))
    else:
        print(",".join(out))
        print(",".join(str(v) if isinstance(v, int) else ensemble.fmt(v) for v in out.values()))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cueinterf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    workers = _default_workers()

    p = sub.add_parser("mc", help="sample the interference distribution")
    _add_env_args(p)
    p.add_argument("--realizations", type=_positive_int, default=100_000)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--bin-scale", choices=("log", "linear"), default="log")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--workers", type=_positive_int, default=workers)
    p.add_argument("--out", help="histogram file (manifest goes to OUT.manifest.json)")
    p.add_argument("--samples", help="also write raw samples to this CSV")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("moments", help="analytic mean, second moment and standard deviation")
    _add_env_args(p)
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("verify", help="check the diagram table and moments against the exact oracle")
    p.add_argument("--n-list", type=int, nargs="+", help=f"dimensions for the diagram checks (default {DEFAULT_N_LIST})")
    p.add_argument("--deep", action="store_true", help="brute-force second moments at (2,2), (2,3), (3,2)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table1", help="Monte Carlo vs analytic mean and std at x = 0.1")
    p.add_argument("--realizations", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--workers", type=_positive_int, default=workers)
    p.add_argument("--out")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("grid", help="ln(mean) or ln(std) on an (n, m) grid")
    p.add_argument("--x", type=_x_value, required=True)
    p.add_argument("--quantity", choices=("mean", "std"), default="mean")
    p.add_argument("--n", type=parse_axis, required=True, help="a, a:b, a:b:step or a:b:log[:count]")
    p.add_argument("--m", type=parse_axis, required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("fit", help="log-normal fit of sampled interference values")
    p.add_argument("--input", required=True, help="sample CSV as written by 'mc --samples'")
    p.add_argument("--n2-check", action="store_true", help="also report KS distance to the n=2 unitary law")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError) as exc:
        print(f"cueinterf {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
