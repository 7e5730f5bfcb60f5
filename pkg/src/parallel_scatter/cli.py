"""Command-line sweeps over a network config.

Exit status: 0 on success, 1 when no point could be computed or the oracle
check fails, 2 for usage or config errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import TextIO

import numpy as np

from . import __version__
from .config import ConfigError, NetworkConfig, parse_config
from .errors import SingularityError
from .network import NetworkNode, evaluate
from .numerics import Tolerances
from .oracle import oracle_transfer_matrix
from .transport import (
    OK,
    OPAQUE,
    SINGULAR,
    SpectrumPoint,
    find_resonances,
    spectrum_point,
    wavenumber_grid,
)

log = logging.getLogger("parallel_scatter")

CSV_HEADER = "k,re_t,im_t,re_r,im_r,T,R,flux_error,status"
RESONANCE_HEADER = "k_peak,T_peak,width,plateau"
ORACLE_LIMIT = 1e-8


def fmt(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def _round12(x: float):
    x = float(x)
    return None if math.isnan(x) else float(format(x, ".12g"))


def _task(args) -> tuple[SpectrumPoint, float | None]:
    node, k, tol, oracle_check = args
    point = spectrum_point(node, k, tol=tol)
    diff = None
    if oracle_check and point.regular:
        try:
            fast = evaluate(node, k, tol=tol)
            slow = evaluate(node, k, tol=tol, parallel_rule=oracle_transfer_matrix)
            diff = float(np.max(np.abs(fast - slow)))
        except SingularityError:
            diff = None
    return point, diff


def compute_sweep(
    node: NetworkNode, k_min: float, k_max: float, n_points: int, *, tol: Tolerances,
    jobs: int = 1, oracle_check: bool = False,
) -> list[tuple[SpectrumPoint, float | None]]:
    tasks = [(node, float(k), tol, oracle_check) for k in wavenumber_grid(k_min, k_max, n_points)]
    if jobs <= 1:
        return [_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


def _point_row(p: SpectrumPoint) -> list[str]:
    if p.regular:
        a = p.amplitudes
        values = [a.t.real, a.t.imag, a.r.real, a.r.imag, a.big_t, a.big_r, p.flux_error]
    else:
        values = [math.nan] * 7
    return [fmt(p.k), *(fmt(v) for v in values), p.status]


def run_sweep(
    cfg: NetworkConfig,
    out: TextIO,
    *,
    fmt_name: str = "csv",
    jobs: int = 1,
    resonances: bool = False,
    threshold: float | None = None,
    oracle_check: bool | None = None,
    config_text: str = "",
    err: TextIO | None = None,
) -> int:
    """Write the sweep to ``out`` and return the exit status."""
    err = sys.stderr if err is None else err
    tol = cfg.options.tolerances
    node = cfg.resolved_network()
    check = cfg.options.oracle_check if oracle_check is None else oracle_check
    threshold = cfg.options.resonance_threshold if threshold is None else threshold
    sw = cfg.sweep

    results = compute_sweep(node, sw.k_min, sw.k_max, sw.n_points, tol=tol, jobs=jobs, oracle_check=check)
    points = [p for p, _ in results]
    n_ok = sum(p.status == OK for p in points)
    for status in (SINGULAR, OPAQUE):
        count = sum(p.status == status for p in points)
        if count:
            first = next(p for p in points if p.status == status)
            print(f"warning: {count} {status} point(s); first at k={fmt(first.k)}: {first.message}", file=err)

    found = find_resonances(points, threshold, node, tol=tol) if resonances and n_ok else []
    diffs = [d for _, d in results if d is not None]
    max_diff = max(diffs) if diffs else math.nan

    if fmt_name == "json":
        digest = hashlib.sha256(config_text.encode("utf-8")).hexdigest()
        out.write(json.dumps({"version": __version__, "config_sha256": digest}) + "\n")
        keys = CSV_HEADER.split(",")
        for p in points:
            row = _point_row(p)
            obj = {k: _round12(v) for k, v in zip(keys[:-1], row[:-1])}
            obj["status"] = row[-1]
            out.write(json.dumps(obj) + "\n")
        for r in found:
            out.write(json.dumps({"resonance": {
                "k_peak": _round12(r.k_peak), "T_peak": _round12(r.big_t_peak),
                "width": None if r.width_estimate is None else _round12(r.width_estimate),
                "plateau": r.plateau,
            }}) + "\n")
        if check:
            out.write(json.dumps({"oracle_max_abs_diff": _round12(max_diff)}) + "\n")
    else:
        out.write(CSV_HEADER + "\n")
        for p in points:
            out.write(",".join(_point_row(p)) + "\n")
        if resonances:
            out.write("\n" + RESONANCE_HEADER + "\n")
            for r in found:
                width = "nan" if r.width_estimate is None else fmt(r.width_estimate)
                out.write(f"{fmt(r.k_peak)},{fmt(r.big_t_peak)},{width},{str(r.plateau).lower()}\n")
        if check:
            out.write(f"oracle_max_abs_diff,{fmt(max_diff)}\n")

    if n_ok == 0:
        print("error: no wavenumber in the sweep could be evaluated", file=err)
        return 1
    if check:
        if not diffs:
            print("error: oracle check produced no comparable points", file=err)
            return 1
        if max_diff > ORACLE_LIMIT:
            print(f"error: oracle disagreement {max_diff:.3e} exceeds {ORACLE_LIMIT}", file=err)
            return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="parallel-scatter",
        description="Transmission spectra of series/parallel scattering networks.",
    )
    p.add_argument("--config", required=True, help="network config file")
    p.add_argument("--out", default="-", help="output path, '-' for stdout (default)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--oracle-check", action="store_true", help="compare every bundle against the amplitude solver")
    p.add_argument("--resonances", action="store_true", help="append a table of refined transmission peaks")
    p.add_argument("--threshold", type=float, default=None, help="minimum |t|^2 for a resonance")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (output is identical for any value)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    if args.threshold is not None and not 0 < args.threshold <= 1:
        print("error: --threshold must lie in (0, 1]", file=sys.stderr)
        return 2
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return 2

    kwargs = dict(
        fmt_name=args.format, jobs=args.jobs, resonances=args.resonances, threshold=args.threshold,
        oracle_check=True if args.oracle_check else None, config_text=text,
    )
    if args.out == "-":
        return run_sweep(cfg, sys.stdout, **kwargs)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        return run_sweep(cfg, fh, **kwargs)


if __name__ == "__main__":
    sys.exit(main())
