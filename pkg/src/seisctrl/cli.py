"""Command-line entry points.

Subcommands:
  run <cfg> [--out DIR]      execute a scenario, write CSV/snapshots/manifest
  validate <cfg>             parse and validate only
  oracle <cfg> [...]         finite-difference cross-check of the solver
  compare <a.csv> <b.csv>    regression diff of two time-series files

Exit codes: 0 success, 1 validation/comparison failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config
from .output import (read_timeseries_csv, write_field_snapshot,
                     write_manifest, write_timeseries_csv)
from .simulate import oracle_compare, run_scenario

__all__ = ["main", "entry"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seisctrl",
        description="Closed-loop seismicity-rate control simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default="out", help="output directory")

    p_val = sub.add_parser("validate", help="parse and validate a config")
    p_val.add_argument("config")

    p_orc = sub.add_parser(
        "oracle",
        help="compare the spectral solver against the finite-difference "
             "reference on the uncontrolled problem")
    p_orc.add_argument("config")
    p_orc.add_argument("--grid", type=int, default=128)
    p_orc.add_argument("--dt", type=float, default=1.0)
    p_orc.add_argument("--horizon", type=float, default=None,
                       help="comparison horizon in hr (default: min(cfg, 4 months))")

    p_cmp = sub.add_parser("compare", help="diff two time-series CSV files")
    p_cmp.add_argument("csv_a")
    p_cmp.add_argument("csv_b")
    p_cmp.add_argument("--cols", nargs="*", default=None,
                       help="column names to compare (default: all shared)")
    p_cmp.add_argument("--rtol", type=float, default=1e-12)
    return parser


def _cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        result = run_scenario(cfg)
    except Exception as exc:  # overflow guard, instability, ...
        print(f"scenario failed: {exc}", file=sys.stderr)
        return 2
    write_timeseries_csv(result, out_dir / "timeseries.csv")
    for k, (t_snap, grid) in enumerate(result.snapshots):
        write_field_snapshot(grid, t_snap, cfg.domain_length,
                             out_dir / f"snapshot_{k:02d}.txt")
    write_manifest(result.manifest, out_dir / "manifest.json")
    print(f"wrote {out_dir / 'timeseries.csv'} "
          f"({len(result.t)} rows, {len(result.snapshots)} snapshots)")
    if result.termination != "completed":
        print(f"terminated early: {result.termination}", file=sys.stderr)
        return 2
    return 0


def _cmd_validate(args) -> int:
    try:
        parse_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    print(f"{args.config}: valid")
    return 0


def _cmd_oracle(args) -> int:
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 1
    try:
        report = oracle_compare(cfg, grid_n=args.grid, dt=args.dt,
                                horizon=args.horizon)
    except Exception as exc:
        print(f"oracle run failed: {exc}", file=sys.stderr)
        return 2
    print(f"finite-difference cross-check, n={report['grid_n']}, "
          f"dt={report['dt']} hr, horizon={report['horizon']} hr")
    for i, err in enumerate(report["region_rel_l2"], start=1):
        print(f"  region {i} mean-pressure rel L2: {err:.4%}")
    for j, err in enumerate(report["probe_rel_l2"], start=1):
        print(f"  probe {j} pressure rel L2:       {err:.4%}")
    return 0


def _cmd_compare(args) -> int:
    try:
        header_a, data_a = read_timeseries_csv(args.csv_a)
        header_b, data_b = read_timeseries_csv(args.csv_b)
    except OSError as exc:
        print(f"cannot read input: {exc}", file=sys.stderr)
        return 1
    cols = args.cols if args.cols else [c for c in header_a if c in header_b]
    missing = [c for c in cols if c not in header_a or c not in header_b]
    if missing:
        print(f"columns not present in both files: {missing}", file=sys.stderr)
        return 1
    if data_a.shape[0] != data_b.shape[0]:
        print(f"row count mismatch: {data_a.shape[0]} vs {data_b.shape[0]}",
              file=sys.stderr)
        return 1
    worst = 0.0
    for col in cols:
        a = data_a[:, header_a.index(col)]
        b = data_b[:, header_b.index(col)]
        scale = np.maximum(np.abs(a), np.abs(b))
        scale[scale == 0.0] = 1.0
        rel = float(np.max(np.abs(a - b) / scale))
        worst = max(worst, rel)
        print(f"  {col}: max rel diff {rel:.3e}")
    print(f"max rel diff over {len(cols)} columns: {worst:.3e} "
          f"(rtol {args.rtol:.1e})")
    return 0 if worst <= args.rtol else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "run": _cmd_run,
        "validate": _cmd_validate,
        "oracle": _cmd_oracle,
        "compare": _cmd_compare,
    }[args.command]
    return handler(args)


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
