"""Deterministic result serialization: time-series CSV, field snapshots.

Numbers are written with 17 significant digits (`%.17g`), LF line endings
and no locale formatting, so repeated fixed-step runs produce byte-identical
files and a read/write round trip reproduces every value exactly.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "timeseries_header",
    "write_timeseries_csv",
    "read_timeseries_csv",
    "write_field_snapshot",
    "read_field_snapshot",
    "write_manifest",
]


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def timeseries_header(m: int, m_s: int, n_ctl: int, m_r: int) -> list[str]:
    cols = ["t_hr"]
    cols += [f"R{i}" for i in range(1, m + 1)]
    cols += [f"r{i}" for i in range(1, m + 1)]
    cols += [f"Qs{i}" for i in range(1, m_s + 1)]
    cols += [f"Qc{i}" for i in range(1, n_ctl + 1)]
    cols += [f"D{i}" for i in range(1, m_r + 1)]
    cols.append("ye_norm")
    return cols


def write_timeseries_csv(result, path) -> None:
    """One row per output tick: t, R, log-reference r, fluxes, demand, error."""
    n = len(result.t)
    if n == 0:
        raise ValueError("refusing to write an empty time series")
    m = result.h.shape[1]
    m_s = result.Qs.shape[1]
    n_ctl = result.Qc.shape[1]
    m_r = result.D.shape[1]
    header = ",".join(timeseries_header(m, m_s, n_ctl, m_r))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for i in range(n):
            row = [result.t[i]]
            row += list(result.R[i])
            row += list(result.r[i])
            row += list(result.Qs[i])
            row += list(result.Qc[i])
            row += list(result.D[i])
            row.append(result.ye_norm[i])
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_timeseries_csv(path) -> tuple[list[str], np.ndarray]:
    """Header names and the value matrix of a written time-series file."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        data = [[float(tok) for tok in line.strip().split(",")]
                for line in fh if line.strip()]
    return header, np.array(data)


def write_field_snapshot(grid: np.ndarray, t_hr: float, domain_length: float,
                         path) -> None:
    """Plain-text snapshot: four header lines then ny rows of nx values.

    The grid is indexed (x, y); rows of the file run along y so each row
    holds nx values at fixed y.
    """
    grid = np.asarray(grid, float)
    if grid.ndim != 2:
        raise ValueError("snapshot grid must be two-dimensional")
    nx, ny = grid.shape
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"# t_hr={_fmt(t_hr)}\n")
        fh.write(f"# nx={nx} ny={ny}\n")
        fh.write(f"# D_km={_fmt(domain_length)}\n")
        fh.write("# units=MPa\n")
        for j in range(ny):
            fh.write(" ".join(_fmt(grid[i, j]) for i in range(nx)) + "\n")


def read_field_snapshot(path) -> tuple[dict, np.ndarray]:
    """Metadata dict and the (nx, ny) grid of a written snapshot file."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    meta = {}
    for line in lines[:4]:
        body = line.lstrip("# ")
        for itm in body.split():
            key, val = itm.split("=")
            meta[key] = val
    nx, ny = int(meta["nx"]), int(meta["ny"])
    rows = [[float(tok) for tok in line.split()] for line in lines[4:4 + ny]]
    grid = np.array(rows).T  # rows run along y
    if grid.shape != (nx, ny):
        raise ValueError(f"snapshot shape mismatch: {grid.shape} vs ({nx}, {ny})")
    return meta, grid


def write_manifest(manifest: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
