"""File formats: Matrix Market supports, CSV traces and summaries, JSON metadata.

Floats are written with repr so a write/read round trip is exact and
repeated runs produce byte-identical bodies (timing columns excepted).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .sampled import SampleSet
from .solvers import Trace, TraceRecord

__all__ = [
    "write_sample_set",
    "read_sample_set",
    "write_trace_csv",
    "read_trace_csv",
    "write_summary_csv",
    "write_meta",
    "read_meta",
    "TRACE_COLUMNS",
    "SUMMARY_COLUMNS",
]

_MM_HEADER = "%%MatrixMarket matrix coordinate real general"

TRACE_COLUMNS = ["iter", "time_s", "cost", "grad_norm", "step_or_radius", "inner_iters", "rho"]
SUMMARY_COLUMNS = [
    "algo",
    "metric",
    "init",
    "status",
    "iterations",
    "iters_to_tol",
    "final_cost",
    "final_grad_norm",
    "test_rmse",
    "wall_time_s",
    "error",
]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (np.floating,)):
        return repr(float(value))
    return str(value)


def write_sample_set(path: str | Path, omega: SampleSet) -> None:
    """Write a support in 1-based Matrix Market coordinate format."""
    path = Path(path)
    with path.open("w", encoding="ascii") as fh:
        fh.write(_MM_HEADER + "\n")
        fh.write(f"{omega.n_rows} {omega.n_cols} {omega.nnz}\n")
        for i, j, v in zip(omega.rows, omega.cols, omega.values):
            fh.write(f"{i + 1} {j + 1} {_fmt(float(v))}\n")


def read_sample_set(path: str | Path) -> SampleSet:
    """Read a Matrix Market coordinate file into canonical form."""
    path = Path(path)
    with path.open("r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if header.lower() != _MM_HEADER.lower():
            raise ValueError(f"unsupported Matrix Market header: {header!r}")
        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"malformed size line: {line!r}")
        n_rows, n_cols, nnz = (int(p) for p in parts)
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        values = np.empty(nnz, dtype=np.float64)
        for k in range(nnz):
            entry = fh.readline().split()
            if len(entry) != 3:
                raise ValueError(f"malformed entry on line {k + 3}")
            rows[k] = int(entry[0]) - 1
            cols[k] = int(entry[1]) - 1
            values[k] = float(entry[2])
    return SampleSet(n_rows, n_cols, rows, cols, values)


def write_trace_csv(path: str | Path, trace: Trace) -> None:
    path = Path(path)
    with path.open("w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace.records:
            writer.writerow(
                [
                    rec.iteration,
                    _fmt(rec.wall_time_s),
                    _fmt(rec.cost),
                    _fmt(rec.grad_norm),
                    _fmt(rec.step_or_radius),
                    _fmt(rec.inner_iters),
                    _fmt(rec.rho),
                ]
            )


def read_trace_csv(path: str | Path) -> list[TraceRecord]:
    path = Path(path)
    records = []
    with path.open("r", encoding="ascii", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace columns: {reader.fieldnames}")
        for row in reader:
            records.append(
                TraceRecord(
                    iteration=int(row["iter"]),
                    wall_time_s=float(row["time_s"]),
                    cost=float(row["cost"]),
                    grad_norm=float(row["grad_norm"]),
                    step_or_radius=float(row["step_or_radius"]) if row["step_or_radius"] else None,
                    inner_iters=int(row["inner_iters"]) if row["inner_iters"] else None,
                    rho=float(row["rho"]) if row["rho"] else None,
                )
            )
    return records


def write_summary_csv(path: str | Path, rows: list[dict]) -> None:
    path = Path(path)
    with path.open("w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in SUMMARY_COLUMNS])


def write_meta(path: str | Path, meta: dict) -> None:
    Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="ascii")


def read_meta(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="ascii"))
