"""Trace persistence (CSV) and resampling onto a fixed time grid.

CSV layout, one header line, ``,`` delimiter, ``.`` decimals, UTF-8::

    vehicle_id,t_s,position_m,speed_mps,rsrp_dbm,rsrq_db,rssi_dbm,snr_db,
    serving_cell_id,cell_load,connected_devices,throughput_mbps

Columns are matched by header name, so their order in an input file is free.
Extra columns are ignored.  Numbers are written with six decimals.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, SchemaError
from .records import CSV_COLUMNS, NUMERIC_COLUMNS, CellState, PhyMeasurement, TraceSample, VehicleTrace

__all__ = [
    "CSV_COLUMNS",
    "CellState",
    "PhyMeasurement",
    "TraceSample",
    "VehicleTrace",
    "load_csv",
    "load_traces",
    "resample",
    "store_csv",
]

_FLOAT_FMT = "{:.6f}"


def _bin_index(t: np.ndarray, period_s: float) -> np.ndarray:
    # Corrected so that k*p <= t < (k+1)*p holds for the floating-point
    # products themselves; grid times k*p then map back to bin k.
    k = np.floor(t / period_s)
    k = np.where(k * period_s > t, k - 1, k)
    k = np.where((k + 1) * period_s <= t, k + 1, k)
    return k.astype(np.int64)


def resample(trace: VehicleTrace, period_s: float) -> VehicleTrace:
    """Aggregate samples into bins ``[k*period, (k+1)*period)``.

    Numeric columns are averaged.  The serving cell is the most frequent one
    in the bin, ties going to the value seen first.  Empty bins are dropped.
    """
    if not period_s > 0:
        raise DomainError("period_s must be > 0")
    if len(trace) == 0:
        raise DomainError(f"cannot resample empty trace of vehicle {trace.vehicle_id}")
    bins = _bin_index(trace.t, period_s)
    # bins are non-decreasing since timestamps are increasing
    starts = np.flatnonzero(np.r_[True, bins[1:] != bins[:-1]])
    counts = np.diff(np.r_[starts, len(bins)])
    out = {"t_s": bins[starts] * period_s}
    for name in NUMERIC_COLUMNS:
        if name == "t_s":
            continue
        out[name] = np.add.reduceat(trace.columns[name], starts) / counts
    cells = trace.columns["serving_cell_id"]
    modes = np.empty(len(starts), dtype=np.int64)
    for j, (s, c) in enumerate(zip(starts, counts)):
        if c == 1:
            modes[j] = cells[s]
            continue
        chunk = cells[s : s + c]
        values, first_idx, freq = np.unique(chunk, return_index=True, return_counts=True)
        top = freq == freq.max()
        modes[j] = values[top][np.argmin(first_idx[top])]
    out["serving_cell_id"] = modes
    return VehicleTrace(trace.vehicle_id, out)


def store_csv(traces, path) -> None:
    """Write one or more traces into a single CSV file."""
    if isinstance(traces, VehicleTrace):
        traces = [traces]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for tr in traces:
            c = tr.columns
            for i in range(len(tr)):
                row = [tr.vehicle_id]
                for name in CSV_COLUMNS[1:]:
                    v = c[name][i]
                    row.append(str(int(v)) if name == "serving_cell_id" else _FLOAT_FMT.format(v))
                w.writerow(row)


def load_csv(path) -> list[VehicleTrace]:
    """Read traces written by :func:`store_csv` (or any file with that header).

    Traces are returned in order of first appearance of their vehicle id.
    """
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a header line") from None
        header = [h.strip() for h in header]
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        pos = {name: header.index(name) for name in CSV_COLUMNS}
        data: dict[str, dict[str, list]] = {}
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) < len(header):
                raise ParseError(line, f"expected {len(header)} fields, got {len(row)}")
            vid = row[pos["vehicle_id"]].strip()
            cols = data.setdefault(vid, {name: [] for name in CSV_COLUMNS[1:]})
            for name in CSV_COLUMNS[1:]:
                raw = row[pos[name]].strip()
                try:
                    val = int(raw) if name == "serving_cell_id" else float(raw)
                except ValueError:
                    raise ParseError(line, f"bad value {raw!r} in column {name}") from None
                if name != "serving_cell_id" and not math.isfinite(val):
                    raise ParseError(line, f"non-finite value in column {name}")
                cols[name].append(val)
    return [VehicleTrace(vid, cols) for vid, cols in data.items()]


def load_traces(path) -> list[VehicleTrace]:
    """Load a CSV file, or every ``*.csv`` in a directory (sorted by name)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.is_dir():
        traces = []
        for f in sorted(path.glob("*.csv")):
            traces.extend(load_csv(f))
        return traces
    return load_csv(path)
