"""Look-ahead targets and feature assembly for (self, next) vehicle pairs.

A row at time ``t`` predicts the self-vehicle throughput at ``t + tau`` where
``tau = d / v`` is the time the self-vehicle needs to cover the current gap
``d`` to the next vehicle at its current speed ``v``.
"""

from __future__ import annotations

import csv
import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ParseError, SchemaError
from .records import VehicleTrace

V_MIN_MPS = 1.0

_PHY = ("snr_db", "rsrp_dbm", "rsrq_db", "rssi_dbm")
_CELL = ("cell_load", "connected_devices")


class FeatureSetKind(enum.Enum):
    BASELINE = "baseline"
    PHY = "phy"
    PHY_AND_CELL = "phy-cell"
    NEXT_PHY = "next-phy"
    NEXT_PHY_AND_CELL = "next-phy-cell"

    @property
    def sources(self) -> list[tuple[str, str]]:
        """``(vehicle, trace column)`` for each feature, in schema order."""
        if self is FeatureSetKind.BASELINE:
            return [("self", "throughput_mbps")]
        if self is FeatureSetKind.PHY:
            return [("self", c) for c in _PHY]
        if self is FeatureSetKind.PHY_AND_CELL:
            return [("self", c) for c in _PHY + _CELL]
        if self is FeatureSetKind.NEXT_PHY:
            return [("next", c) for c in _PHY]
        return [("next", c) for c in _PHY] + [("self", c) for c in _CELL]

    @property
    def schema(self) -> list[str]:
        return [f"{who}_{_short(col)}" for who, col in self.sources]

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, value) -> FeatureSetKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise SchemaError(f"unknown feature set {value!r} (expected one of {names})") from None


_LABELS = {
    FeatureSetKind.BASELINE: "Baseline",
    FeatureSetKind.PHY: "PHY",
    FeatureSetKind.PHY_AND_CELL: "PHY & Cell",
    FeatureSetKind.NEXT_PHY: "Next PHY",
    FeatureSetKind.NEXT_PHY_AND_CELL: "Next PHY & Cell",
}


def _short(col: str) -> str:
    return {
        "throughput_mbps": "throughput",
        "snr_db": "snr",
        "rsrp_dbm": "rsrp",
        "rsrq_db": "rsrq",
        "rssi_dbm": "rssi",
        "cell_load": "cell_load",
        "connected_devices": "connected_devices",
    }[col]


@dataclass(frozen=True)
class AlignedRow:
    t_s: float
    features: dict[str, float]
    target_mbps: float
    tau_s: float
    d_sn_m: float
    # Grid timestamp of the self sample the target was read from.
    target_t_s: float


@dataclass
class SupervisedDataset:
    rows: list[AlignedRow]
    feature_schema: list[str]
    self_id: str
    next_id: str
    drop_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if list(row.features) != self.feature_schema:
                raise SchemaError(f"row {i} features do not match schema {self.feature_schema}")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def X(self) -> np.ndarray:
        return np.array([[r.features[k] for k in self.feature_schema] for r in self.rows], dtype=float).reshape(
            len(self.rows), len(self.feature_schema)
        )

    @property
    def y(self) -> np.ndarray:
        return np.array([r.target_mbps for r in self.rows], dtype=float)

    def subset(self, idx) -> SupervisedDataset:
        return SupervisedDataset([self.rows[i] for i in idx], list(self.feature_schema), self.self_id, self.next_id)


def _nearest(t: np.ndarray, query, tol: float):
    """Index of the sample nearest to each query time, -1 beyond ``tol``.

    Equidistant neighbours resolve to the earlier sample.
    """
    q = np.atleast_1d(np.asarray(query, dtype=float))
    right = np.clip(np.searchsorted(t, q, side="left"), 0, len(t) - 1)
    left = np.clip(right - 1, 0, len(t) - 1)
    use_left = np.abs(q - t[left]) <= np.abs(t[right] - q)
    idx = np.where(use_left, left, right)
    idx = np.where(np.abs(t[idx] - q) <= tol + 1e-9, idx, -1)
    return idx


def _period(trace: VehicleTrace) -> float:
    if len(trace) < 2:
        return 1.0
    return float(np.median(np.diff(trace.t)))


def pair_distance(self_trace: VehicleTrace, next_trace: VehicleTrace, t_s: float, tol_s: float = 0.5) -> float | None:
    """Road distance between the two vehicles at ``t_s``; None if either has no sample within ``tol_s``."""
    i = _nearest(self_trace.t, t_s, tol_s)[0]
    j = _nearest(next_trace.t, t_s, tol_s)[0]
    if i < 0 or j < 0:
        return None
    return abs(float(next_trace.column("position_m")[j] - self_trace.column("position_m")[i]))


def lookahead_delay(d_sn_m: float, v_s_mps: float, v_min: float = V_MIN_MPS) -> float | None:
    """``d / v``, or None when the self-vehicle is (nearly) standing still."""
    if not v_s_mps > v_min:
        return None
    return d_sn_m / v_s_mps


def build_dataset(
    self_trace: VehicleTrace,
    next_trace: VehicleTrace,
    kind,
    period_s: float | None = None,
    v_min: float = V_MIN_MPS,
) -> SupervisedDataset:
    """Supervised rows for predicting self throughput at ``t + tau``.

    Both traces must already be on a common grid (see
    :func:`pqos.trace_store.resample`).  Dropped candidate rows are tallied in
    ``drop_counts`` under ``no_next_sample``, ``next_behind``,
    ``standstill`` and ``no_target``.
    """
    kind = FeatureSetKind.parse(kind)
    if period_s is None:
        period_s = _period(self_trace)
    tol = 0.5 * period_s
    ts = self_trace.t
    pos_s = self_trace.column("position_m")
    v_s = self_trace.column("speed_mps")
    tput = self_trace.column("throughput_mbps")

    j_next = _nearest(next_trace.t, ts, tol)
    has_next = j_next >= 0
    d_signed = np.where(has_next, next_trace.column("position_m")[j_next] - pos_s, np.nan)
    ahead = has_next & (d_signed >= 0)
    moving = v_s > v_min
    tau = np.where(ahead & moving, d_signed / np.where(moving, v_s, 1.0), np.nan)
    usable = ahead & moving
    i_tgt = np.full(len(ts), -1)
    i_tgt[usable] = _nearest(ts, ts[usable] + tau[usable], tol)
    keep = usable & (i_tgt >= 0)

    drops = Counter(
        {
            "no_next_sample": int((~has_next).sum()),
            "next_behind": int((has_next & ~ahead).sum()),
            "standstill": int((ahead & ~moving).sum()),
            "no_target": int((usable & (i_tgt < 0)).sum()),
        }
    )
    if not keep.any():
        detail = ", ".join(f"{k}={v}" for k, v in drops.items())
        raise DomainError(
            f"no usable rows for self={self_trace.vehicle_id} next={next_trace.vehicle_id} ({detail})"
        )

    schema = kind.schema
    sources = []
    for who, col in kind.sources:
        if who == "self":
            sources.append(self_trace.column(col))
        else:
            # next-vehicle values at the matched sample, -1 never used for kept rows
            sources.append(next_trace.column(col)[np.maximum(j_next, 0)])
    rows = []
    for i in np.flatnonzero(keep):
        k = i_tgt[i]
        rows.append(
            AlignedRow(
                t_s=float(ts[i]),
                features={name: float(src[i]) for name, src in zip(schema, sources)},
                target_mbps=float(tput[k]),
                tau_s=float(tau[i]),
                d_sn_m=float(d_signed[i]),
                target_t_s=float(ts[k]),
            )
        )
    return SupervisedDataset(rows, schema, self_trace.vehicle_id, next_trace.vehicle_id, dict(drops))


_META = ("self_id", "next_id", "t_s", "target_t_s", "d_sn_m", "tau_s")


def store_dataset_csv(ds: SupervisedDataset, path) -> None:
    """Columns: self_id, next_id, t_s, target_t_s, d_sn_m, tau_s, <features>, target_mbps."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(_META) + ds.feature_schema + ["target_mbps"])
        for r in ds.rows:
            vals = [r.t_s, r.target_t_s, r.d_sn_m, r.tau_s] + [r.features[k] for k in ds.feature_schema]
            w.writerow([ds.self_id, ds.next_id] + [repr(float(v)) for v in vals] + [repr(r.target_mbps)])


def load_dataset_csv(path) -> SupervisedDataset:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty dataset file") from None
        missing = [c for c in _META + ("target_mbps",) if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        schema = [h for h in header if h not in _META and h != "target_mbps"]
        pos = {h: i for i, h in enumerate(header)}
        rows = []
        self_id = next_id = ""
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(reader.line_num, f"expected {len(header)} fields, got {len(row)}")
            try:
                num = {h: float(row[pos[h]]) for h in header if h not in ("self_id", "next_id")}
            except ValueError as exc:
                raise ParseError(reader.line_num, str(exc)) from None
            self_id, next_id = row[pos["self_id"]], row[pos["next_id"]]
            rows.append(
                AlignedRow(
                    t_s=num["t_s"],
                    features={k: num[k] for k in schema},
                    target_mbps=num["target_mbps"],
                    tau_s=num["tau_s"],
                    d_sn_m=num["d_sn_m"],
                    target_t_s=num["target_t_s"],
                )
            )
    if not rows:
        raise DomainError(f"{path}: dataset has no rows")
    return SupervisedDataset(rows, schema, self_id, next_id)
