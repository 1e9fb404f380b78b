"""Error metric, the feature-set × vehicle-pair experiment grid, and
permutation feature importance."""

from __future__ import annotations

import datetime as _dt
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .alignment import FeatureSetKind, SupervisedDataset, build_dataset
from .errors import ConfigError, DomainError, SchemaError
from .gbt import GbtConfig, GbtModel, fit
from .records import VehicleTrace
from .trace_store import resample

log = logging.getLogger(__name__)

REPORT_FORMAT = "pqos-experiment"
REPORT_VERSION = 1


@dataclass(frozen=True)
class MrpeResult:
    mrpe_percent: float
    n_rows: int
    clamp_mbps: float = 1.0


def mrpe(predictions, targets, clamp_mbps: float = 1.0) -> MrpeResult:
    """Mean relative percentage error, ``100 * Σ|ŷ - y| / Σ max(y, clamp)``.

    Clamping the denominator keeps near-zero throughputs from blowing the
    ratio up.
    """
    p = np.asarray(predictions, dtype=float).ravel()
    y = np.asarray(targets, dtype=float).ravel()
    if len(p) != len(y):
        raise DomainError(f"length mismatch: {len(p)} predictions vs {len(y)} targets")
    if len(y) == 0:
        raise DomainError("MRPE needs at least one row")
    if not clamp_mbps > 0:
        raise DomainError("clamp_mbps must be > 0")
    value = 100.0 * float(np.sum(np.abs(p - y))) / float(np.sum(np.maximum(y, clamp_mbps)))
    return MrpeResult(value, len(y), clamp_mbps)


def permutation_importance(
    model: GbtModel,
    dataset: SupervisedDataset,
    n_repeats: int = 5,
    seed: int = 0,
    clamp_mbps: float = 1.0,
) -> list[tuple[str, float]]:
    """Mean MRPE increase (percentage points) from shuffling each column.

    Returned most important first; equal scores keep schema order.
    """
    if n_repeats < 1:
        raise DomainError("n_repeats must be >= 1")
    if len(dataset) == 0:
        raise DomainError("dataset is empty")
    if list(dataset.feature_schema) != list(model.feature_schema):
        raise SchemaError(f"dataset schema {dataset.feature_schema} does not match model {list(model.feature_schema)}")
    X = dataset.X
    y = dataset.y
    ref = mrpe(model.predict(X), y, clamp_mbps).mrpe_percent
    rng = np.random.default_rng(seed)
    scores = []
    for j, name in enumerate(dataset.feature_schema):
        deltas = []
        for _ in range(n_repeats):
            Xp = X.copy()
            Xp[:, j] = X[rng.permutation(len(X)), j]
            deltas.append(mrpe(model.predict(Xp), y, clamp_mbps).mrpe_percent - ref)
        scores.append((name, float(np.mean(deltas))))
    order = sorted(range(len(scores)), key=lambda i: (-scores[i][1], i))
    return [scores[i] for i in order]


@dataclass(frozen=True)
class ExperimentConfig:
    # (self_id, next_id); defaults mirror vehicle 4 following vehicles 1 and 3
    pairs: tuple[tuple[str, str], ...] = (("4", "1"), ("4", "3"))
    feature_sets: tuple[str, ...] = tuple(k.value for k in FeatureSetKind)
    gbt: GbtConfig = field(default_factory=GbtConfig)
    round_length_m: float = 18000.0
    # None: hold out the last round that has rows
    holdout_round: int | None = None
    resample_period_s: float = 1.0
    importance_repeats: int = 5
    clamp_mbps: float = 1.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple((str(s), str(n)) for s, n in self.pairs))
        object.__setattr__(self, "feature_sets", tuple(FeatureSetKind.parse(k).value for k in self.feature_sets))
        if isinstance(self.gbt, dict):
            object.__setattr__(self, "gbt", GbtConfig.from_dict(self.gbt))
        if not self.pairs:
            raise ConfigError("pairs", "at least one (self, next) pair is required")
        if not self.round_length_m > 0:
            raise ConfigError("round_length_m", "must be > 0")
        if not self.resample_period_s > 0:
            raise ConfigError("resample_period_s", "must be > 0")
        if self.importance_repeats < 1:
            raise ConfigError("importance_repeats", "must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key")
        return cls(**data)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pairs"] = [list(p) for p in self.pairs]
        d["feature_sets"] = list(self.feature_sets)
        return d


def load_experiment_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


def row_rounds(dataset: SupervisedDataset, self_trace: VehicleTrace, round_length_m: float) -> np.ndarray:
    """Round the self-vehicle is in at each row's target time.

    A position exactly at the end of a pass counts towards that pass.
    """
    t = self_trace.t
    tgt = np.array([r.target_t_s for r in dataset.rows])
    idx = np.searchsorted(t, tgt)
    idx = np.clip(idx, 0, len(t) - 1)
    if not np.allclose(t[idx], tgt, rtol=0, atol=1e-9):
        raise SchemaError("target timestamps do not lie on the self trace grid")
    pos = self_trace.column("position_m")[idx]
    return np.maximum(np.floor((pos - 1e-6) / round_length_m), 0).astype(np.int64)


def split_by_round(rounds: np.ndarray, holdout_round: int | None = None):
    """Train on rounds before the held-out one, test on the held-out round."""
    if len(rounds) == 0:
        raise DomainError("no rows to split")
    k = int(rounds.max()) if holdout_round is None else int(holdout_round)
    train = np.flatnonzero(rounds < k)
    test = np.flatnonzero(rounds == k)
    return k, train, test


@dataclass
class CellResult:
    self_id: str
    next_id: str
    feature_set: str
    status: str
    reason: str = ""
    mrpe: MrpeResult | None = None
    holdout_round: int | None = None
    n_train: int = 0
    n_test: int = 0
    mean_tau_s: float | None = None
    drop_counts: dict = field(default_factory=dict)
    importance: list = field(default_factory=list)
    # rows of (t_s, target_t_s, tau_s, round, y, y_hat) for held-out data
    predictions: list = field(default_factory=list)
    # (self_id, round, t_s) of every training row, for split audits
    train_keys: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mrpe"] = asdict(self.mrpe) if self.mrpe else None
        d["importance"] = [[name, score] for name, score in self.importance]
        d["predictions"] = [list(p) for p in self.predictions]
        d["train_keys"] = [list(k) for k in self.train_keys]
        return d


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    cells: list[CellResult]
    created_at: str = ""

    def cell(self, self_id, next_id, feature_set) -> CellResult:
        fs = FeatureSetKind.parse(feature_set).value
        for c in self.cells:
            if (c.self_id, c.next_id, c.feature_set) == (str(self_id), str(next_id), fs):
                return c
        raise KeyError((self_id, next_id, fs))

    def mrpe_table(self) -> dict[tuple[str, str, str], float]:
        return {
            (c.self_id, c.next_id, c.feature_set): c.mrpe.mrpe_percent for c in self.cells if c.status == "ok"
        }

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "version": REPORT_VERSION,
            "created_at": self.created_at,
            "split": "train on rounds before the held-out round, test on the held-out round "
            "(round of the self-vehicle at the target time)",
            "seeds": {"experiment": self.config.seed, "gbt": self.config.gbt.seed},
            "config": self.config.to_dict(),
            "cells": [c.to_dict() for c in self.cells],
        }

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")


def load_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != REPORT_FORMAT:
        raise SchemaError(f"{path}: not an experiment report")
    return doc


def _run_cell(self_tr, next_tr, kind: FeatureSetKind, config: ExperimentConfig) -> CellResult:
    cell = CellResult(self_tr.vehicle_id, next_tr.vehicle_id, kind.value, status="ok")
    ds = build_dataset(self_tr, next_tr, kind, period_s=config.resample_period_s)
    cell.drop_counts = dict(ds.drop_counts)
    rounds = row_rounds(ds, self_tr, config.round_length_m)
    k, train_idx, test_idx = split_by_round(rounds, config.holdout_round)
    cell.holdout_round = k
    cell.n_train, cell.n_test = len(train_idx), len(test_idx)
    if len(train_idx) == 0 or len(test_idx) == 0:
        cell.status = "failed"
        cell.reason = f"empty split (train={len(train_idx)}, test={len(test_idx)}, holdout round {k})"
        return cell
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    model = fit(train, config.gbt)
    y_hat = model.predict(test.X)
    cell.mrpe = mrpe(y_hat, test.y, config.clamp_mbps)
    cell.mean_tau_s = float(np.mean([r.tau_s for r in ds.rows]))
    cell.importance = permutation_importance(model, test, config.importance_repeats, config.seed, config.clamp_mbps)
    cell.predictions = [
        (r.t_s, r.target_t_s, r.tau_s, int(rounds[i]), r.target_mbps, float(p))
        for i, r, p in zip(test_idx, test.rows, y_hat)
    ]
    cell.train_keys = [(ds.self_id, int(rounds[i]), ds.rows[i].t_s) for i in train_idx]
    return cell


def run_experiment(traces: list[VehicleTrace], config: ExperimentConfig | None = None) -> ExperimentReport:
    """Fit and score one model per (pair, feature set).

    Cells that cannot be built are recorded as failed and the run continues.
    """
    config = config or ExperimentConfig()
    by_id = {t.vehicle_id: t for t in traces}
    resampled: dict[str, VehicleTrace] = {}

    def get(vid):
        if vid not in resampled:
            if vid not in by_id:
                raise DomainError(f"vehicle {vid} not present in traces")
            resampled[vid] = resample(by_id[vid], config.resample_period_s)
        return resampled[vid]

    cells = []
    for self_id, next_id in config.pairs:
        for fs in config.feature_sets:
            kind = FeatureSetKind(fs)
            try:
                cell = _run_cell(get(self_id), get(next_id), kind, config)
            except DomainError as exc:
                cell = CellResult(self_id, next_id, kind.value, status="failed", reason=str(exc))
            if cell.status == "ok":
                log.info("self=%s next=%s %s: MRPE %.2f%%", self_id, next_id, fs, cell.mrpe.mrpe_percent)
            else:
                log.warning("self=%s next=%s %s failed: %s", self_id, next_id, fs, cell.reason)
            cells.append(cell)
    created = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return ExperimentReport(config, cells, created)
