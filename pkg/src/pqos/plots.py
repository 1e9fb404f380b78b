"""CSV tables and SVG figures for correlation curves and experiment reports.

SVGs are written with a fixed hash salt and no date so reruns are
byte-identical.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .alignment import FeatureSetKind  # noqa: E402

_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": "pqos", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def correlation_svg(curve, path, label: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(np.asarray(curve.lags_s) / 60.0, curve.r, lw=1.2, label=label or None)
    ax.set_xlabel("lag [min]")
    ax.set_ylabel("Pearson r")
    ax.axvline(0, color="0.7", lw=0.8)
    ax.grid(alpha=0.3)
    if label:
        ax.legend()
    fig.tight_layout()
    _save(fig, path)


def _ok_cells(doc):
    return [c for c in doc["cells"] if c["status"] == "ok"]


def _pairs(doc):
    seen = []
    for c in doc["cells"]:
        p = (c["self_id"], c["next_id"])
        if p not in seen:
            seen.append(p)
    return seen


def write_report_artifacts(doc: dict, out_dir) -> list[Path]:
    """Emit MRPE bars, prediction scatter and importance tables (CSV + SVG)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    pairs = _pairs(doc)
    fsets = doc["config"]["feature_sets"]

    p = out / "mrpe_bars.csv"
    with open(p, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["self_id", "next_id", "feature_set", "status", "mrpe_percent", "n_test", "mean_tau_s"])
        for c in doc["cells"]:
            m = c["mrpe"]["mrpe_percent"] if c["mrpe"] else ""
            tau = c["mean_tau_s"] if c["mean_tau_s"] is not None else ""
            w.writerow([c["self_id"], c["next_id"], c["feature_set"], c["status"], m, c["n_test"], tau])
    written.append(p)

    fig, ax = plt.subplots(figsize=(7, 3.8))
    width = 0.8 / max(len(fsets), 1)
    for j, fs in enumerate(fsets):
        vals = []
        for s, n in pairs:
            cell = next((c for c in doc["cells"] if (c["self_id"], c["next_id"], c["feature_set"]) == (s, n, fs)), None)
            vals.append(cell["mrpe"]["mrpe_percent"] if cell and cell["mrpe"] else math.nan)
        ax.bar(np.arange(len(pairs)) + (j - (len(fsets) - 1) / 2) * width, vals, width, label=FeatureSetKind(fs).label)
    ax.set_xticks(np.arange(len(pairs)))
    ax.set_xticklabels([f"self {s} / next {n}" for s, n in pairs])
    ax.set_ylabel("MRPE [%]")
    ax.legend(fontsize=8)
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    p = out / "mrpe_bars.svg"
    _save(fig, p)
    written.append(p)

    p = out / "scatter.csv"
    with open(p, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["self_id", "next_id", "feature_set", "t_s", "tau_s", "y_mbps", "y_hat_mbps"])
        for c in _ok_cells(doc):
            for t, _tt, tau, _r, y, yh in c["predictions"]:
                w.writerow([c["self_id"], c["next_id"], c["feature_set"], t, tau, y, yh])
    written.append(p)

    fig, axes = plt.subplots(1, len(pairs), figsize=(4.2 * len(pairs), 4), squeeze=False)
    for ax, (s, n) in zip(axes[0], pairs):
        hi = 0.0
        for c in _ok_cells(doc):
            if (c["self_id"], c["next_id"]) != (s, n):
                continue
            pr = np.asarray(c["predictions"], dtype=float).reshape(-1, 6)
            if len(pr):
                ax.scatter(pr[:, 4], pr[:, 5], s=4, alpha=0.5, label=FeatureSetKind(c["feature_set"]).label)
                hi = max(hi, float(pr[:, 4:].max()))
        ax.plot([0, hi], [0, hi], color="0.6", lw=1)
        ax.set_title(f"self {s} / next {n}")
        ax.set_xlabel("real y [Mbps]")
        ax.set_ylabel("predicted ŷ [Mbps]")
        ax.legend(fontsize=7, markerscale=3)
    fig.tight_layout()
    p = out / "scatter.svg"
    _save(fig, p)
    written.append(p)

    p = out / "importance.csv"
    with open(p, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["self_id", "next_id", "feature_set", "rank", "feature", "importance_pp"])
        for c in _ok_cells(doc):
            for rank, (name, score) in enumerate(c["importance"], start=1):
                w.writerow([c["self_id"], c["next_id"], c["feature_set"], rank, name, score])
    written.append(p)

    cells = _ok_cells(doc)
    if cells:
        fig, axes = plt.subplots(len(pairs), len(fsets), figsize=(2.6 * len(fsets), 2.2 * len(pairs)), squeeze=False)
        for i, (s, n) in enumerate(pairs):
            for j, fs in enumerate(fsets):
                ax = axes[i][j]
                cell = next((c for c in cells if (c["self_id"], c["next_id"], c["feature_set"]) == (s, n, fs)), None)
                if cell is None:
                    ax.set_axis_off()
                    continue
                names = [k for k, _ in cell["importance"]][::-1]
                vals = [v for _, v in cell["importance"]][::-1]
                ax.barh(names, vals)
                ax.set_title(f"{FeatureSetKind(fs).label} ({s}/{n})", fontsize=8)
                ax.tick_params(labelsize=7)
        fig.tight_layout()
        p = out / "importance.svg"
        _save(fig, p)
        written.append(p)
    return written
