"""Lagged Pearson cross-correlation of two KPI series and peak-lag search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .records import VehicleTrace

MIN_OVERLAP = 30


@dataclass(frozen=True)
class CorrelationCurve:
    lags_s: np.ndarray
    r: np.ndarray  # NaN where undefined
    n_per_lag: np.ndarray

    def defined(self) -> np.ndarray:
        return ~np.isnan(self.r)

    def to_rows(self) -> list[tuple[float, float, int]]:
        return [(float(l), float(r), int(n)) for l, r, n in zip(self.lags_s, self.r, self.n_per_lag)]


def kpi_series(trace: VehicleTrace, kpi: str = "rsrp_dbm") -> tuple[np.ndarray, np.ndarray]:
    return trace.t, trace.column(kpi)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx <= 0.0 or syy <= 0.0:
        return math.nan
    # sqrt(sxx*syy) rather than sqrt(sxx)*sqrt(syy): gives exactly 1 for x == y
    r = float(np.dot(xc, yc)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def cross_correlation(a, b, max_lag_s: float, step_s: float = 1.0, min_overlap: int = MIN_OVERLAP) -> CorrelationCurve:
    """Pearson r between ``a(t)`` and ``b(t + lag)`` for lags in ``[-max_lag_s, max_lag_s]``.

    ``a`` and ``b`` are ``(timestamps, values)`` pairs on a common grid of
    spacing ``step_s``.  A lag with fewer than ``min_overlap`` joint samples,
    or a constant series on the overlap, yields NaN.

    With ``a`` a leading vehicle and ``b`` a follower, the peak sits at a
    positive lag equal to the time gap between them.
    """
    if not max_lag_s > 0:
        raise DomainError("max_lag_s must be > 0")
    if not step_s > 0:
        raise DomainError("step_s must be > 0")
    ta, va = (np.asarray(x, dtype=float) for x in a)
    tb, vb = (np.asarray(x, dtype=float) for x in b)
    ia = np.rint(ta / step_s).astype(np.int64)
    ib = np.rint(tb / step_s).astype(np.int64)
    lo = min(ia.min(), ib.min())
    hi = max(ia.max(), ib.max())
    # Dense grids, NaN where a series has no sample
    ga = np.full(hi - lo + 1, np.nan)
    gb = np.full(hi - lo + 1, np.nan)
    ga[ia - lo] = va
    gb[ib - lo] = vb

    k_max = int(math.floor(max_lag_s / step_s + 1e-9))
    ks = np.arange(-k_max, k_max + 1)
    r = np.full(len(ks), np.nan)
    n = np.zeros(len(ks), dtype=np.int64)
    size = len(ga)
    for j, k in enumerate(ks):
        # pairs (a[i], b[i + k])
        if k >= 0:
            xa, xb = ga[: size - k], gb[k:]
        else:
            xa, xb = ga[-k:], gb[: size + k]
        ok = ~(np.isnan(xa) | np.isnan(xb))
        n[j] = int(ok.sum())
        if n[j] >= min_overlap:
            r[j] = _pearson(xa[ok], xb[ok])
    return CorrelationCurve(lags_s=ks * step_s, r=r, n_per_lag=n)


def peak_lag(curve: CorrelationCurve) -> float:
    """Lag of maximum r; ties go to the smallest ``|lag|``, then the negative one."""
    ok = curve.defined()
    if not ok.any():
        raise DomainError("correlation curve has no defined lag")
    r = curve.r[ok]
    lags = curve.lags_s[ok]
    cand = lags[r == r.max()]
    order = np.lexsort((cand, np.abs(cand)))
    return float(cand[order[0]])


def write_curve_csv(curve: CorrelationCurve, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("lag_s,r,n\n")
        for lag, r, n in curve.to_rows():
            rs = "" if math.isnan(r) else f"{r:.6f}"
            fh.write(f"{lag:g},{rs},{n}\n")
