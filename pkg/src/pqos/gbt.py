"""Gradient-boosted regression trees under squared-error loss.

Each round fits one tree to the current residuals using exact greedy splits
over the sorted unique values of every feature.  With ``l2_leaf_reg`` = λ a
split's gain is

    G_L²/(n_L+λ) + G_R²/(n_R+λ) - G²/(n+λ)

(G = residual sum, n = row count) and a leaf stores G/(n+λ).  Predictions are
``base + Σ learning_rate * tree(x)``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, DomainError, SchemaError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class GbtConfig:
    n_rounds: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_samples_leaf: int = 5
    subsample: float = 1.0
    l2_leaf_reg: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ConfigError("n_rounds", "must be >= 1")
        if self.max_depth < 1:
            raise ConfigError("max_depth", "must be >= 1")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigError("learning_rate", "must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf", "must be >= 1")
        if not 0.0 < self.subsample <= 1.0:
            raise ConfigError("subsample", "must lie in (0, 1]")
        if self.l2_leaf_reg < 0:
            raise ConfigError("l2_leaf_reg", "must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> GbtConfig:
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key")
        return cls(**data)


@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf.

    Rows with ``x[feature] < threshold`` go to ``left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return self.value[node]
            idx = rows[inner]
            n = node[inner]
            go_left = X[idx, f[inner]] < self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])

    def depth(self) -> int:
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=float),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=float),
        )


@dataclass(frozen=True)
class GbtModel:
    base_prediction: float
    trees: tuple[Tree, ...]
    config: GbtConfig
    feature_schema: tuple[str, ...]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != len(self.feature_schema):
            raise SchemaError(f"expected {len(self.feature_schema)} features, got {X.shape[1]}")
        out = np.full(len(X), self.base_prediction)
        for tree in self.trees:
            out += self.config.learning_rate * tree.apply(X)
        return out[0] if single else out

    def to_dict(self) -> dict:
        return {
            "format": "pqos-gbt",
            "version": FORMAT_VERSION,
            "feature_schema": list(self.feature_schema),
            "config": asdict(self.config),
            "base_prediction": self.base_prediction,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> GbtModel:
        if d.get("format") != "pqos-gbt" or d.get("version") != FORMAT_VERSION:
            raise SchemaError(f"unsupported model document (format={d.get('format')!r}, version={d.get('version')!r})")
        return cls(
            base_prediction=float(d["base_prediction"]),
            trees=tuple(Tree.from_dict(t) for t in d["trees"]),
            config=GbtConfig.from_dict(d["config"]),
            feature_schema=tuple(d["feature_schema"]),
        )

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> GbtModel:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def predict(model: GbtModel, features) -> float | np.ndarray:
    return model.predict(features)


def _best_split(X, g, orders, n_node, g_node, cfg):
    """Return (gain, feature, threshold, position) or None.

    ``orders[f]`` lists the node's rows sorted by feature f.  Scanning
    features and thresholds in ascending order with a strict ``>`` keeps the
    lowest feature index, then the lowest threshold, on ties.
    """
    lam = cfg.l2_leaf_reg
    m = cfg.min_samples_leaf
    if n_node < 2 * m:
        return None
    parent = g_node * g_node / (n_node + lam)
    best = None
    n_left = np.arange(1, n_node, dtype=float)
    for f, order in enumerate(orders):
        xs = X[order, f]
        gl = np.cumsum(g[order])[:-1]
        gr = g_node - gl
        valid = xs[:-1] < xs[1:]
        valid[: m - 1] = False
        if m > 1:
            valid[n_node - m :] = False
        if not valid.any():
            continue
        n_right = n_node - n_left
        gain = gl * gl / (n_left + lam) + gr * gr / (n_right + lam) - parent
        gain = np.where(valid, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > 0 and (best is None or gain[k] > best[0]):
            lo, hi = xs[k], xs[k + 1]
            thr = 0.5 * (lo + hi)
            if not lo < thr < hi:
                thr = hi
            best = (float(gain[k]), f, float(thr), k)
    return best


def _grow_tree(X, g, rows, cfg) -> Tree:
    feature, threshold, left, right, value = [], [], [], [], []
    n_feat = X.shape[1]
    root_orders = [rows[np.argsort(X[rows, f], kind="stable")] for f in range(n_feat)]

    def new_node():
        for lst, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1), (value, 0.0)):
            lst.append(v)
        return len(feature) - 1

    stack = [(new_node(), root_orders, 0)]
    while stack:
        node, orders, depth = stack.pop()
        node_rows = orders[0]
        n_node = len(node_rows)
        g_node = float(np.sum(g[node_rows]))
        value[node] = g_node / (n_node + cfg.l2_leaf_reg) if n_node + cfg.l2_leaf_reg > 0 else 0.0
        if depth >= cfg.max_depth:
            continue
        split = _best_split(X, g, orders, n_node, g_node, cfg)
        if split is None:
            continue
        _, f, thr, _ = split
        goes_left = np.zeros(len(X), dtype=bool)
        goes_left[node_rows] = X[node_rows, f] < thr
        l_orders = [o[goes_left[o]] for o in orders]
        r_orders = [o[~goes_left[o]] for o in orders]
        feature[node], threshold[node] = f, thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], r_orders, depth + 1))
        stack.append((left[node], l_orders, depth + 1))
    return Tree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=float),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.asarray(value, dtype=float),
    )


def fit_arrays(X, y, config: GbtConfig | None = None, feature_schema=None, *, loss_history: list | None = None) -> GbtModel:
    """Fit on raw arrays.

    :param loss_history: if given, receives the training MSE before the first
        round and after every round.
    """
    config = config or GbtConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2:
        raise SchemaError("X must be two-dimensional")
    if len(X) == 0:
        raise DomainError("cannot fit on an empty dataset")
    if len(y) != len(X):
        raise SchemaError(f"X has {len(X)} rows but y has {len(y)}")
    bad = ~np.isfinite(X).all(axis=1) | ~np.isfinite(y)
    if bad.any():
        raise DataError(int(np.flatnonzero(bad)[0]), "non-finite feature or target value")
    if feature_schema is None:
        feature_schema = [f"x{i}" for i in range(X.shape[1])]
    if len(feature_schema) != X.shape[1]:
        raise SchemaError("feature_schema length does not match X")

    rng = np.random.default_rng(config.seed)
    n = len(X)
    base = float(np.mean(y))
    F = np.full(n, base)
    trees = []
    if loss_history is not None:
        loss_history.append(float(np.mean((y - F) ** 2)))
    all_rows = np.arange(n)
    n_sub = max(1, int(round(config.subsample * n)))
    for _ in range(config.n_rounds):
        g = y - F
        if config.subsample < 1.0:
            rows = np.sort(rng.choice(n, size=n_sub, replace=False))
        else:
            rows = all_rows
        tree = _grow_tree(X, g, rows, config)
        trees.append(tree)
        F = F + config.learning_rate * tree.apply(X)
        if loss_history is not None:
            loss_history.append(float(np.mean((y - F) ** 2)))
    return GbtModel(base, tuple(trees), config, tuple(feature_schema))


def fit(dataset, config: GbtConfig | None = None, **kw) -> GbtModel:
    """Fit on a :class:`~pqos.alignment.SupervisedDataset`."""
    if len(dataset) == 0:
        raise DomainError("cannot fit on an empty dataset")
    return fit_arrays(dataset.X, dataset.y, config, dataset.feature_schema, **kw)
