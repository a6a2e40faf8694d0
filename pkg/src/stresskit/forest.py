"""Random Forest baseline built from scratch: greedy CART trees on
bootstrap samples, weighted Gini splits over random feature subsets,
balanced class weights, and out-of-bag scoring.

Trees are stored as flat arrays (feature, threshold, left, right, probs)
so prediction is a vectorized descent rather than per-row recursion.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .errors import CheckpointVersionMismatch, ShapeMismatch, SingleClassData

FOREST_VERSION = 1
_LEAF = -1


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 250
    max_depth: int = 8
    min_samples_split: int = 2
    min_samples_leaf: int = 4
    bootstrap: bool = True
    oob: bool = True
    max_features: int | str = "sqrt"  # "sqrt" | "all" | explicit count
    class_weight: str | None = "balanced"  # "balanced" | None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1:
            raise ValueError("n_trees and max_depth must be >= 1")
        if self.min_samples_leaf < 1 or self.min_samples_split < 2:
            raise ValueError("invalid minimum sample constraints")
        if isinstance(self.max_features, str) and self.max_features not in ("sqrt", "all"):
            raise ValueError(f"unknown max_features mode {self.max_features!r}")
        if self.class_weight not in ("balanced", None):
            raise ValueError(f"unknown class_weight mode {self.class_weight!r}")

    def resolve_max_features(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        if self.max_features == "all":
            return n_features
        m = int(self.max_features)
        if not 1 <= m <= n_features:
            raise ValueError(f"max_features {m} out of range for {n_features} features")
        return m


@dataclass
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray  # (nodes,) int
    threshold: np.ndarray  # (nodes,) float
    left: np.ndarray  # (nodes,) int
    right: np.ndarray  # (nodes,) int
    probs: np.ndarray  # (nodes, 2) leaf class probabilities

    def predict_proba(self, X) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[node]
            internal = feat != _LEAF
            if not internal.any():
                break
            r = rows[internal]
            nd = node[internal]
            go_left = X[r, feat[internal]] <= self.threshold[nd]
            node[r] = np.where(go_left, self.left[nd], self.right[nd])
        return self.probs[node]


@dataclass
class Forest:
    trees: list[Tree]
    config: ForestConfig
    n_features: int
    oob_accuracy: float | None = None
    class_weights: tuple[float, float] = (1.0, 1.0)


class _TreeBuilder:
    def __init__(self, X, y, w, max_features: int, cfg: ForestConfig, rng):
        self.X, self.y, self.w = X, y, w
        self.max_features = max_features
        self.cfg = cfg
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.probs: list[np.ndarray] = []

    def _new_node(self) -> int:
        self.feature.append(_LEAF)
        self.threshold.append(0.0)
        self.left.append(_LEAF)
        self.right.append(_LEAF)
        self.probs.append(np.zeros(2))
        return len(self.feature) - 1

    def _leaf_probs(self, idx) -> np.ndarray:
        w1 = float(self.w[idx][self.y[idx] == 1].sum())
        w0 = float(self.w[idx].sum()) - w1
        total = w0 + w1
        return np.array([w0 / total, w1 / total])

    def _best_split(self, idx):
        """(feature, threshold, score) of the lowest weighted-Gini split, or
        None when no candidate satisfies the leaf-size constraint."""
        cfg = self.cfg
        n = len(idx)
        candidates = self.rng.choice(self.X.shape[1], size=self.max_features, replace=False)
        best = None
        for f in candidates:
            order = np.argsort(self.X[idx, f], kind="stable")
            xs = self.X[idx[order], f]
            ys = self.y[idx[order]]
            ws = self.w[idx[order]]
            distinct = xs[1:] > xs[:-1]
            if not distinct.any():
                continue
            cw1 = np.cumsum(ws * (ys == 1))[:-1]
            cw = np.cumsum(ws)[:-1]
            total_w = cw[-1] + ws[-1]
            total_w1 = cw1[-1] + ws[-1] * (ys[-1] == 1)
            k = np.arange(1, n)
            valid = distinct & (k >= cfg.min_samples_leaf) & (n - k >= cfg.min_samples_leaf)
            if not valid.any():
                continue
            wl, wl1 = cw[valid], cw1[valid]
            wr, wr1 = total_w - wl, total_w1 - wl1
            gini_l = 1.0 - (wl1 / wl) ** 2 - ((wl - wl1) / wl) ** 2
            gini_r = 1.0 - (wr1 / wr) ** 2 - ((wr - wr1) / wr) ** 2
            score = (wl * gini_l + wr * gini_r) / total_w
            j = int(np.argmin(score))
            if best is None or score[j] < best[2]:
                pos = k[valid][j]
                thr = 0.5 * (xs[pos - 1] + xs[pos])
                best = (int(f), float(thr), float(score[j]))
        return best

    def build(self, idx, depth: int) -> int:
        node = self._new_node()
        y_node = self.y[idx]
        pure = (y_node == y_node[0]).all()
        if (
            depth >= self.cfg.max_depth
            or len(idx) < self.cfg.min_samples_split
            or len(idx) < 2 * self.cfg.min_samples_leaf
            or pure
        ):
            self.probs[node] = self._leaf_probs(idx)
            return node
        split = self._best_split(idx)
        if split is None:
            self.probs[node] = self._leaf_probs(idx)
            return node
        f, thr, _ = split
        go_left = self.X[idx, f] <= thr
        self.feature[node] = f
        self.threshold[node] = thr
        self.left[node] = self.build(idx[go_left], depth + 1)
        self.right[node] = self.build(idx[~go_left], depth + 1)
        return node

    def to_tree(self) -> Tree:
        return Tree(
            feature=np.array(self.feature, dtype=int),
            threshold=np.array(self.threshold),
            left=np.array(self.left, dtype=int),
            right=np.array(self.right, dtype=int),
            probs=np.stack(self.probs),
        )


def _fit_one_tree(X, y, w, cfg: ForestConfig, max_features: int, seed_seq, n: int):
    rng = np.random.default_rng(seed_seq)
    if cfg.bootstrap:
        idx = rng.integers(0, n, size=n)
    else:
        idx = np.arange(n)
    builder = _TreeBuilder(X, y, w, max_features, cfg, rng)
    builder.build(idx, depth=0)
    in_bag = np.zeros(n, dtype=bool)
    in_bag[idx] = True
    return builder.to_tree(), in_bag


def fit_forest(X, y, cfg: ForestConfig = ForestConfig(), n_jobs: int = 1) -> Forest:
    """Fit the forest; deterministic given ``cfg.seed`` regardless of
    ``n_jobs`` (per-tree seeds are spawned from the master seed upfront)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeMismatch(f"X {X.shape} does not align with y {y.shape}")
    counts = np.bincount(y, minlength=2)
    if (counts > 0).sum() < 2:
        raise SingleClassData("forest training needs both classes")
    n, d = X.shape
    if cfg.class_weight == "balanced":
        cw = (n / (2.0 * counts[0]), n / (2.0 * counts[1]))
    else:
        cw = (1.0, 1.0)
    w = np.where(y == 1, cw[1], cw[0]).astype(float)
    max_features = cfg.resolve_max_features(d)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_trees)

    if n_jobs == 1:
        fitted = [_fit_one_tree(X, y, w, cfg, max_features, s, n) for s in seeds]
    else:
        fitted = Parallel(n_jobs=n_jobs)(
            delayed(_fit_one_tree)(X, y, w, cfg, max_features, s, n) for s in seeds
        )
    trees = [t for t, _ in fitted]
    forest = Forest(trees=trees, config=cfg, n_features=d, class_weights=cw)

    if cfg.oob and cfg.bootstrap:
        prob_sum = np.zeros((n, 2))
        votes = np.zeros(n, dtype=int)
        for tree, in_bag in fitted:
            out = ~in_bag
            if out.any():
                prob_sum[out] += tree.predict_proba(X[out])
                votes[out] += 1
        covered = votes > 0
        if covered.any():
            mean_probs = prob_sum[covered] / votes[covered, None]
            oob_labels = (mean_probs[:, 1] > 0.5).astype(int)
            forest.oob_accuracy = float(np.mean(oob_labels == y[covered]))
    return forest


def predict_forest(forest: Forest, X):
    """(labels, stress-vote fractions); ties break to non-stress."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise ShapeMismatch(f"expected (n, {forest.n_features}) input, got {X.shape}")
    probs = np.zeros((len(X), 2))
    for tree in forest.trees:
        probs += tree.predict_proba(X)
    probs /= len(forest.trees)
    labels = (probs[:, 1] > 0.5).astype(int)
    return labels, probs[:, 1]


# ---------------------------------------------------------------------------
# Checkpoints


def save_forest(path, forest: Forest) -> None:
    cfg = forest.config
    meta = {
        "version": FOREST_VERSION,
        "n_features": forest.n_features,
        "oob_accuracy": forest.oob_accuracy,
        "class_weights": list(forest.class_weights),
        "config": {
            "n_trees": cfg.n_trees, "max_depth": cfg.max_depth,
            "min_samples_split": cfg.min_samples_split,
            "min_samples_leaf": cfg.min_samples_leaf,
            "bootstrap": cfg.bootstrap, "oob": cfg.oob,
            "max_features": cfg.max_features, "class_weight": cfg.class_weight,
            "seed": cfg.seed,
        },
    }
    arrays = {"__meta__": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)}
    for i, t in enumerate(forest.trees):
        arrays[f"t{i}.feature"] = t.feature
        arrays[f"t{i}.threshold"] = t.threshold
        arrays[f"t{i}.left"] = t.left
        arrays[f"t{i}.right"] = t.right
        arrays[f"t{i}.probs"] = t.probs
    np.savez_compressed(path, **arrays)


def load_forest(path) -> Forest:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("version") != FOREST_VERSION:
            raise CheckpointVersionMismatch(
                f"forest checkpoint version {meta.get('version')} != {FOREST_VERSION}"
            )
        cfg = ForestConfig(**meta["config"])
        trees = [
            Tree(
                feature=data[f"t{i}.feature"].copy(),
                threshold=data[f"t{i}.threshold"].copy(),
                left=data[f"t{i}.left"].copy(),
                right=data[f"t{i}.right"].copy(),
                probs=data[f"t{i}.probs"].copy(),
            )
            for i in range(cfg.n_trees)
        ]
    return Forest(
        trees=trees, config=cfg, n_features=meta["n_features"],
        oob_accuracy=meta["oob_accuracy"],
        class_weights=tuple(meta["class_weights"]),
    )
