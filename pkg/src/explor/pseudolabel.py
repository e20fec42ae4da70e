"""Diverse tree ensembles that supply pseudo-labels.

Each labeler sees its own without-replacement row and column subsample and
fits a small CART tree (or a majority-vote forest of them) on it. Split
quality is weighted Gini impurity; candidate thresholds are midpoints
between consecutive distinct sorted values; ties are broken toward the
lowest feature index, then the lowest threshold, so fitting is fully
deterministic. Tree feature indices always refer to the original columns.

Prediction packs every tree of every labeler into rectangular node tables
and walks all of them level-by-level with array ops, which keeps the
per-batch pseudo-labeling cost flat during network training.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, SubsampleSpec, subsample
from .seeding import derive_seed, generator


@dataclass(frozen=True)
class PseudoLabelConfig:
    """Ensemble shape and diversity knobs.

    ``trees_per_labeler`` = 1 gives single-tree labelers; larger values give
    a majority-vote forest per labeler.
    """

    k: int = 64
    max_depth: int = 6
    min_leaf: int = 2
    instance_fraction: float = 0.632
    feature_fraction: float = 0.5
    trees_per_labeler: int = 1
    decision_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.trees_per_labeler < 1:
            raise ValueError(f"trees_per_labeler must be >= 1, got {self.trees_per_labeler}")
        if not (0.0 < self.instance_fraction <= 1.0):
            raise ValueError(f"instance_fraction must be in (0, 1], got {self.instance_fraction}")
        if not (0.0 < self.feature_fraction <= 1.0):
            raise ValueError(f"feature_fraction must be in (0, 1], got {self.feature_fraction}")


class Tree:
    """A CART tree as flat node arrays with explicit child indices.

    ``feature[i] == -1`` marks a leaf; ``value[i]`` is the node's positive
    fraction. Internal nodes route left iff x[feature] <= threshold.
    """

    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict_fraction(self, X) -> np.ndarray:
        """Leaf positive fraction for each row of X (full-width features)."""
        X = np.asarray(X, dtype=np.float64)
        idx = np.zeros(X.shape[0], dtype=np.int32)
        while True:
            feat = self.feature[idx]
            active = feat >= 0
            if not active.any():
                break
            rows = np.flatnonzero(active)
            f = feat[rows]
            go_left = X[rows, f] <= self.threshold[idx[rows]]
            idx[rows] = np.where(go_left, self.left[idx[rows]], self.right[idx[rows]])
        return self.value[idx]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Tree":
        return cls(doc["feature"], doc["threshold"], doc["left"], doc["right"], doc["value"])


def _best_split(X, y, min_leaf):
    """Lowest-weighted-Gini split of (X, y), or None if no candidate exists.

    Scans features in ascending index order and thresholds in ascending
    value order, accepting only strict improvements, which implements the
    tie-break rule.
    """
    n = y.size
    total_pos = int(y.sum())
    best = None
    best_gini = np.inf
    for j in range(X.shape[1]):
        v = X[:, j]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        cum_pos = np.cumsum(y[order])
        cut = np.flatnonzero(sv[1:] > sv[:-1])
        if cut.size == 0:
            continue
        n_left = cut + 1
        n_right = n - n_left
        ok = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        cut = cut[ok]
        n_left = n_left[ok]
        n_right = n_right[ok]
        pos_left = cum_pos[cut]
        pos_right = total_pos - pos_left
        p_l = pos_left / n_left
        p_r = pos_right / n_right
        gini_l = 1.0 - p_l**2 - (1.0 - p_l) ** 2
        gini_r = 1.0 - p_r**2 - (1.0 - p_r) ** 2
        weighted = (n_left * gini_l + n_right * gini_r) / n
        k = int(np.argmin(weighted))  # first minimum: lowest threshold wins
        if weighted[k] < best_gini:
            best_gini = float(weighted[k])
            i = int(cut[k])
            best = (j, (sv[i] + sv[i + 1]) / 2.0)
    return best


def fit_tree(X, y, max_depth: int = 6, min_leaf: int = 2) -> Tree:
    """Grow a CART tree on (X, y) with depth and leaf-size stopping rules."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    feature, threshold, left, right, value = [], [], [], [], []

    def grow(rows, depth):
        node = len(feature)
        ys = y[rows]
        frac = float(ys.mean())
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(frac)
        if depth >= max_depth or rows.size < 2 * min_leaf or frac in (0.0, 1.0):
            return node
        split = _best_split(X[rows], ys, min_leaf)
        if split is None:
            return node
        j, t = split
        go_left = X[rows, j] <= t
        feature[node] = j
        threshold[node] = t
        left[node] = grow(rows[go_left], depth + 1)
        right[node] = grow(rows[~go_left], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return Tree(feature, threshold, left, right, value)


class PseudoLabeler:
    """One ensemble member: its subsample bookkeeping plus its tree(s)."""

    def __init__(self, trees, instance_indices, feature_indices, decision_threshold=0.5):
        self.trees = list(trees)
        self.instance_indices = np.asarray(instance_indices, dtype=np.int64)
        self.feature_indices = np.asarray(feature_indices, dtype=np.int64)
        self.decision_threshold = float(decision_threshold)

    def predict(self, X) -> np.ndarray:
        """Hard 0/1 labels: each tree votes on its leaf fraction, labeler takes the majority."""
        votes = np.stack([t.predict_fraction(X) >= self.decision_threshold for t in self.trees])
        return (votes.mean(axis=0) >= 0.5).astype(np.int64)

    def predict_one(self, x) -> int:
        return int(self.predict(np.asarray(x, dtype=np.float64)[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "trees": [t.to_dict() for t in self.trees],
            "instance_indices": self.instance_indices.tolist(),
            "feature_indices": self.feature_indices.tolist(),
            "decision_threshold": self.decision_threshold,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PseudoLabeler":
        return cls(
            [Tree.from_dict(t) for t in doc["trees"]],
            doc["instance_indices"],
            doc["feature_indices"],
            doc["decision_threshold"],
        )


class PseudoLabelEnsemble:
    """K diverse labelers plus packed node tables for batched prediction."""

    def __init__(self, labelers, config: PseudoLabelConfig):
        if not labelers:
            raise ValueError("ensemble needs at least one labeler")
        t = len(labelers[0].trees)
        if any(len(lab.trees) != t for lab in labelers):
            raise ValueError("all labelers must hold the same number of trees")
        self.labelers = list(labelers)
        self.config = config
        self._pack()

    def _pack(self):
        trees = [t for lab in self.labelers for t in lab.trees]
        m = max(t.n_nodes for t in trees)
        nt = len(trees)
        self._feat = np.full((nt, m), -1, dtype=np.int32)
        self._thr = np.zeros((nt, m), dtype=np.float64)
        self._left = np.zeros((nt, m), dtype=np.int32)
        self._right = np.zeros((nt, m), dtype=np.int32)
        self._value = np.zeros((nt, m), dtype=np.float64)
        for i, t in enumerate(trees):
            k = t.n_nodes
            self._feat[i, :k] = t.feature
            self._thr[i, :k] = t.threshold
            self._left[i, :k] = t.left
            self._right[i, :k] = t.right
            self._value[i, :k] = t.value
        self._thresholds = np.array([lab.decision_threshold for lab in self.labelers])

    @property
    def k(self) -> int:
        return len(self.labelers)

    def predict_matrix(self, X) -> np.ndarray:
        """(N, K) hard pseudo-labels for every labeler at once."""
        X = np.asarray(X, dtype=np.float64)
        n = X.shape[0]
        nt = self._feat.shape[0]
        tid = np.arange(nt)[:, None]
        idx = np.zeros((nt, n), dtype=np.int32)
        while True:
            feat = self._feat[tid, idx]
            active = feat >= 0
            if not active.any():
                break
            # Padded slots read column 0; the active mask discards them.
            xv = X[np.arange(n)[None, :], np.where(active, feat, 0)]
            go_left = xv <= self._thr[tid, idx]
            nxt = np.where(go_left, self._left[tid, idx], self._right[tid, idx])
            idx = np.where(active, nxt, idx)
        frac = self._value[tid, idx]
        t_per = len(self.labelers[0].trees)
        votes = frac.reshape(self.k, t_per, n) >= self._thresholds[:, None, None]
        return (votes.mean(axis=1) >= 0.5).T.astype(np.int64)

    def ensemble_mean(self, X) -> np.ndarray:
        """Mean of the K hard labels per row; values are multiples of 1/K."""
        return self.predict_matrix(X).mean(axis=1)

    def to_dict(self) -> dict:
        return {
            "labelers": [lab.to_dict() for lab in self.labelers],
            "config": {
                "k": self.config.k,
                "max_depth": self.config.max_depth,
                "min_leaf": self.config.min_leaf,
                "instance_fraction": self.config.instance_fraction,
                "feature_fraction": self.config.feature_fraction,
                "trees_per_labeler": self.config.trees_per_labeler,
                "decision_threshold": self.config.decision_threshold,
                "seed": self.config.seed,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PseudoLabelEnsemble":
        return cls(
            [PseudoLabeler.from_dict(d) for d in doc["labelers"]],
            PseudoLabelConfig(**doc["config"]),
        )


def fit_ensemble(ds: Dataset, cfg: PseudoLabelConfig) -> PseudoLabelEnsemble:
    """Fit K labelers, each on its own seeded row/column subsample.

    Per-labeler streams are derived from (cfg.seed, labeler index), so the
    result is identical no matter in what order labelers are fit.
    """
    y = ds.labels
    if np.unique(y).size < 2:
        raise ValueError("fit_ensemble needs both classes in the training set")
    labelers = []
    for k in range(cfg.k):
        seed_k = derive_seed(cfg.seed, "labeler", k)
        sub, rows, cols = subsample(
            ds, SubsampleSpec(cfg.instance_fraction, cfg.feature_fraction, seed_k)
        )
        trees = []
        for t in range(cfg.trees_per_labeler):
            if cfg.trees_per_labeler == 1:
                tx, ty = sub.features, sub.labels
            else:
                # Forest diversity: re-subsample the labeler's rows per tree.
                rng = generator(derive_seed(seed_k, "tree", t))
                m = math.ceil(cfg.instance_fraction * sub.n)
                pick = np.sort(rng.choice(sub.n, size=m, replace=False))
                tx, ty = sub.features[pick], sub.labels[pick]
            tree = fit_tree(tx, ty, cfg.max_depth, cfg.min_leaf)
            # Remap split features from subsample-local ids to original columns.
            internal = tree.feature >= 0
            tree.feature[internal] = cols[tree.feature[internal]]
            trees.append(tree)
        labelers.append(PseudoLabeler(trees, rows, cols, cfg.decision_threshold))
    return PseudoLabelEnsemble(labelers, cfg)
