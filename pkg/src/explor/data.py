"""Datasets: construction, CSV i/o, subsampling, and a synthetic benchmark.

A :class:`Dataset` is a frozen bundle of a float64 feature matrix, binary
labels, and optional integer group ids. All randomized operations take
explicit seeds; calling twice with the same seed yields identical results.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .seeding import derive_seed, generator


class DatasetError(ValueError):
    """Malformed dataset input (parse failures, bad labels, empty files)."""


def _format_float(x: float) -> str:
    # repr() is the shortest string that round-trips the exact double.
    return repr(float(x))


class Dataset:
    """Feature matrix with binary labels and optional group ids.

    Arrays are copied and marked read-only, so a Dataset never changes after
    construction.

    Parameters
    ----------
    features : (N, d) array_like of finite floats
    labels : (N,) array_like with values in {0, 1}
    group : optional (N,) array_like of integer group ids
    feature_names : optional list of d column names
    """

    def __init__(self, features, labels, group=None, feature_names=None):
        X = np.asarray(features, dtype=np.float64)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-d, got shape {X.shape}")
        n, d = X.shape
        if n < 1 or d < 1:
            raise DatasetError(f"need at least one row and one column, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            bad = np.argwhere(~np.isfinite(X))[0]
            raise DatasetError(f"non-finite feature at row {bad[0]}, column {bad[1]}")
        y = np.asarray(labels)
        if y.shape != (n,):
            raise DatasetError(f"labels must have shape ({n},), got {y.shape}")
        y = y.astype(np.int64)
        if not np.all((y == 0) | (y == 1)):
            bad = int(np.flatnonzero((y != 0) & (y != 1))[0])
            raise DatasetError(f"label outside {{0, 1}} at row {bad}")
        if group is not None:
            g = np.asarray(group).astype(np.int64)
            if g.shape != (n,):
                raise DatasetError(f"group must have shape ({n},), got {g.shape}")
        else:
            g = None
        if feature_names is not None:
            feature_names = [str(c) for c in feature_names]
            if len(feature_names) != d:
                raise DatasetError(f"expected {d} feature names, got {len(feature_names)}")
        self.features = X.copy()
        self.labels = y.copy()
        self.group = None if g is None else g.copy()
        self.feature_names = None if feature_names is None else list(feature_names)
        self.features.setflags(write=False)
        self.labels.setflags(write=False)
        if self.group is not None:
            self.group.setflags(write=False)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def take(self, rows=None, cols=None) -> "Dataset":
        """New Dataset restricted to the given row/column index arrays."""
        rows = np.arange(self.n) if rows is None else np.asarray(rows, dtype=np.int64)
        cols = np.arange(self.d) if cols is None else np.asarray(cols, dtype=np.int64)
        names = None
        if self.feature_names is not None:
            names = [self.feature_names[int(c)] for c in cols]
        return Dataset(
            self.features[np.ix_(rows, cols)],
            self.labels[rows],
            group=None if self.group is None else self.group[rows],
            feature_names=names,
        )

    def __repr__(self) -> str:
        g = "" if self.group is None else ", grouped"
        return f"Dataset(n={self.n}, d={self.d}{g})"


@dataclass(frozen=True)
class SubsampleSpec:
    """Without-replacement subsampling fractions and the seed that drives them.

    Fractions are in (0, 1]; counts are rounded up so at least one row and
    one column always survive.
    """

    instance_fraction: float = 0.632
    feature_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.instance_fraction <= 1.0):
            raise ValueError(f"instance_fraction must be in (0, 1], got {self.instance_fraction}")
        if not (0.0 < self.feature_fraction <= 1.0):
            raise ValueError(f"feature_fraction must be in (0, 1], got {self.feature_fraction}")


def subsample(ds: Dataset, spec: SubsampleSpec):
    """Draw a row/column subsample of ``ds`` without replacement.

    Rows are drawn first, then columns, from a single generator seeded with
    ``spec.seed``. Both index arrays are returned sorted ascending.

    Returns
    -------
    (Dataset, row_indices, col_indices)
    """
    rng = generator(spec.seed)
    n_rows = math.ceil(spec.instance_fraction * ds.n)
    n_cols = math.ceil(spec.feature_fraction * ds.d)
    rows = np.sort(rng.choice(ds.n, size=n_rows, replace=False))
    cols = np.sort(rng.choice(ds.d, size=n_cols, replace=False))
    return ds.take(rows, cols), rows, cols


def load_csv(path, label_column: str = "label", group_column: str | None = None) -> Dataset:
    """Read a Dataset from a headed CSV file.

    Every column other than ``label_column`` and ``group_column`` is parsed
    as a float feature, in header order. Labels must be 0/1 or true/false.
    Parse failures are reported with their row and column.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header {header}")
        label_idx = header.index(label_column)
        group_idx = None
        if group_column is not None:
            if group_column not in header:
                raise DatasetError(f"{path}: group column {group_column!r} not in header {header}")
            group_idx = header.index(group_column)
        feat_idx = [i for i in range(len(header)) if i != label_idx and i != group_idx]
        if not feat_idx:
            raise DatasetError(f"{path}: no feature columns")
        rows, labels, groups = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or (len(rec) == 1 and rec[0].strip() == ""):
                continue
            if len(rec) != len(header):
                raise DatasetError(f"{path}: line {lineno} has {len(rec)} fields, expected {len(header)}")
            raw = rec[label_idx].strip().lower()
            if raw in ("0", "1"):
                labels.append(int(raw))
            elif raw in ("true", "false"):
                labels.append(1 if raw == "true" else 0)
            else:
                raise DatasetError(
                    f"{path}: line {lineno}, column {label_column!r}: label {rec[label_idx]!r} not in 0/1/true/false"
                )
            if group_idx is not None:
                try:
                    groups.append(int(rec[group_idx]))
                except ValueError:
                    raise DatasetError(
                        f"{path}: line {lineno}, column {group_column!r}: bad group id {rec[group_idx]!r}"
                    ) from None
            vals = []
            for i in feat_idx:
                try:
                    vals.append(float(rec[i]))
                except ValueError:
                    raise DatasetError(
                        f"{path}: line {lineno}, column {header[i]!r}: not a number: {rec[i]!r}"
                    ) from None
            rows.append(vals)
        if not rows:
            raise DatasetError(f"{path}: no data rows")
    return Dataset(
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        group=np.array(groups, dtype=np.int64) if group_idx is not None else None,
        feature_names=[header[i] for i in feat_idx],
    )


def save_csv(ds: Dataset, path, label_column: str = "label", group_column: str = "group") -> None:
    """Write a Dataset as CSV. Floats use repr, so load/save round-trips bit-exactly."""
    names = ds.feature_names or [f"x{j}" for j in range(ds.d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = list(names) + [label_column]
        if ds.group is not None:
            header.append(group_column)
        writer.writerow(header)
        for i in range(ds.n):
            row = [_format_float(v) for v in ds.features[i]]
            row.append(str(int(ds.labels[i])))
            if ds.group is not None:
                row.append(str(int(ds.group[i])))
            writer.writerow(row)


def make_synthetic_radial(n_id: int, n_ood: int, d: int, seed: int):
    """Synthetic benchmark with a radial distribution shift.

    Points are standard normal in d dimensions and labeled by a fixed
    nonlinear rule, 1 iff sin(3 x0) + 0.5 x1 > 0. The pooled median norm r0
    splits the draw: points with norm < r0 form the in-distribution train
    set, points with norm >= r0 the OOD test set, so every test point lies
    farther from the origin than every train point.

    If a draw leaves the train set single-class or the test set without a
    positive, the draw is retried with an incremented seed a bounded number
    of times.
    """
    if n_id < 10 or n_ood < 10:
        raise ValueError(f"need at least 10 points per split, got n_id={n_id}, n_ood={n_ood}")
    if d < 2:
        raise ValueError(f"labeling rule reads two coordinates, need d >= 2, got d={d}")
    names = [f"x{j}" for j in range(d)]
    for attempt in range(16):
        rng = generator(derive_seed(seed + attempt, "synthetic_radial"))
        total = 2 * (n_id + n_ood)
        X = rng.standard_normal((total, d))
        norms = np.linalg.norm(X, axis=1)
        r0 = float(np.median(norms))
        below = np.flatnonzero(norms < r0)
        above = np.flatnonzero(norms >= r0)
        if len(below) < n_id or len(above) < n_ood:
            continue
        tr, te = below[:n_id], above[:n_ood]
        y = (np.sin(3.0 * X[:, 0]) + 0.5 * X[:, 1] > 0).astype(np.int64)
        # Train needs both classes for tree fitting; test needs a positive
        # for precision-recall metrics.
        if len(np.unique(y[tr])) < 2 or not np.any(y[te] == 1):
            continue
        train = Dataset(X[tr], y[tr], feature_names=names)
        ood = Dataset(X[te], y[te], feature_names=names)
        return train, ood
    raise RuntimeError(
        f"could not build both classes after bounded retries (n_id={n_id}, n_ood={n_ood}, d={d}, seed={seed})"
    )
