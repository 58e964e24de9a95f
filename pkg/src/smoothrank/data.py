"""Datasets: loading, stratified splitting, dissimilarity features and generators."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from smoothrank import kernels


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labeled feature matrix with labels in {+1, -1}.

    ``pos_idx`` and ``neg_idx`` are derived from ``labels`` and kept in
    ascending order.  Arrays are read-only, so instances can be shared.
    """

    features: np.ndarray
    labels: np.ndarray
    name: str = "dataset"
    pos_idx: np.ndarray = field(init=False)
    neg_idx: np.ndarray = field(init=False)

    def __post_init__(self):
        X = _frozen(self.features, np.float64)
        if X.ndim != 2:
            raise DataError("features must be a 2-d matrix")
        y = _frozen(self.labels, np.int64)
        if y.shape != (X.shape[0],):
            raise DataError("labels length does not match the number of rows")
        if not np.all((y == 1) | (y == -1)):
            raise DataError("labels must be +1 or -1")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "pos_idx", _frozen(np.flatnonzero(y == 1), np.int64))
        object.__setattr__(self, "neg_idx", _frozen(np.flatnonzero(y == -1), np.int64))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def X_pos(self) -> np.ndarray:
        return self.features[self.pos_idx]

    @property
    def X_neg(self) -> np.ndarray:
        return self.features[self.neg_idx]

    def subset(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], name or self.name)

    def require_both_classes(self):
        if len(self.pos_idx) == 0 or len(self.neg_idx) == 0:
            raise DataError(f"{self.name}: both classes must be present for training")

    def to_csv(self, path, positive_label="positive", negative_label="negative"):
        """Write the dataset with a header row; labels go in a trailing ``class`` column."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{j}" for j in range(self.d)] + ["class"])
            for row, lab in zip(self.features, self.labels):
                w.writerow([repr(float(v)) for v in row]
                           + [positive_label if lab == 1 else negative_label])


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.25
    k_folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")
        if self.k_folds < 1:
            raise ValueError("k_folds must be positive")


def _parse_float(cell: str, lineno: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise DataError(f"line {lineno}: non-numeric feature {cell!r}") from None
    if not math.isfinite(v):
        raise DataError(f"line {lineno}: non-numeric feature {cell!r}")
    return v


def _labels_from_values(values, positive_label, name):
    distinct = sorted(set(values))
    if len(distinct) < 2:
        raise DataError(f"{name}: fewer than two classes")
    if len(distinct) > 2:
        raise DataError(f"{name}: more than two classes {distinct}")
    if positive_label not in distinct:
        raise DataError(f"{name}: unknown class value, positive label {positive_label!r} "
                        f"not among {distinct}")
    return np.array([1 if v == positive_label else -1 for v in values], dtype=np.int64)


def load_csv(path, label_column=-1, positive_label="positive") -> Dataset:
    """Load a comma-separated file with one header row.

    ``label_column`` is a header name or an integer index (negative indices
    count from the end).  All other columns must be numeric.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    if not body:
        raise DataError(f"{path}: empty file (header only)")
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        li = header.index(label_column)
    else:
        li = int(label_column)
        if not -len(header) <= li < len(header):
            raise DataError(f"{path}: label column index {li} out of range")
        li %= len(header)
    feats, labs = [], []
    for lineno, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(r)}")
        labs.append(r[li].strip())
        feats.append([_parse_float(c.strip(), lineno) for j, c in enumerate(r) if j != li])
    y = _labels_from_values(labs, str(positive_label), path.name)
    return Dataset(np.array(feats, dtype=np.float64), y, path.stem)


def load_keel(path, positive_label: str | None = None) -> Dataset:
    """Load a KEEL ``.dat`` file.

    The class is the last declared attribute (or the one named by
    ``@outputs``).  The value ``positive`` maps to +1 unless
    ``positive_label`` says otherwise.
    """
    path = Path(path)
    attrs: list[str] = []
    output = None
    data_lines: list[tuple[int, str]] = []
    in_data = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            if in_data:
                data_lines.append((lineno, line))
                continue
            low = line.lower()
            if low.startswith("@attribute"):
                parts = line.split(None, 2)
                if len(parts) < 2:
                    raise DataError(f"line {lineno}: malformed @attribute")
                attrs.append(parts[1].split("{")[0])
            elif low.startswith("@output"):
                output = line.split(None, 1)[1].strip()
            elif low.startswith("@data"):
                in_data = True
    if not in_data:
        raise DataError(f"{path}: missing @data section")
    if not attrs:
        raise DataError(f"{path}: no @attribute declarations")
    if not data_lines:
        raise DataError(f"{path}: empty data section")
    ci = attrs.index(output) if output in attrs else len(attrs) - 1
    feats, labs = [], []
    for lineno, line in data_lines:
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(attrs):
            raise DataError(f"line {lineno}: arity mismatch, expected {len(attrs)} "
                            f"values, got {len(cells)}")
        labs.append(cells[ci])
        feats.append([_parse_float(c, lineno) for j, c in enumerate(cells) if j != ci])
    pos = "positive" if positive_label is None else positive_label
    y = _labels_from_values(labs, pos, path.name)
    return Dataset(np.array(feats, dtype=np.float64), y, path.stem)


def load_builtin(name: str) -> Dataset:
    """Bundled datasets; currently ``iris0`` (setosa vs. the other species)."""
    if name != "iris0":
        raise DataError(f"unknown builtin dataset {name!r}")
    ref = resources.files("smoothrank.datasets").joinpath("iris0.csv")
    with resources.as_file(ref) as p:
        ds = load_csv(p, label_column="class", positive_label="positive")
    return Dataset(ds.features, ds.labels, "iris0")


def _check_classes(ds: Dataset, minimum: int, what: str):
    for cls, idx in ((+1, ds.pos_idx), (-1, ds.neg_idx)):
        if len(idx) < minimum:
            raise DataError(f"{ds.name}: class {cls:+d} has {len(idx)} samples, "
                            f"{what} needs at least {minimum}")


def stratified_split_indices(ds: Dataset, spec: SplitSpec):
    """Index form of :func:`stratified_split`: ``(train_idx, test_idx)``, both sorted."""
    _check_classes(ds, 2, "a train/test split")
    rng = np.random.default_rng(spec.seed)
    classes = [ds.pos_idx, ds.neg_idx]
    n_test = math.ceil(spec.test_fraction * ds.n - 1e-9)
    quotas = [spec.test_fraction * len(c) for c in classes]
    counts = [math.floor(q + 1e-9) for q in quotas]
    # largest remainder, positives first on ties
    order = sorted(range(2), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[: max(0, n_test - sum(counts))]:
        counts[i] += 1
    counts = [min(max(c, 1), len(cl) - 1) for c, cl in zip(counts, classes)]
    test = []
    for cl, c in zip(classes, counts):
        perm = rng.permutation(cl)
        test.append(perm[:c])
    test_idx = np.sort(np.concatenate(test))
    train_idx = np.setdiff1d(np.arange(ds.n), test_idx)
    return train_idx, test_idx


def stratified_split(ds: Dataset, spec: SplitSpec):
    """Split into ``(train, test)`` keeping class proportions.

    The test size is ``ceil(test_fraction * n)``, divided among classes by
    largest remainder.
    """
    tr, te = stratified_split_indices(ds, spec)
    return ds.subset(tr, ds.name), ds.subset(te, ds.name)


def kfold(ds: Dataset, spec: SplitSpec):
    """Stratified k-fold partition as a list of ``(train_idx, val_idx)``."""
    k = spec.k_folds
    if k < 2:
        raise DataError("k-fold cross-validation needs k >= 2")
    _check_classes(ds, k, f"{k}-fold cross-validation")
    rng = np.random.default_rng(spec.seed)
    dealt = np.concatenate([rng.permutation(ds.pos_idx), rng.permutation(ds.neg_idx)])
    fold_of = np.empty(ds.n, dtype=np.int64)
    fold_of[dealt] = np.arange(ds.n) % k
    out = []
    for f in range(k):
        out.append((np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)))
    return out


def make_xor(n_per_cluster: int = 50, noise_sd: float = 0.1, seed: int = 1) -> Dataset:
    """Noisy XOR: clusters at (0,0) and (1,1) are positive, (0,1) and (1,0) negative."""
    if n_per_cluster < 1:
        raise ValueError("n_per_cluster must be >= 1")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    centers = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
    labels = np.array([1, 1, -1, -1])
    X = np.repeat(centers, n_per_cluster, axis=0)
    X = X + noise_sd * rng.standard_normal(X.shape)
    y = np.repeat(labels, n_per_cluster)
    return Dataset(X, y, "xor")


def dissimilarity_matrix(reference, queries) -> np.ndarray:
    """Euclidean distances, entry ``(i, j)`` from query row i to reference row j."""
    R = reference.features if isinstance(reference, Dataset) else np.asarray(reference, float)
    Q = queries.features if isinstance(queries, Dataset) else np.asarray(queries, float)
    if Q.ndim == 1:
        Q = Q[None, :]
    if R.ndim != 2 or Q.ndim != 2 or R.shape[1] != Q.shape[1]:
        raise DataError(f"dimension mismatch: reference {R.shape}, queries {Q.shape}")
    return kernels.pairwise_distances(np.ascontiguousarray(Q, dtype=np.float64),
                                      np.ascontiguousarray(R, dtype=np.float64))


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-column [0, 1] scaling fitted on a training set.  Off unless requested."""

    lo: np.ndarray
    span: np.ndarray

    @classmethod
    def fit(cls, ds: Dataset) -> "MinMaxScaler":
        lo = ds.features.min(axis=0)
        span = ds.features.max(axis=0) - lo
        span = np.where(span > 0, span, 1.0)
        return cls(lo, span)

    def transform(self, ds: Dataset) -> Dataset:
        return Dataset((ds.features - self.lo) / self.span, ds.labels, ds.name)
