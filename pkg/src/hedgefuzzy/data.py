"""Dataset ingestion, feature scaling and stratified partitioning."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .seeding import stream

THYROID_FEATURES = (
    "T3-resin uptake test",
    "Total serum thyroxin",
    "Total serum triiodothyronine",
    "Basal TSH",
    "Max abs. difference of TSH after TRH",
)


class DataError(ValueError):
    """Raised for malformed input files or impossible partitioning requests."""


@dataclass(frozen=True)
class NormParams:
    mode: str  # "minmax" | "zscore"
    offset: np.ndarray  # min (minmax) or mean (zscore)
    scale: np.ndarray  # max - min, or std
    degenerate: np.ndarray  # bool per column

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        safe = np.where(self.degenerate, 1.0, self.scale)
        Z = (X - self.offset) / safe
        fill = 0.5 if self.mode == "minmax" else 0.0
        Z[:, self.degenerate] = fill
        return Z

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "offset": [float(v) for v in self.offset],
            "scale": [float(v) for v in self.scale],
            "degenerate": [bool(v) for v in self.degenerate],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NormParams":
        return cls(
            mode=d["mode"],
            offset=np.asarray(d["offset"], dtype=float),
            scale=np.asarray(d["scale"], dtype=float),
            degenerate=np.asarray(d["degenerate"], dtype=bool),
        )


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with 1-based integer class labels.

    ``features`` and ``labels`` are made read-only on construction.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_names: tuple = ()
    class_names: tuple = ()
    norm_params: Optional[NormParams] = None

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        y = np.array(self.labels, dtype=int)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if y.shape != (X.shape[0],):
            raise DataError("labels length does not match number of rows")
        K = int(self.class_count)
        if K < 2:
            raise DataError("need at least 2 classes")
        if X.shape[0] < 1:
            raise DataError("dataset has no rows")
        if y.size and (y.min() < 1 or y.max() > K):
            raise DataError(f"label outside 1..{K}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        names = tuple(self.feature_names) or tuple(f"Feature {j + 1}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError("feature_names length does not match column count")
        object.__setattr__(self, "feature_names", names)
        cnames = tuple(self.class_names) or tuple(f"Class-{k + 1}" for k in range(K))
        object.__setattr__(self, "class_names", cnames)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count + 1)[1:]

    def targets(self) -> np.ndarray:
        """One-hot N x K target matrix."""
        T = np.zeros((self.n_samples, self.class_count))
        T[np.arange(self.n_samples), self.labels - 1] = 1.0
        return T

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return replace(self, features=self.features[idx], labels=self.labels[idx])

    def select_columns(self, columns: Sequence[int]) -> "Dataset":
        cols = list(columns)
        return replace(
            self,
            features=self.features[:, cols],
            feature_names=tuple(self.feature_names[c] for c in cols),
            norm_params=None,
        )


@dataclass(frozen=True)
class SplitPlan:
    """Either a train/test split or a k-fold assignment (0-based fold ids)."""

    train_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    test_indices: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    folds: Optional[np.ndarray] = None
    seed: Optional[int] = None

    @property
    def k(self) -> int:
        return 0 if self.folds is None else int(self.folds.max()) + 1

    def fold(self, f: int):
        """Return (train_indices, validation_indices) for fold ``f``."""
        if self.folds is None:
            raise DataError("not a k-fold plan")
        all_idx = np.arange(self.folds.size)
        return all_idx[self.folds != f], all_idx[self.folds == f]


def _parse_float(tok: str) -> float:
    return float(tok.strip())


def _is_numeric_row(row: Sequence[str]) -> bool:
    try:
        for tok in row:
            _parse_float(tok)
    except ValueError:
        return False
    return True


def load_csv(
    path,
    label_column: str = "first",
    feature_names: Optional[Sequence[str]] = None,
    class_names: Optional[Sequence[str]] = None,
    class_count: Optional[int] = None,
) -> Dataset:
    """Load a labeled CSV with one integer label column and D numeric columns.

    A non-numeric first row is treated as a header. Labels must be integers
    in 1..K, where K is ``class_count`` or else the number of distinct labels.
    """
    if label_column not in ("first", "last"):
        raise DataError("label_column must be 'first' or 'last'")
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    rows, lines = [], []
    header = None
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not tok.strip() for tok in row):
                continue
            if header is None and not rows and not _is_numeric_row(row):
                header = [tok.strip() for tok in row]
                continue
            rows.append(row)
            lines.append(lineno)
    if not rows:
        raise DataError(f"no rows in {path}")
    width = len(rows[0])
    if width < 2:
        raise DataError(f"line {lines[0]}: need a label and at least one feature")
    X = np.empty((len(rows), width - 1))
    y = np.empty(len(rows), dtype=int)
    for r, (row, lineno) in enumerate(zip(rows, lines)):
        if len(row) != width:
            raise DataError(f"line {lineno}: expected {width} fields, got {len(row)}")
        try:
            vals = [_parse_float(tok) for tok in row]
        except ValueError:
            raise DataError(f"line {lineno}: non-numeric field") from None
        lab = vals[0] if label_column == "first" else vals[-1]
        if lab != int(lab):
            raise DataError(f"line {lineno}: label {lab} is not an integer")
        y[r] = int(lab)
        X[r] = vals[1:] if label_column == "first" else vals[:-1]
    K = int(class_count) if class_count else len(np.unique(y))
    bad = np.flatnonzero((y < 1) | (y > K))
    if bad.size:
        raise DataError(f"line {lines[bad[0]]}: label {y[bad[0]]} outside 1..{K}")
    if feature_names is None and header is not None:
        feature_names = header[1:] if label_column == "first" else header[:-1]
    return Dataset(X, y, K, tuple(feature_names or ()), tuple(class_names or ()))


def thyroid_path() -> Path:
    return Path(str(resources.files("hedgefuzzy") / "datasets" / "new-thyroid.csv"))


def load_thyroid_csv(path=None, label_column: str = "first") -> Dataset:
    """Load the UCI new-thyroid data (bundled copy when ``path`` is None)."""
    ds = load_csv(path or thyroid_path(), label_column=label_column)
    if ds.n_features == len(THYROID_FEATURES):
        ds = replace(ds, feature_names=THYROID_FEATURES)
    return ds


def fit_normalization(X: np.ndarray, mode: str = "minmax") -> NormParams:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        raise DataError("normalization needs at least 2 rows")
    if mode == "minmax":
        lo, hi = X.min(axis=0), X.max(axis=0)
        scale = hi - lo
        return NormParams("minmax", lo, scale, scale == 0)
    if mode == "zscore":
        mu, sd = X.mean(axis=0), X.std(axis=0)
        return NormParams("zscore", mu, sd, sd == 0)
    raise DataError(f"unknown normalization mode {mode!r}")


def apply_normalization(ds: Dataset, params: NormParams) -> Dataset:
    """Re-apply stored parameters verbatim (values may leave [0, 1])."""
    return replace(ds, features=params.apply(ds.features), norm_params=params)


def normalize(ds: Dataset, mode: str = "minmax"):
    """Fit scaling on ``ds`` and return (normalized dataset, params)."""
    params = fit_normalization(ds.features, mode)
    return apply_normalization(ds, params), params


def _largest_remainder(counts: np.ndarray, fraction: float) -> np.ndarray:
    exact = counts * fraction
    alloc = np.floor(exact).astype(int)
    short = int(round(counts.sum() * fraction)) - alloc.sum()
    rem = exact - alloc
    # stable sort: ties go to the lower class id
    for k in np.argsort(-rem, kind="stable")[: max(short, 0)]:
        alloc[k] += 1
    return np.clip(alloc, 1, counts - 1)


def stratified_split(ds: Dataset, train_fraction: float, seed: int) -> SplitPlan:
    """Per-class shuffled split with largest-remainder rounding."""
    if not 0.0 < train_fraction < 1.0:
        raise DataError("train_fraction must lie strictly between 0 and 1")
    counts = ds.class_counts()
    if counts.min() < 2:
        raise DataError("every class needs at least 2 samples to stratify")
    n_train = _largest_remainder(counts, train_fraction)
    rng = stream(seed, "split")
    train, test = [], []
    for k in range(ds.class_count):
        idx = np.flatnonzero(ds.labels == k + 1)
        idx = idx[rng.permutation(idx.size)]
        train.append(idx[: n_train[k]])
        test.append(idx[n_train[k]:])
    return SplitPlan(np.sort(np.concatenate(train)), np.sort(np.concatenate(test)), seed=seed)


def kfold(ds: Dataset, k: int, seed: int) -> SplitPlan:
    """Stratified k-fold assignment.

    Samples are shuffled within each class, concatenated class by class and
    dealt round-robin, so folds are stratified and differ in size by <= 1.
    ``k`` may not exceed the smallest class count, except for leave-one-out.
    """
    if k < 2:
        raise DataError("k must be at least 2")
    counts = ds.class_counts()
    # leave-one-out (k == N) cannot be stratified but is always well defined
    if k > counts.min() and k != ds.n_samples:
        raise DataError(f"k={k} exceeds the smallest class count {counts.min()}")
    rng = stream(seed, "kfold", k)
    order = []
    for c in range(ds.class_count):
        idx = np.flatnonzero(ds.labels == c + 1)
        order.append(idx[rng.permutation(idx.size)])
    order = np.concatenate(order)
    folds = np.empty(ds.n_samples, dtype=int)
    folds[order] = np.arange(order.size) % k
    return SplitPlan(folds=folds, seed=seed)


def save_dataset(ds: Dataset, path, **meta) -> Path:
    """Write ``ds`` as label-first CSV plus a ``.meta.json`` sidecar.

    Extra keyword arguments (seed, split indices, ...) go into the sidecar.
    """
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *ds.feature_names])
        for lab, row in zip(ds.labels, ds.features):
            w.writerow([int(lab), *(repr(float(v)) for v in row)])
    sidecar = {
        "class_count": ds.class_count,
        "class_names": list(ds.class_names),
        "norm_params": ds.norm_params.to_dict() if ds.norm_params else None,
    }
    for key, val in meta.items():
        sidecar[key] = val.tolist() if isinstance(val, np.ndarray) else val
    Path(str(path) + ".meta.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def load_dataset(path):
    """Inverse of :func:`save_dataset`; returns (Dataset, sidecar dict)."""
    meta = json.loads(Path(str(path) + ".meta.json").read_text())
    ds = load_csv(path, class_names=meta["class_names"], class_count=meta["class_count"])
    norm = NormParams.from_dict(meta["norm_params"]) if meta.get("norm_params") else None
    ds = replace(ds, norm_params=norm)
    return ds, meta
