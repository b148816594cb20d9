"""Metrics, train/test experiments and k-fold cross-validation."""
from __future__ import annotations

import csv
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, apply_normalization, kfold, normalize, stratified_split
from .initialize import InitConfig, init_rulebase
from .network import RuleBase, forward
from .select import SelectionConfig, SelectionReport, lhnfcsf_pipeline
from .seeding import derive_seed
from .train import TrainConfig, fit



@contextmanager
def _opened(target):
    """Yield a text handle for a path, or pass an open handle through."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            yield fh


@dataclass(frozen=True)
class Metrics:
    accuracy: float  # percent
    rmse: float
    confusion: np.ndarray  # K x K, rows = true class, cols = predicted

    @property
    def n(self) -> int:
        return int(self.confusion.sum())

    @property
    def recall(self) -> np.ndarray:
        rows = self.confusion.sum(axis=1)
        return np.divide(np.diag(self.confusion), rows, out=np.full(rows.shape, np.nan), where=rows > 0)

    def confusion_normalized(self) -> np.ndarray:
        rows = self.confusion.sum(axis=1, keepdims=True)
        return np.divide(self.confusion, rows, out=np.zeros(self.confusion.shape), where=rows > 0)

    def to_text(self, label: str = "") -> str:
        head = f"{label} " if label else ""
        lines = [f"{head}accuracy {self.accuracy:.4f} %  rmse {self.rmse:.6g}  n {self.n}", "confusion (rows=true, cols=predicted):"]
        lines += ["  " + " ".join(f"{v:5d}" for v in row) for row in self.confusion]
        lines.append("recall: " + " ".join(f"{v:.4f}" for v in self.recall))
        return "\n".join(lines) + "\n"


def metrics_from_predictions(labels, predicted, h, K: int) -> Metrics:
    labels = np.asarray(labels, dtype=int)
    predicted = np.asarray(predicted, dtype=int)
    conf = np.zeros((K, K), dtype=int)
    np.add.at(conf, (labels - 1, predicted - 1), 1)
    T = np.zeros((labels.size, K))
    T[np.arange(labels.size), labels - 1] = 1.0
    rmse = float(np.sqrt(np.mean((T - h) ** 2)))
    acc = 100.0 * np.trace(conf) / labels.size
    return Metrics(acc, rmse, conf)


def evaluate(rb: RuleBase, ds: Dataset) -> Metrics:
    if ds.n_features != rb.n_features:
        raise ValueError(f"model expects {rb.n_features} features, dataset has {ds.n_features}")
    if ds.class_count != rb.n_classes:
        raise ValueError(f"model has {rb.n_classes} classes, dataset has {ds.class_count}")
    tr = forward(rb, ds.features)
    return metrics_from_predictions(ds.labels, tr.predicted, tr.h, rb.n_classes)


@dataclass
class RunResult:
    """One train/evaluate cycle on a fixed train/test partition."""

    rulebase: RuleBase
    train: Metrics
    test: Metrics
    features: tuple
    history: list = field(default_factory=list)
    selection: Optional[SelectionReport] = None
    scg_status: str = ""
    monotone: bool = True


def _monotone(history) -> bool:
    costs = [h["cost"] for h in history]
    return all(b <= a for a, b in zip(costs, costs[1:]))


def run_partition(
    ds_train: Dataset,
    ds_test: Dataset,
    init_cfg: InitConfig,
    train_cfg: TrainConfig,
    selection: Optional[SelectionConfig] = None,
    norm_mode: Optional[str] = "minmax",
) -> RunResult:
    """Normalize on the training part, train (optionally with selection), evaluate both parts."""
    if norm_mode:
        ds_train, params = normalize(ds_train, norm_mode)
        ds_test = apply_normalization(ds_test, params)
    if selection is None:
        res = fit(ds_train, init_rulebase(ds_train, init_cfg), train_cfg)
        rb, hist, report, status = res.rulebase, res.history, None, res.scg.status if res.scg else "max_iter"
        mono = _monotone(hist)
    else:
        pr = lhnfcsf_pipeline(ds_train, init_cfg, train_cfg, selection)
        rb, hist, report = pr.rulebase, pr.phase3.history, pr.report
        status = pr.phase3.scg.status if pr.phase3.scg else "max_iter"
        mono = _monotone(pr.phase1.history) and _monotone(hist)
    return RunResult(
        rb,
        evaluate(rb, ds_train),
        evaluate(rb, ds_test),
        tuple(int(j) for j in rb.active),
        hist,
        report,
        status,
        mono,
    )


def holdout(
    ds: Dataset,
    seed: int,
    train_fraction: float = 0.6,
    init_cfg: InitConfig = InitConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    selection: Optional[SelectionConfig] = None,
    norm_mode: Optional[str] = "minmax",
):
    """Stratified split + :func:`run_partition`; returns (SplitPlan, RunResult).

    The split, k-means and training streams are all derived from ``seed``.
    """
    plan = stratified_split(ds, train_fraction, seed)
    res = run_partition(
        ds.subset(plan.train_indices),
        ds.subset(plan.test_indices),
        replace(init_cfg, seed=derive_seed(seed, "init")),
        replace(train_cfg, seed=seed),
        selection,
        norm_mode,
    )
    return plan, res


@dataclass
class CVResult:
    folds: list  # dicts: seed, fold, n_train, n_valid, train_acc, valid_acc, valid_rmse, kept
    per_seed: dict  # seed -> {"mean", "std", "weighted_mean"}

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean([v["mean"] for v in self.per_seed.values()]))

    def write_csv(self, path) -> None:
        with _opened(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            cols = ["seed", "fold", "n_train", "n_valid", "train_acc", "valid_acc", "valid_rmse", "kept"]
            w.writerow(cols)
            for row in self.folds:
                w.writerow([row[c] if c != "kept" else " ".join(str(j + 1) for j in row[c]) for c in cols])

    def to_text(self) -> str:
        lines = ["seed  mean_acc  std_acc  weighted_mean"]
        for s, v in self.per_seed.items():
            lines.append(f"{s:<5d} {v['mean']:.4f}  {v['std']:.4f}  {v['weighted_mean']:.4f}")
        lines.append(f"overall mean accuracy {self.mean_accuracy:.4f}")
        return "\n".join(lines) + "\n"


def cross_validate(
    ds: Dataset,
    k: int,
    seeds: Sequence[int],
    init_cfg: InitConfig = InitConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    selection: Optional[SelectionConfig] = None,
    norm_mode: Optional[str] = "minmax",
) -> CVResult:
    """Stratified k-fold CV repeated for each seed.

    Per seed the headline mean is the unweighted mean of fold accuracies;
    the sample-weighted mean is reported alongside.
    """
    rows, per_seed = [], {}
    for seed in seeds:
        plan = kfold(ds, k, seed)
        accs, sizes = [], []
        for f in range(k):
            tr_idx, va_idx = plan.fold(f)
            res = run_partition(
                ds.subset(tr_idx),
                ds.subset(va_idx),
                replace(init_cfg, seed=derive_seed(seed, "init", f)),
                replace(train_cfg, seed=seed),
                selection,
                norm_mode,
            )
            rows.append({
                "seed": seed,
                "fold": f + 1,
                "n_train": tr_idx.size,
                "n_valid": va_idx.size,
                "train_acc": res.train.accuracy,
                "valid_acc": res.test.accuracy,
                "valid_rmse": res.test.rmse,
                "kept": res.features,
            })
            accs.append(res.test.accuracy)
            sizes.append(va_idx.size)
        accs = np.array(accs)
        per_seed[seed] = {
            "mean": float(accs.mean()),
            "std": float(accs.std()),
            "weighted_mean": float(np.average(accs, weights=sizes)),
        }
    return CVResult(rows, per_seed)


def decision_surface(rb: RuleBase, features: Sequence[int], base_point, resolution: int = 50, bounds=(0.0, 1.0)):
    """Grid of predicted classes over two features, others held at ``base_point``.

    Returns (grid_a, grid_b, predicted) with predicted shaped (resolution, resolution).
    """
    a, b = features
    g = np.linspace(bounds[0], bounds[1], resolution)
    A, B = np.meshgrid(g, g, indexing="ij")
    X = np.tile(np.asarray(base_point, dtype=float), (A.size, 1))
    X[:, a] = A.ravel()
    X[:, b] = B.ravel()
    return g, g, forward(rb, X).predicted.reshape(A.shape)
