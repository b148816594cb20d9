"""Feature selection from trained hedge values and the two-phase pipeline.

Phase 1 trains a classifier whose hedges are confined to [0, 1]. A hedge
near 1 keeps a feature's membership sharp, a hedge near 0 flattens it, so
per-class hedges score how much each feature matters. Phase 2 turns the
scores into a feature subset, and phase 3 retrains from scratch on that
subset with unconstrained (non-negative) hedges.
"""
from __future__ import annotations

import csv
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .initialize import InitConfig, init_rulebase
from .network import RuleBase
from .train import FitResult, TrainConfig, fit

POLICIES = ("backward-step", "threshold-sum", "threshold-product", "top-m")



@contextmanager
def _opened(target):
    """Yield a text handle for a path, or pass an open handle through."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            yield fh


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class SelectionReport:
    features: tuple  # 0-based feature ids that were scored
    hedge_matrix: np.ndarray  # K x len(features), one hedge per (class, feature)
    product_score: np.ndarray  # product over classes
    sum_score: np.ndarray  # sum over classes
    kept: tuple = ()
    dropped: tuple = ()
    policy: str = ""
    threshold: Optional[float] = None

    @property
    def n_classes(self) -> int:
        return self.hedge_matrix.shape[0]

    def score(self, kind: str = "sum") -> np.ndarray:
        return self.sum_score if kind == "sum" else self.product_score

    def to_table(self, feature_names=None, class_names=None, digits: int = 4) -> str:
        """Classes x features table with product and totals rows."""
        fn = [f"Feature {j + 1}" for j in self.features] if feature_names is None else [feature_names[j] for j in self.features]
        cn = class_names or [f"Class-{k + 1}" for k in range(self.n_classes)]
        rows = [["Class/Features", *fn]]
        for k in range(self.n_classes):
            rows.append([cn[k], *(f"{v:.{digits}g}" for v in self.hedge_matrix[k])])
        rows.append(["Total LH values", *(f"{v:.{digits}g}" for v in self.sum_score)])
        rows.append(["Product score", *(f"{v:.{digits}g}" for v in self.product_score)])
        width = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
        lines = ["  ".join(cell.ljust(width[c]) for c, cell in enumerate(r)).rstrip() for r in rows]
        if self.kept or self.dropped:
            lines.append("")
            lines.append("kept: " + ", ".join(str(j + 1) for j in self.kept))
            lines.append("dropped: " + ", ".join(str(j + 1) for j in self.dropped))
        return "\n".join(lines) + "\n"

    def write_csv(self, path, class_names=None) -> None:
        cn = class_names or [f"Class-{k + 1}" for k in range(self.n_classes)]
        with _opened(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", *(f"feature_{j + 1}" for j in self.features)])
            for k in range(self.n_classes):
                w.writerow([cn[k], *(repr(float(v)) for v in self.hedge_matrix[k])])
            w.writerow(["total", *(repr(float(v)) for v in self.sum_score)])
            w.writerow(["product", *(repr(float(v)) for v in self.product_score)])
            w.writerow(["kept", *(int(j in self.kept) for j in self.features)])


def report_from_matrix(hedge_matrix, features: Optional[Sequence[int]] = None) -> SelectionReport:
    """Score a K x D matrix of per-class hedges directly."""
    H = np.asarray(hedge_matrix, dtype=float)
    if H.ndim != 2:
        raise SelectionError("hedge matrix must be classes x features")
    if np.any(H < 0):
        raise SelectionError("hedges must be non-negative")
    feats = tuple(range(H.shape[1])) if features is None else tuple(int(j) for j in features)
    H.setflags(write=False)
    return SelectionReport(feats, H, np.prod(H, axis=0), np.sum(H, axis=0))


def hedge_scores(rb: RuleBase, aggregate: str = "max") -> SelectionReport:
    """Collapse the rules of each class to one hedge per active feature."""
    if rb.rule_class is None:
        raise SelectionError("rule base has no rule-to-class attribution")
    if aggregate not in ("max", "mean"):
        raise SelectionError("aggregate must be 'max' or 'mean'")
    act = rb.active
    reducer = np.max if aggregate == "max" else np.mean
    rows = []
    for k in range(1, rb.n_classes + 1):
        mine = rb.hedges[rb.rule_class == k][:, act]
        if mine.shape[0] == 0:
            raise SelectionError(f"no rule attributed to class {k}")
        rows.append(reducer(mine, axis=0))
    return report_from_matrix(np.array(rows), act)


def select_features(
    report: SelectionReport,
    policy: str = "backward-step",
    tau: Optional[float] = None,
    m: Optional[int] = None,
    score: str = "sum",
) -> SelectionReport:
    """Split scored features into kept and dropped.

    backward-step
        Drop the ``m`` (default 1) lowest-scoring features, each only if its
        score is below the mean score. Uniform hedges drop nothing.
    threshold-sum
        Keep features whose hedge sum is at least ``tau * K`` (default 0.5).
    threshold-product
        Keep features whose hedge product is at least ``tau ** K``.
    top-m
        Keep the ``m`` best features by ``score``.
    """
    if policy not in POLICIES:
        raise SelectionError(f"unknown policy {policy!r}; choose from {POLICIES}")
    feats = np.array(report.features)
    K = report.n_classes
    s = report.score(score)
    if policy == "threshold-sum":
        tau = 0.5 if tau is None else tau
        keep = report.sum_score >= tau * K
    elif policy == "threshold-product":
        tau = 0.5 if tau is None else tau
        keep = report.product_score >= tau**K
    elif policy == "top-m":
        if m is None or not 1 <= m <= feats.size:
            raise SelectionError(f"top-m needs 1 <= m <= {feats.size}")
        keep = np.zeros(feats.size, dtype=bool)
        keep[np.argsort(-s, kind="stable")[:m]] = True
    else:
        n_drop = 1 if m is None else m
        keep = np.ones(feats.size, dtype=bool)
        mean = s.mean()
        for j in np.argsort(s, kind="stable")[:n_drop]:
            if s[j] < mean:
                keep[j] = False
    if not keep.any():
        raise SelectionError("every feature was dropped; loosen the threshold")
    return replace(
        report,
        kept=tuple(int(j) for j in feats[keep]),
        dropped=tuple(int(j) for j in feats[~keep]),
        policy=policy,
        threshold=tau,
    )


@dataclass(frozen=True)
class SelectionConfig:
    policy: str = "backward-step"
    tau: Optional[float] = None
    m: Optional[int] = None
    score: str = "sum"
    aggregate: str = "max"
    clusters: int = 1  # rules per class while scoring
    hedge_start: float = 0.5
    trainable: tuple = ("sigma", "p", "w")


@dataclass
class PipelineResult:
    rulebase: RuleBase
    report: SelectionReport
    phase1: FitResult
    phase3: FitResult
    phase1_rulebase: RuleBase = field(repr=False, default=None)


def scoring_phase(ds_train: Dataset, init_cfg: InitConfig, train_cfg: TrainConfig, sel: SelectionConfig) -> FitResult:
    """Phase 1: constrained-hedge training on all features.

    Centers stay at their k-means positions and hedges start mid-range,
    where the [0, 1] reparameterization is not saturated.
    """
    rb0 = init_rulebase(ds_train, replace(init_cfg, clusters_per_class=sel.clusters))
    rb0 = rb0.with_params(hedges=np.full(rb0.hedges.shape, sel.hedge_start))
    cfg = replace(train_cfg, hedge_mode="constrained01", trainable=sel.trainable)
    return fit(ds_train, rb0, cfg)


def lhnfcsf_pipeline(
    ds_train: Dataset,
    init_cfg: InitConfig = InitConfig(),
    train_cfg: TrainConfig = TrainConfig(),
    sel: SelectionConfig = SelectionConfig(),
) -> PipelineResult:
    """Score features, select a subset, then retrain on it from scratch."""
    p1 = scoring_phase(ds_train, init_cfg, train_cfg, sel)
    report = select_features(
        hedge_scores(p1.rulebase, sel.aggregate), sel.policy, tau=sel.tau, m=sel.m, score=sel.score
    )
    rb0 = init_rulebase(ds_train, init_cfg, features=report.kept)
    p3 = fit(ds_train, rb0, replace(train_cfg, hedge_mode="nonneg"))
    return PipelineResult(p3.rulebase, report, p1, p3, p1.rulebase)
