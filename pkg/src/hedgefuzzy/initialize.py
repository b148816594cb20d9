"""Rule-base initialization from per-class k-means clustering."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .network import SIGMA_MIN, RuleBase
from .seeding import derive_seed

OWN_CLASS_WEIGHT = 1.0
OTHER_CLASS_WEIGHT = 0.01


@dataclass(frozen=True)
class InitConfig:
    clusters_per_class: int = 1
    kmeans_max_iter: int = 100
    kmeans_restarts: int = 10
    seed: int = 0
    width_rule: str = "cluster-std"  # or "nearest-center-half"
    plusplus: bool = False
    sigma_min: float = SIGMA_MIN

    def __post_init__(self):
        if self.clusters_per_class < 1:
            raise ValueError("clusters_per_class must be >= 1")
        if self.kmeans_restarts < 1 or self.kmeans_max_iter < 1:
            raise ValueError("k-means restarts and max_iter must be >= 1")
        if self.width_rule not in ("cluster-std", "nearest-center-half"):
            raise ValueError(f"unknown width_rule {self.width_rule!r}")


@dataclass
class KMeansResult:
    centers: np.ndarray
    assignment: np.ndarray
    wcss: float
    iterations: int
    restart: int


def _sq_dists(points, centers):
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _plusplus_seeds(points, k, rng):
    centers = [points[rng.integers(points.shape[0])]]
    for _ in range(1, k):
        d2 = _sq_dists(points, np.array(centers)).min(axis=1)
        total = d2.sum()
        if total == 0:
            centers.append(points[rng.integers(points.shape[0])])
        else:
            centers.append(points[rng.choice(points.shape[0], p=d2 / total)])
    return np.array(centers)


def _lloyd(points, centers, max_iter):
    k = centers.shape[0]
    assign = None
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(points, centers)
        new_assign = np.argmin(d2, axis=1)
        counts = np.bincount(new_assign, minlength=k)
        for e in np.flatnonzero(counts == 0):
            # reseed an empty cluster at the point farthest from its center
            far = int(np.argmax(d2[np.arange(points.shape[0]), new_assign]))
            new_assign[far] = e
            d2[far, :] = 0.0
            counts = np.bincount(new_assign, minlength=k)
        new_centers = np.array([points[new_assign == c].mean(axis=0) for c in range(k)])
        converged = assign is not None and np.array_equal(new_assign, assign)
        assign, centers = new_assign, new_centers
        if converged:
            break
    wcss = float(((points - centers[assign]) ** 2).sum())
    return centers, assign, wcss, it


def kmeans(
    points,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    restarts: int = 10,
    plusplus: bool = False,
) -> KMeansResult:
    """Lloyd's k-means, best of ``restarts`` by within-cluster sum of squares."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    M = points.shape[0]
    if k < 1 or M < k:
        raise ValueError(f"cannot form {k} clusters from {M} points")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng(derive_seed(seed, "restart", r))
        if plusplus:
            start = _plusplus_seeds(points, k, rng)
        else:
            start = points[rng.choice(M, size=k, replace=False)]
        centers, assign, wcss, it = _lloyd(points, start.copy(), max_iter)
        if best is None or wcss < best.wcss:
            best = KMeansResult(centers, assign, wcss, it, r)
    return best


def init_rulebase(
    ds: Dataset,
    cfg: InitConfig,
    features: Optional[Sequence[int]] = None,
    report: Optional[list] = None,
) -> RuleBase:
    """One block of ``clusters_per_class`` rules per class.

    ``features`` (0-based) restricts clustering and the rule antecedents to a
    subset; the remaining columns stay in the rule base but are masked out.
    If ``report`` is a list, one diagnostic dict per class is appended to it.
    """
    X, y, K, D = ds.features, ds.labels, ds.class_count, ds.n_features
    mask = np.zeros(D, dtype=bool)
    mask[list(range(D)) if features is None else list(features)] = True
    act = np.flatnonzero(mask)
    if act.size == 0:
        raise ValueError("no active features")
    m = cfg.clusters_per_class
    counts = ds.class_counts()
    centers, widths, classes = [], [], []
    for k in range(K):
        if counts[k] < m:
            raise ValueError(
                f"class {k + 1} ({ds.class_names[k]}) has {counts[k]} samples, fewer than {m} clusters"
            )
        pts = X[y == k + 1]
        res = kmeans(
            pts[:, act],
            m,
            seed=derive_seed(cfg.seed, "kmeans", k + 1),
            max_iter=cfg.kmeans_max_iter,
            restarts=cfg.kmeans_restarts,
            plusplus=cfg.plusplus,
        )
        fill_c = pts.mean(axis=0)
        for r in range(m):
            c = fill_c.copy()
            c[act] = res.centers[r]
            s = np.ones(D)
            s[act] = pts[res.assignment == r][:, act].std(axis=0)
            centers.append(c)
            widths.append(s)
            classes.append(k + 1)
        if report is not None:
            report.append({"class": k + 1, "clusters": m, "wcss": res.wcss, "sizes": np.bincount(res.assignment, minlength=m).tolist()})
    centers = np.array(centers)
    widths = np.array(widths)
    if cfg.width_rule == "nearest-center-half" and len(centers) > 1:
        ca = centers[:, act]
        d2 = _sq_dists(ca, ca)
        np.fill_diagonal(d2, np.inf)
        nearest = np.argmin(d2, axis=1)
        widths[:, act] = 0.5 * np.abs(ca - ca[nearest])
    widths = np.maximum(widths, cfg.sigma_min)
    U = len(classes)
    weights = np.full((U, K), OTHER_CLASS_WEIGHT)
    weights[np.arange(U), np.array(classes) - 1] = OWN_CLASS_WEIGHT
    return RuleBase(
        centers,
        widths,
        np.ones((U, D)),
        weights,
        feature_mask=mask,
        rule_class=np.array(classes),
        sigma_min=cfg.sigma_min,
    )
