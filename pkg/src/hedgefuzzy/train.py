"""Classification cost, analytic gradients and the SCG training loop.

Training runs in an unconstrained parameter space::

    sigma = sigma_min + softplus(t_sigma)
    w     = softplus(t_w)
    p     = sigmoid(t_p)      (hedge_mode "constrained01")
    p     = softplus(t_p)     (hedge_mode "nonneg")

so every iterate satisfies the rule-base constraints by construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from .data import Dataset
from .network import RuleBase, forward
from .scg import Budget, ScgResult, minimize

HEDGE_MODES = ("constrained01", "nonneg")
PARAM_GROUPS = ("c", "sigma", "p", "w")
# sigmoid(t) never reaches 1, so identity hedges start just below it
HEDGE_CLIP = 1e-2
_TINY = 1e-12


@dataclass(frozen=True)
class TrainConfig:
    hedge_mode: str = "nonneg"
    trainable: tuple = PARAM_GROUPS
    budget: Budget = field(default_factory=Budget)
    seed: int = 0

    def __post_init__(self):
        if self.hedge_mode not in HEDGE_MODES:
            raise ValueError(f"hedge_mode must be one of {HEDGE_MODES}")
        tr = tuple(self.trainable)
        if not tr or any(t not in PARAM_GROUPS for t in tr):
            raise ValueError(f"trainable must be a non-empty subset of {PARAM_GROUPS}")
        object.__setattr__(self, "trainable", tuple(g for g in PARAM_GROUPS if g in tr))


class TrainingError(RuntimeError):
    """Optimizer aborted; ``partial`` holds the last accepted rule base."""

    def __init__(self, message, partial=None, result=None):
        super().__init__(message)
        self.partial = partial
        self.result = result


def softplus(t):
    return np.logaddexp(0.0, t)


def softplus_inv(y):
    y = np.maximum(y, _TINY)
    return y + np.log(-np.expm1(-y))


def logit(p):
    return np.log(p) - np.log1p(-p)


def _one_hot(labels, K):
    labels = np.asarray(labels, dtype=int)
    T = np.zeros((labels.size, K))
    T[np.arange(labels.size), labels - 1] = 1.0
    return T


def cost(rb: RuleBase, X, labels) -> float:
    """Mean over samples of half the squared error between one-hot targets and h."""
    h = forward(rb, X).h
    T = _one_hot(labels, rb.n_classes)
    return float(0.5 * np.sum((T - h) ** 2) / h.shape[0])


def rmse(rb: RuleBase, X, labels) -> float:
    """Root of the mean squared residual over all N x K entries of (t - h)."""
    h = forward(rb, X).h
    T = _one_hot(labels, rb.n_classes)
    return float(np.sqrt(np.mean((T - h) ** 2)))


def cost_grad(rb: RuleBase, X, labels) -> dict:
    """Gradient of :func:`cost` w.r.t. centers, widths, hedges and weights.

    Returns full-shape arrays keyed ``c``, ``sigma``, ``p``, ``w``; entries of
    masked-out features are zero.
    """
    X = np.asarray(X, dtype=float)
    tr = forward(rb, X)
    N = X.shape[0]
    T = _one_hot(labels, rb.n_classes)
    gh = (tr.h - T) / N
    # through h = O / delta, using the max-shifted (scale-free) outputs
    gO = (gh - np.sum(gh * tr.h, axis=1, keepdims=True)) / np.where(tr.dead, 1.0, tr.scaled_delta)[:, None]
    gO[tr.dead] = 0.0
    gw = tr.scaled_beta.T @ gO
    glogb = (gO @ rb.weights.T) * tr.scaled_beta  # N x U
    sigma = np.maximum(rb.widths, rb.sigma_min)
    z = (X[:, None, :] - rb.centers[None, :, :]) / sigma[None, :, :]
    p_eff = np.where(rb.feature_mask, rb.hedges, 0.0)
    gl = glogb[:, :, None]
    gp = np.sum(gl * (-0.5 * z * z), axis=0)
    gc = p_eff * np.sum(gl * z, axis=0) / sigma
    gs = p_eff * np.sum(gl * z * z, axis=0) / sigma
    gs = np.where(rb.widths < rb.sigma_min, 0.0, gs)
    inactive = ~rb.feature_mask
    gp[:, inactive] = 0.0
    gc[:, inactive] = 0.0
    gs[:, inactive] = 0.0
    return {"c": gc, "sigma": gs, "p": gp, "w": gw}


class ParamCodec:
    """Maps a rule base to and from a flat unconstrained parameter vector.

    Only trainable groups on active features enter the vector; everything
    else is copied from ``template``.
    """

    def __init__(self, template: RuleBase, cfg: TrainConfig):
        self.template = template
        self.cfg = cfg
        self.act = template.active
        U, K = template.n_rules, template.n_classes
        A = self.act.size
        sizes = {"c": U * A, "sigma": U * A, "p": U * A, "w": U * K}
        self.slices = {}
        pos = 0
        for g in cfg.trainable:
            self.slices[g] = slice(pos, pos + sizes[g])
            pos += sizes[g]
        self.size = pos

    def _hedge_fwd(self, t):
        return expit(t) if self.cfg.hedge_mode == "constrained01" else softplus(t)

    def _hedge_inv(self, p):
        if self.cfg.hedge_mode == "constrained01":
            return logit(np.clip(p, HEDGE_CLIP, 1.0 - HEDGE_CLIP))
        return softplus_inv(p)

    def encode(self, rb: RuleBase) -> np.ndarray:
        a = self.act
        parts = []
        for g in self.cfg.trainable:
            if g == "c":
                parts.append(rb.centers[:, a].ravel())
            elif g == "sigma":
                parts.append(softplus_inv(rb.widths[:, a] - rb.sigma_min).ravel())
            elif g == "p":
                parts.append(self._hedge_inv(rb.hedges[:, a]).ravel())
            else:
                parts.append(softplus_inv(rb.weights).ravel())
        return np.concatenate(parts) if parts else np.empty(0)

    def decode(self, theta) -> RuleBase:
        rb, a = self.template, self.act
        U, A = rb.n_rules, a.size
        c, s, p, w = (np.array(rb.centers), np.array(rb.widths), np.array(rb.hedges), np.array(rb.weights))
        for g, sl in self.slices.items():
            t = theta[sl]
            if g == "c":
                c[:, a] = t.reshape(U, A)
            elif g == "sigma":
                s[:, a] = rb.sigma_min + softplus(t.reshape(U, A))
            elif g == "p":
                p[:, a] = self._hedge_fwd(t.reshape(U, A))
            else:
                w = softplus(t.reshape(w.shape))
        return rb.with_params(centers=c, widths=s, hedges=p, weights=w)

    def chain(self, theta, natural: dict) -> np.ndarray:
        """Pull a natural-parameter gradient back to ``theta`` space."""
        a = self.act
        out = np.empty(self.size)
        for g, sl in self.slices.items():
            t = theta[sl]
            if g == "c":
                out[sl] = natural["c"][:, a].ravel()
            elif g == "sigma":
                out[sl] = natural["sigma"][:, a].ravel() * expit(t)
            elif g == "p":
                if self.cfg.hedge_mode == "constrained01":
                    sg = expit(t)
                    out[sl] = natural["p"][:, a].ravel() * sg * (1.0 - sg)
                else:
                    out[sl] = natural["p"][:, a].ravel() * expit(t)
            else:
                out[sl] = natural["w"].ravel() * expit(t)
        return out


def objective(rb0: RuleBase, X, labels, cfg: TrainConfig):
    """Return (codec, f, grad) for SCG over the unconstrained vector."""
    codec = ParamCodec(rb0, cfg)

    def f(theta):
        return cost(codec.decode(theta), X, labels)

    def grad(theta):
        return codec.chain(theta, cost_grad(codec.decode(theta), X, labels))

    return codec, f, grad


@dataclass
class FitResult:
    rulebase: RuleBase
    history: list  # dicts with iteration, cost, rmse, grad_norm
    scg: Optional[ScgResult] = None

    def write_history(self, path):
        import csv

        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "cost", "rmse", "grad_norm"])
            for h in self.history:
                w.writerow([h["iteration"], repr(h["cost"]), repr(h["rmse"]), repr(h["grad_norm"])])


def fit(ds_train: Dataset, rb0: RuleBase, cfg: TrainConfig = TrainConfig()) -> FitResult:
    """Minimize the classification cost on ``ds_train`` starting from ``rb0``.

    The returned rule base never has a higher training cost than ``rb0``.
    """
    if ds_train.n_samples == 0:
        raise ValueError("empty training set")
    X, y = ds_train.features, ds_train.labels
    K = rb0.n_classes
    E0 = cost(rb0, X, y)
    if cfg.budget.max_iter <= 0:
        return FitResult(rb0, [{"iteration": 0, "cost": E0, "rmse": float(np.sqrt(2 * E0 / K)), "grad_norm": float("nan")}])
    codec, f, grad = objective(rb0, X, y, cfg)
    res = minimize(f, grad, codec.encode(rb0), cfg.budget)
    history = [
        {"iteration": it, "cost": E, "rmse": float(np.sqrt(2.0 * E / K)), "grad_norm": gn}
        for it, E, gn in res.history
    ]
    rb = codec.decode(res.theta)
    if not res.ok:
        raise TrainingError(res.message, partial=rb, result=res)
    if res.fun > E0:
        rb = rb0
    return FitResult(rb, history, res)
