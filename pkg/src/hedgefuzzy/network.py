"""Hedged zero-order Sugeno fuzzy classifier: forward pass and rule I/O.

Layer summary for sample s, rule i, feature j and class k::

    mu    = exp(-0.5 (x_sj - c_ij)^2 / sigma_ij^2)      Gaussian membership
    alpha = mu ** p_ij                                  linguistic hedge
    beta  = prod_j alpha                                firing strength
    O     = sum_i beta_si w_ik                          weighted class output
    h     = O / sum_k O                                 normalized class degree
    class = argmax_k h                                  (1-based, lowest id wins ties)
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

SIGMA_MIN = 1e-3
DELTA_EPS = 1e-12
FORMAT_HEADER = "hedgefuzzy-rulebase 1"


@dataclass(frozen=True)
class RuleBase:
    centers: np.ndarray  # U x D
    widths: np.ndarray  # U x D
    hedges: np.ndarray  # U x D
    weights: np.ndarray  # U x K
    feature_mask: Optional[np.ndarray] = None  # bool, D; None means all active
    rule_class: Optional[np.ndarray] = None  # 1-based class hint per rule
    sigma_min: float = SIGMA_MIN

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        U, D = c.shape
        arrays = {"centers": c}
        for name in ("widths", "hedges"):
            a = np.array(getattr(self, name), dtype=float)
            if a.shape != (U, D):
                raise ValueError(f"{name} must have shape {(U, D)}, got {a.shape}")
            arrays[name] = a
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != U:
            raise ValueError("weights must be U x K")
        arrays["weights"] = w
        mask = np.ones(D, dtype=bool) if self.feature_mask is None else np.array(self.feature_mask, dtype=bool)
        if mask.shape != (D,):
            raise ValueError("feature_mask must have one entry per feature")
        arrays["feature_mask"] = mask
        if self.rule_class is not None:
            rc = np.array(self.rule_class, dtype=int)
            if rc.shape != (U,):
                raise ValueError("rule_class must have one entry per rule")
            arrays["rule_class"] = rc
        if np.any(arrays["hedges"] < 0):
            raise ValueError("hedges must be non-negative")
        if np.any(w < 0):
            raise ValueError("class weights must be non-negative")
        for name, a in arrays.items():
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def n_rules(self) -> int:
        return self.centers.shape[0]

    @property
    def n_features(self) -> int:
        return self.centers.shape[1]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.feature_mask)

    def with_params(self, **changes) -> "RuleBase":
        return replace(self, **changes)

    def rule_classes(self) -> np.ndarray:
        """Class hint per rule, falling back to the heaviest weight."""
        if self.rule_class is not None:
            return self.rule_class
        return np.argmax(self.weights, axis=1) + 1


@dataclass
class ForwardTrace:
    mu: np.ndarray  # N x U x D
    alpha: np.ndarray  # N x U x D (1 on inactive features)
    beta: np.ndarray  # N x U
    O: np.ndarray  # N x K
    h: np.ndarray  # N x K
    predicted: np.ndarray  # N, 1-based
    log_mu: np.ndarray  # N x U x D
    log_beta: np.ndarray  # N x U
    scaled_beta: np.ndarray  # beta / max_i beta, per sample
    scaled_delta: np.ndarray  # N
    dead: np.ndarray  # bool N, normalizer fell below DELTA_EPS
    diagnostics: dict = field(default_factory=dict)


def membership(x, c, sigma, sigma_min: float = SIGMA_MIN):
    """Gaussian membership grade; widths below ``sigma_min`` are clamped."""
    sigma = np.maximum(sigma, sigma_min)
    z = (np.asarray(x, dtype=float) - c) / sigma
    return np.exp(-0.5 * z * z)


def hedge_apply(mu, p):
    """Raise membership grades to the hedge power (0 ** 0 is taken as 1)."""
    mu = np.asarray(mu, dtype=float)
    if np.any((mu < 0) | (mu > 1)):
        raise ValueError("membership grade must lie in [0, 1]")
    if np.any(np.asarray(p) < 0):
        raise ValueError("hedge must be non-negative")
    return np.power(mu, p)


def forward(rb: RuleBase, X) -> ForwardTrace:
    """Evaluate the network on every row of ``X`` (N x D, all D columns)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != rb.n_features:
        raise ValueError(f"expected {rb.n_features} feature columns, got shape {X.shape}")
    sigma = np.maximum(rb.widths, rb.sigma_min)
    clamped = int(np.count_nonzero(rb.widths < rb.sigma_min))
    z = (X[:, None, :] - rb.centers[None, :, :]) / sigma[None, :, :]
    log_mu = -0.5 * z * z
    p_eff = np.where(rb.feature_mask, rb.hedges, 0.0)
    # 0 * (-inf) cannot occur: log_mu is finite for finite inputs
    log_alpha = p_eff[None, :, :] * log_mu
    log_beta = log_alpha.sum(axis=2)
    beta = np.exp(log_beta)
    shift = log_beta.max(axis=1, keepdims=True)
    scaled_beta = np.exp(log_beta - shift)
    scaled_O = scaled_beta @ rb.weights
    scaled_delta = scaled_O.sum(axis=1)
    dead = scaled_delta < DELTA_EPS
    K = rb.n_classes
    h = np.empty_like(scaled_O)
    live = ~dead
    h[live] = scaled_O[live] / scaled_delta[live, None]
    h[dead] = 1.0 / K
    predicted = np.argmax(h, axis=1) + 1
    return ForwardTrace(
        mu=np.exp(log_mu),
        alpha=np.exp(log_alpha),
        beta=beta,
        O=beta @ rb.weights,
        h=h,
        predicted=predicted,
        log_mu=log_mu,
        log_beta=log_beta,
        scaled_beta=scaled_beta,
        scaled_delta=scaled_delta,
        dead=dead,
        diagnostics={"clamped_widths": clamped, "dead_samples": int(dead.sum())},
    )


def predict(rb: RuleBase, X) -> np.ndarray:
    return forward(rb, X).predicted


# -- serialization -------------------------------------------------------------


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def dumps_rulebase(rb: RuleBase) -> str:
    """Lossless plain-text rendering (shortest round-trip float repr)."""
    lines = [
        FORMAT_HEADER,
        f"rules {rb.n_rules}",
        f"features {rb.n_features}",
        f"classes {rb.n_classes}",
        f"sigma_min {rb.sigma_min!r}",
        "feature_mask " + " ".join(str(j + 1) for j in rb.active),
    ]
    rc = rb.rule_class
    for i in range(rb.n_rules):
        hint = "-" if rc is None else str(int(rc[i]))
        lines.append(f"rule {i + 1} class {hint}")
        lines.append("c " + _fmt(rb.centers[i]))
        lines.append("sigma " + _fmt(rb.widths[i]))
        lines.append("p " + _fmt(rb.hedges[i]))
        lines.append("w " + _fmt(rb.weights[i]))
    return "\n".join(lines) + "\n"


def loads_rulebase(text: str) -> RuleBase:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError("not a hedgefuzzy rule base (bad header)")
    head = {}
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("rule "):
        key, _, rest = lines[pos].partition(" ")
        head[key] = rest
        pos += 1
    try:
        U, D, K = int(head["rules"]), int(head["features"]), int(head["classes"])
        mask = np.zeros(D, dtype=bool)
        mask[[int(t) - 1 for t in head.get("feature_mask", "").split()]] = True
        c, s, p, w, hints = [], [], [], [], []
        for _ in range(U):
            parts = lines[pos].split()
            hints.append(None if parts[3] == "-" else int(parts[3]))
            rows = {}
            for off in range(1, 5):
                key, *vals = lines[pos + off].split()
                rows[key] = [float(v) for v in vals]
            c.append(rows["c"])
            s.append(rows["sigma"])
            p.append(rows["p"])
            w.append(rows["w"])
            pos += 5
    except (KeyError, IndexError, ValueError) as exc:
        raise ValueError(f"malformed rule base: {exc}") from None
    rule_class = None if any(h is None for h in hints) else np.array(hints)
    rb = RuleBase(
        np.array(c).reshape(U, D),
        np.array(s).reshape(U, D),
        np.array(p).reshape(U, D),
        np.array(w).reshape(U, K),
        feature_mask=mask,
        rule_class=rule_class,
        sigma_min=float(head.get("sigma_min", SIGMA_MIN)),
    )
    return rb


def format_rules(
    rb: RuleBase,
    feature_names: Optional[Sequence[str]] = None,
    class_names: Optional[Sequence[str]] = None,
    digits: int = 4,
) -> str:
    """Render each rule as an ``IF ... THEN class is ...`` sentence."""
    fnames = list(feature_names or [f"Feature {j + 1}" for j in range(rb.n_features)])
    cnames = list(class_names or [f"Class-{k + 1}" for k in range(rb.n_classes)])
    classes = rb.rule_classes()
    blocks = []
    for i in range(rb.n_rules):
        terms = [
            f"{fnames[j]} is A_{i + 1}{j + 1} with p_{i + 1}{j + 1} = {rb.hedges[i, j]:.{digits}g}"
            for j in rb.active
        ]
        blocks.append(f"R{i + 1}: IF " + " AND ".join(terms) + f" THEN class is {cnames[classes[i] - 1]}")
    return "\n".join(blocks) + "\n"
