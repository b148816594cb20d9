"""Scaled conjugate gradient minimization (Moller, 1993).

SCG replaces the line search of classic conjugate gradient by a
Levenberg-Marquardt style scale ``lam`` on a finite-difference estimate of
the curvature along the search direction. Steps that do not reduce the
objective are rejected, so the sequence of accepted objective values is
non-increasing.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

log = logging.getLogger(__name__)

LAMBDA_INIT = 1e-6
SIGMA0 = 1e-4
LAMBDA_MIN = 1e-15
LAMBDA_MAX = 1e100


@dataclass(frozen=True)
class Budget:
    max_iter: int = 500
    grad_tol: float = 1e-6
    obj_tol: float = 1e-10


@dataclass
class ScgResult:
    theta: np.ndarray
    fun: float
    status: str  # "grad_tol" | "obj_tol" | "max_iter" | "nonfinite"
    iterations: int
    history: list = field(default_factory=list)  # (iteration, objective, grad_norm) per accepted point
    message: str = ""
    grad_check_error: Optional[float] = None
    grad_check_failed: bool = False

    @property
    def ok(self) -> bool:
        return self.status != "nonfinite"

    @property
    def objectives(self) -> np.ndarray:
        return np.array([h[1] for h in self.history])

    def write_history(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective", "grad_norm"])
            for it, f, g in self.history:
                w.writerow([it, repr(float(f)), repr(float(g))])
        return path


def grad_check(f: Callable, grad: Callable, theta, h: float = 1e-5, floor: float = 1e-6) -> float:
    """Max relative error between ``grad`` and central differences of ``f``.

    Relative error per coordinate is |a - n| / max(|a|, |n|, floor).
    """
    if not h > 0:
        raise ValueError("step h must be positive")
    theta = np.array(theta, dtype=float)
    analytic = np.asarray(grad(theta), dtype=float)
    numeric = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        numeric[i] = (f(theta + e) - f(theta - e)) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom)) if theta.size else 0.0


def minimize(
    f: Callable,
    grad: Callable,
    theta0,
    budget: Budget = Budget(),
    callback: Optional[Callable] = None,
    check_grad: bool = False,
    check_tol: float = 1e-4,
) -> ScgResult:
    """Minimize ``f`` from ``theta0``.

    ``callback(iteration, theta, fun)`` is called after every accepted step.
    With ``check_grad`` the gradient is compared with finite differences at
    ``theta0`` first and ``grad_check_failed`` is set on mismatch.
    """
    x = np.array(theta0, dtype=float)
    n = x.size
    chk_err, chk_fail = None, False
    if check_grad:
        chk_err = grad_check(f, grad, x)
        chk_fail = not chk_err < check_tol
        if chk_fail:
            log.warning("gradient check failed: max relative error %.3g", chk_err)

    def result(status, fun, it, msg=""):
        return ScgResult(x, fun, status, it, history, msg, chk_err, chk_fail)

    history = []
    fold = float(f(x))
    g = np.asarray(grad(x), dtype=float)
    if not (np.isfinite(fold) and np.all(np.isfinite(g))):
        return result("nonfinite", fold, 0, "objective or gradient not finite at start")
    history.append((0, fold, float(np.linalg.norm(g))))
    if budget.max_iter <= 0 or n == 0:
        return result("max_iter", fold, 0)
    if np.linalg.norm(g) < budget.grad_tol:
        return result("grad_tol", fold, 0)

    d = -g
    lam = LAMBDA_INIT
    success = True
    nsuccess = 0
    mu = kappa = gamma = 0.0
    for it in range(1, budget.max_iter + 1):
        if success:
            mu = float(d @ g)
            if mu >= 0:
                d = -g
                mu = float(d @ g)
            kappa = float(d @ d)
            if kappa < np.finfo(float).eps:
                # conjugate direction collapsed; fall back to steepest descent
                d = -g
                mu = float(d @ g)
                kappa = float(d @ d)
                if kappa < np.finfo(float).eps:
                    return result("grad_tol", fold, it - 1)
            sigma = SIGMA0 / np.sqrt(kappa)
            g_plus = np.asarray(grad(x + sigma * d), dtype=float)
            gamma = float(d @ (g_plus - g)) / sigma
        # scaled curvature; force it positive when the Hessian is indefinite
        delta = gamma + lam * kappa
        if delta <= 0:
            delta = lam * kappa
            lam = lam - gamma / kappa
        alpha = -mu / delta
        x_new = x + alpha * d
        f_new = float(f(x_new))
        if not np.isfinite(f_new):
            return result("nonfinite", fold, it, f"objective not finite at iteration {it}")
        comparison = 2.0 * (f_new - fold) / (alpha * mu)
        if comparison >= 0:
            success = True
            nsuccess += 1
            f_prev, x = fold, x_new
            fold = f_new
            g_old = g
            g = np.asarray(grad(x), dtype=float)
            if not np.all(np.isfinite(g)):
                return result("nonfinite", fold, it, f"gradient not finite at iteration {it}")
            gnorm = float(np.linalg.norm(g))
            history.append((it, fold, gnorm))
            if callback is not None:
                callback(it, x, fold)
            if gnorm < budget.grad_tol:
                return result("grad_tol", fold, it)
            if abs(f_prev - fold) < budget.obj_tol:
                return result("obj_tol", fold, it)
        else:
            success = False
        if comparison < 0.25:
            lam = min(4.0 * lam, LAMBDA_MAX)
        elif comparison > 0.75:
            lam = max(0.5 * lam, LAMBDA_MIN)
        if nsuccess == n:
            d = -g
            nsuccess = 0
        elif success:
            beta = float((g_old - g) @ g) / mu
            d = beta * d - g
    return result("max_iter", fold, budget.max_iter)
