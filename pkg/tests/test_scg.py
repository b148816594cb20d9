import numpy as np
import pytest
from scipy.optimize import minimize as sp_minimize, rosen, rosen_der

from hedgefuzzy.scg import Budget, grad_check, minimize


def test_quadratic_bowl():
    f = lambda t: float(t @ t)
    g = lambda t: 2 * t
    res = minimize(f, g, np.array([3.0, -4.0, 1.5]), Budget(max_iter=50))
    assert np.linalg.norm(res.theta) < 1e-6
    assert res.iterations <= 50


def test_rosenbrock():
    res = minimize(rosen, rosen_der, np.array([-1.2, 1.0]), Budget(max_iter=500, grad_tol=1e-9, obj_tol=0))
    assert res.fun < 1e-6
    np.testing.assert_allclose(res.theta, [1.0, 1.0], atol=1e-3)
    # reference run from an unrelated quasi-Newton method
    ref = sp_minimize(rosen, [-1.2, 1.0], jac=rosen_der, method="BFGS", options={"maxiter": 10000, "gtol": 1e-10})
    np.testing.assert_allclose(res.theta, ref.x, atol=1e-3)


def test_accepted_objective_monotone():
    res = minimize(rosen, rosen_der, np.array([-1.2, 1.0]))
    obj = res.objectives
    assert np.all(np.diff(obj) <= 0)


def test_zero_budget():
    res = minimize(rosen, rosen_der, np.array([-1.2, 1.0]), Budget(max_iter=0))
    assert res.status == "max_iter"
    assert res.theta.tolist() == [-1.2, 1.0]


def test_nonfinite_aborts():
    f = lambda t: float("nan") if t[0] > 0.5 else float(t @ t)
    g = lambda t: -np.ones_like(t) * 10
    res = minimize(f, g, np.zeros(2))
    assert res.status == "nonfinite" and not res.ok
    assert np.all(np.isfinite(res.theta))


def test_bad_gradient_flagged():
    f = lambda t: float(t @ t)
    wrong = lambda t: 3 * t
    res = minimize(f, wrong, np.array([1.0, 2.0]), check_grad=True)
    assert res.grad_check_failed
    ok = minimize(f, lambda t: 2 * t, np.array([1.0, 2.0]), check_grad=True)
    assert not ok.grad_check_failed


def test_grad_check_quadratic_exact():
    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    f = lambda t: float(0.5 * t @ A @ t)
    g = lambda t: A @ t
    assert grad_check(f, g, np.array([0.7, -1.3]), h=1e-5) < 1e-8


def test_grad_check_step_must_be_positive():
    with pytest.raises(ValueError):
        grad_check(lambda t: 0.0, lambda t: t, np.zeros(1), h=0)


def test_callback_and_history(tmp_path):
    seen = []
    res = minimize(rosen, rosen_der, np.array([0.0, 0.0]), Budget(max_iter=20), callback=lambda i, t, f: seen.append(i))
    assert seen == [h[0] for h in res.history[1:]]
    out = res.write_history(tmp_path / "h.csv")
    assert out.read_text().splitlines()[0] == "iteration,objective,grad_norm"
