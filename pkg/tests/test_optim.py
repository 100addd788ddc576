"""Conjugate-gradient minimizer tests on analytic problems."""

import numpy as np
import pytest

from catsdr.errors import EstimationError
from catsdr.optim import minimize_cg


def _quadratic(A, b):
    def vg(x):
        g = A @ x - b
        return 0.5 * x @ A @ x - b @ x, g

    return vg


def test_quadratic_exact_minimum():
    rng = np.random.default_rng(0)
    M = rng.standard_normal((6, 6))
    A = M @ M.T + 6 * np.eye(6)
    b = rng.standard_normal(6)
    res = minimize_cg(_quadratic(A, b), np.zeros(6), grad_tol=1e-7, max_iters=500)
    assert res.converged
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), atol=1e-7)


def test_rosenbrock():
    def vg(x):
        a, b = 1.0, 100.0
        f = (a - x[0]) ** 2 + b * (x[1] - x[0] ** 2) ** 2
        g = np.array(
            [
                -2 * (a - x[0]) - 4 * b * x[0] * (x[1] - x[0] ** 2),
                2 * b * (x[1] - x[0] ** 2),
            ]
        )
        return f, g

    res = minimize_cg(vg, np.array([-1.2, 1.0]), grad_tol=1e-8, max_iters=20000)
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-5)


def test_monotone_trace():
    rng = np.random.default_rng(3)
    A = np.diag(np.linspace(1, 40, 5))
    b = rng.standard_normal(5)
    res = minimize_cg(
        _quadratic(A, b), np.ones(5), grad_tol=1e-12, max_iters=200, keep_trace=True
    )
    trace = np.array(res.trace)
    assert np.all(np.diff(trace) <= 0)
    assert trace[0] > trace[-1]


def test_unconverged_flag():
    A = np.diag([1.0, 1e4])
    res = minimize_cg(
        _quadratic(A, np.array([1.0, 1.0])), np.zeros(2), grad_tol=1e-14, max_iters=2
    )
    assert not res.converged
    assert res.iterations == 2


def test_nonfinite_start_raises():
    def vg(x):
        return float("nan"), x

    with pytest.raises(EstimationError):
        minimize_cg(vg, np.zeros(2), grad_tol=1e-6, max_iters=10)


def test_already_at_minimum():
    A = np.eye(3)
    b = np.zeros(3)
    res = minimize_cg(_quadratic(A, b), np.zeros(3), grad_tol=1e-8, max_iters=50)
    assert res.converged
    assert res.iterations == 0


def test_separate_value_callable_used():
    calls = {"vg": 0, "v": 0}

    def vg(x):
        calls["vg"] += 1
        return float(x @ x), 2 * x

    def v(x):
        calls["v"] += 1
        return float(x @ x)

    minimize_cg(vg, np.full(3, 2.0), grad_tol=1e-8, max_iters=100, value=v)
    assert calls["v"] > 0
