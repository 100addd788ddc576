"""Micro-benchmark of the compiled kernels against the numpy fallback.

Imports both kernel modules directly, so the result is independent of the
CATSDR_BACKEND selection made at package import.
"""

from __future__ import annotations

import timeit

import numpy as np

from . import _kernels_py

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:
    _kernels = None

__all__ = ["run_backend_benchmark"]


def _problem(rng, n=200, p=10, k=2):
    C = rng.standard_normal((n, p))
    labels = rng.integers(0, k + 1, size=n)
    Y = np.zeros((n, k))
    for j in range(k):
        Y[labels == j + 1, j] = 1.0
    w = np.exp(-0.5 * rng.standard_normal(n) ** 2)
    w /= w.sum()
    a = 0.1 * rng.standard_normal(k)
    B = 0.1 * rng.standard_normal((p, k))
    return C, Y, w, a, B


def _time(fn, repeat=5, number=20) -> float:
    # best-of-repeat wall time per call, in microseconds
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number * 1e6


def run_backend_benchmark(seed: int = 0, n: int = 200, p: int = 10):
    """Times the hot kernels on both backends.

    Returns rows (kernel, backend, microseconds_per_call, speedup), where
    speedup is relative to the pure-python timing of the same kernel.
    """
    rng = np.random.default_rng(seed)
    C, Y, w, a, B = _problem(rng, n=n, p=p)
    d = 2
    beta = np.linalg.qr(rng.standard_normal((p, d)))[0]
    W = np.exp(-0.5 * rng.standard_normal((n, n)) ** 2)
    A = 0.1 * rng.standard_normal((n, Y.shape[1]))
    BT = 0.1 * rng.standard_normal((n, d, Y.shape[1]))

    def cases(kernels):
        yield "nll_grad", lambda: kernels.nll_value_grad(C, Y, w, a, B, 0, 1e-8)
        yield "fit_local", lambda: kernels.fit_local(
            C, Y, w, 0, np.zeros(Y.shape[1]), np.zeros((p, Y.shape[1])),
            1e-6, 50, 1e-4, 0.5, 1e-8)
        yield "made_grad", lambda: kernels.made_value_grad(X, Y, W, A, BT, beta, 0)

    X = C
    rows = []
    for kernel, fn in cases(_kernels_py):
        rows.append([kernel, "python", _time(fn), 1.0])
    if _kernels is not None:
        base = {row[0]: row[2] for row in rows}
        for kernel, fn in cases(_kernels):
            us = _time(fn)
            rows.append([kernel, "cython", us, base[kernel] / us])
    return rows
