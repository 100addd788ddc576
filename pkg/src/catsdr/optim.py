"""Hybrid conjugate gradient minimizer with Armijo backtracking.

The search direction mixes the Hestenes-Stiefel and Dai-Yuan conjugacy
parameters, beta = max(0, min(beta_HS, beta_DY)), which guarantees descent
directions under a simple backtracking line search.  Directions reset to
steepest descent whenever the descent test or the line search fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError

__all__ = ["CgResult", "minimize_cg"]

_MIN_STEP = 1e-20


@dataclass
class CgResult:
    x: np.ndarray
    value: float
    grad: np.ndarray
    iterations: int
    converged: bool
    trace: list | None = None


def minimize_cg(
    value_and_grad,
    x0: np.ndarray,
    *,
    grad_tol: float,
    max_iters: int,
    armijo_c: float = 1e-4,
    backtrack_factor: float = 0.5,
    value=None,
    keep_trace: bool = False,
) -> CgResult:
    """Minimize a smooth function of a flat parameter vector.

    value_and_grad(x) -> (f, g); value(x) -> f is an optional cheaper
    objective-only callable used inside the line search.
    """
    x = np.array(x0, dtype=float, copy=True)
    f, g = value_and_grad(x)
    if not np.isfinite(f):
        raise EstimationError("objective is non-finite at the starting point")
    if value is None:
        value = lambda z: value_and_grad(z)[0]
    trace = [f] if keep_trace else None

    d = -g
    steepest = True
    iters = 0
    gnorm = float(np.linalg.norm(g))
    while gnorm > grad_tol and iters < max_iters:
        gd = float(g @ d)
        if gd >= 0.0:
            d = -g
            steepest = True
            gd = -gnorm * gnorm
            if gd == 0.0:
                break
        step = 1.0
        accepted = False
        while step >= _MIN_STEP:
            f_trial = value(x + step * d)
            if f_trial <= f + armijo_c * step * gd:
                accepted = True
                break
            step *= backtrack_factor
        if not accepted:
            if steepest:
                break
            d = -g
            steepest = True
            iters += 1
            continue
        x = x + step * d
        f_new, g_new = value_and_grad(x)
        y = g_new - g
        denom = float(d @ y)
        if denom > 0.0:
            beta_hs = float(g_new @ y) / denom
            beta_dy = float(g_new @ g_new) / denom
            beta = max(0.0, min(beta_hs, beta_dy))
        else:
            beta = 0.0
        d = -g_new + beta * d
        steepest = beta == 0.0
        f, g = f_new, g_new
        gnorm = float(np.linalg.norm(g))
        iters += 1
        if keep_trace:
            trace.append(f)

    if not np.isfinite(f) or not np.isfinite(x).all():
        raise EstimationError("optimizer diverged to non-finite values")
    return CgResult(
        x=x,
        value=float(f),
        grad=g,
        iterations=iters,
        converged=gnorm <= grad_tol,
        trace=trace,
    )
