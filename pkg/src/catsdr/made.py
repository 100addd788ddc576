"""Minimum average deviance estimation by alternating minimization.

The local slope matrices are re-parametrised as B_j = beta Btilde_j with a
shared p x d frame beta; the stacked kernel-weighted negative log-likelihood
is minimized by alternating (i) local GLM fits on the projected predictors
with beta fixed and (ii) a conjugate-gradient update of beta with the locals
fixed.  beta is orthonormalized after every update, compensating the locals
by the triangular factor so the objective is unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .data import LabeledDataset, StandardizeRecord, standardize
from .errors import ParameterError
from .localfit import KernelWeights, OptimizerConfig, fit_local, gaussian_weights
from .optim import minimize_cg
from .subspaces import orthonormalize, projection_distance

__all__ = ["MadeState", "made_objective", "made_fit"]

OUTER_TOL = 1e-4

# Successive-basis distance below which the refined variant switches the
# kernel weights to the current projected differences.
REFINE_START = 0.1


@dataclass
class MadeState:
    """Fitted frame (original and standardized coordinates), per-anchor
    locals on the projected predictors, and convergence bookkeeping."""

    beta: np.ndarray
    beta_std: np.ndarray
    local: list
    objective: float
    objective_trace: list
    outer_iterations: int
    converged: bool
    record: StandardizeRecord
    d: int
    diagnostics: tuple = ()

    @property
    def basis(self) -> np.ndarray:
        return self.beta

    @property
    def basis_std(self) -> np.ndarray:
        return self.beta_std


def _weight_matrix(X: np.ndarray, h: float, direction=None) -> np.ndarray:
    n = X.shape[0]
    W = np.empty((n, n))
    for j in range(n):
        W[:, j] = gaussian_weights(X, j, h, direction=direction).w
    return W


def _stack_locals(fits, d, k):
    n = len(fits)
    A = np.empty((n, k))
    BT = np.empty((n, d, k))
    for j, fit in enumerate(fits):
        A[j] = fit.intercept
        BT[j] = fit.slopes
    return A, BT


def _stacked_value(X, Y, W, A, BT, beta, code) -> float:
    return float(
        kernels.made_value(
            np.ascontiguousarray(X),
            np.ascontiguousarray(Y),
            np.ascontiguousarray(W),
            np.ascontiguousarray(A),
            np.ascontiguousarray(BT),
            np.ascontiguousarray(beta),
            code,
        )
    )


def made_objective(state: MadeState, data: LabeledDataset, h: float) -> float:
    """Stacked weighted negative log-likelihood of a fitted state on data,
    with kernel weights rebuilt from the standardized predictors."""
    data_std = state.record.transform(data.X)
    W = _weight_matrix(data_std, h)
    Y = data.encoded()
    k = data.family.n_coords
    A, BT = _stack_locals(state.local, state.d, k)
    code = int(data.family.is_ordinal)
    return _stacked_value(data_std, Y, W, A, BT, state.beta_std, code)


def _resolve_beta0(init, p, d, record):
    if init is None:
        beta = np.zeros((p, d))
        beta[:d, :d] = np.eye(d)
        return beta
    basis_std = getattr(init, "basis_std", None)
    if basis_std is not None:
        beta = np.asarray(basis_std, dtype=float)
    else:
        beta = np.asarray(init, dtype=float)
    if beta.shape != (p, d):
        raise ParameterError(f"init basis must be {p} x {d}, got {beta.shape}")
    if basis_std is None:
        # array input is an original-coordinate basis; a direction v on the
        # original scale acts on standardized coordinates through scale * v
        beta = beta * record.scale[:, None]
    return orthonormalize(beta)


def made_fit(
    data: LabeledDataset,
    h: float,
    d: int,
    init=None,
    config: OptimizerConfig | None = None,
    max_outer: int = 100,
    beta_max_iters: int = 50,
    refine: bool = False,
) -> MadeState:
    """Alternating estimation of the shared frame.

    init: None for the first d coordinate directions, an SdrBasis, or a
    p x d array of original-coordinate directions.  refine=True switches the
    kernel weights to the projected differences once successive frames agree
    to REFINE_START.  Unconverged runs return converged=False rather than
    raising.
    """
    if not 1 <= d < data.p:
        raise ParameterError(f"d={d} must satisfy 1 <= d < p={data.p}")
    if not h > 0:
        raise ParameterError(f"bandwidth must be positive, got {h}")
    if max_outer < 1:
        raise ParameterError(f"max_outer={max_outer} must be >= 1")
    config = config or OptimizerConfig()
    data_std, record = standardize(data)
    X = data_std.X
    Y = np.ascontiguousarray(data_std.encoded())
    n, p = X.shape
    k = data.family.n_coords
    code = int(data.family.is_ordinal)
    beta = _resolve_beta0(init, p, d, record)

    W = _weight_matrix(X, h)
    grad_tol_beta = config.grad_tol * np.sqrt(p * d)
    fits = [None] * n
    trace = []
    refining = False
    diagnostics = ()
    outer = 0
    converged = False
    for outer in range(1, max_outer + 1):
        # (i) local half-step on the projected predictors
        U = X @ beta
        proj = LabeledDataset(X=U, labels=data_std.labels, family=data.family)
        for j in range(n):
            wj = KernelWeights(w=W[:, j], h=h)
            fits[j] = fit_local(j, wj, proj, config, init=fits[j])
        A, BT = _stack_locals(fits, d, k)
        trace.append(_stacked_value(X, Y, W, A, BT, beta, code))

        # (ii) frame half-step: conjugate gradient on the stacked likelihood
        Xc = np.ascontiguousarray(X)
        Wc = np.ascontiguousarray(W)
        Ac = np.ascontiguousarray(A)
        BTc = np.ascontiguousarray(BT)

        def value_grad(x):
            f, G = kernels.made_value_grad(
                Xc, Y, Wc, Ac, BTc, np.ascontiguousarray(x.reshape(p, d)), code
            )
            return f, np.asarray(G).ravel()

        def value(x):
            return _stacked_value(Xc, Y, Wc, Ac, BTc, x.reshape(p, d), code)

        res = minimize_cg(
            value_grad,
            beta.ravel(),
            grad_tol=grad_tol_beta,
            max_iters=beta_max_iters,
            armijo_c=config.armijo_c,
            backtrack_factor=config.backtrack_factor,
            value=value,
        )
        beta_raw = res.x.reshape(p, d)
        # orthonormalize and push the triangular factor into the locals so
        # the objective value is unchanged by the re-parametrisation
        Q, R = np.linalg.qr(beta_raw)
        signs = np.sign(np.diag(R))
        signs[signs == 0] = 1.0
        beta_new = Q * signs
        Rs = signs[:, None] * R
        for j in range(n):
            fits[j].slopes = Rs @ fits[j].slopes
        A, BT = _stack_locals(fits, d, k)
        trace.append(_stacked_value(X, Y, W, A, BT, beta_new, code))

        moved = projection_distance(beta_new, beta)
        beta = beta_new
        if refine and not refining and moved < REFINE_START:
            refining = True
            diagnostics = diagnostics + ("refined weights enabled",)
        if refining:
            W = _weight_matrix(X, h, direction=beta)
        if moved < OUTER_TOL:
            converged = True
            break

    return MadeState(
        beta=record.basis_to_original(beta),
        beta_std=beta,
        local=list(fits),
        objective=trace[-1],
        objective_trace=trace,
        outer_iterations=outer,
        converged=converged,
        record=record,
        d=d,
        diagnostics=diagnostics,
    )
