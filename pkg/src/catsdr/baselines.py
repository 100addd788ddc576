"""Comparison estimators: OPG, pairwise/per-label OPCG reductions, and SIR.

OPG treats the encoded response as a continuous multivariate outcome and
pools local weighted least-squares slopes.  The pairwise and per-label
reductions run binary OPCG subproblems and pool the resulting directions.
SIR slices by class and eigendecomposes the between-slice covariance of
whitened slice means, with optional Tikhonov regularization of the predictor
covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .data import LabeledDataset, StandardizeRecord, standardize
from .errors import EstimationError, ParameterError
from .families import categorical
from .localfit import OptimizerConfig, gaussian_weights
from .opcg import SdrBasis, opcg_fit
from .subspaces import fix_eigenvector_signs, orthonormalize, top_eigenvectors

__all__ = [
    "BaselineSpec",
    "fit_baseline",
    "opg_fit",
    "pw_opcg_fit",
    "pl_opcg_fit",
    "sir_fit",
]


@dataclass(frozen=True)
class BaselineSpec:
    method: str
    d: int
    h: float | None = None
    tikhonov: float = 0.0

    def __post_init__(self):
        if self.method not in ("opg", "pw_opcg", "pl_opcg", "sir"):
            raise ParameterError(f"unknown baseline {self.method!r}")
        if self.method != "sir" and self.h is None:
            raise ParameterError(f"{self.method} requires a bandwidth")
        if self.tikhonov < 0:
            raise ParameterError("tikhonov must be >= 0")


def fit_baseline(spec: BaselineSpec, data: LabeledDataset,
                 config: OptimizerConfig | None = None) -> SdrBasis:
    if spec.method == "opg":
        return opg_fit(data, spec.h, spec.d)
    if spec.method == "pw_opcg":
        return pw_opcg_fit(data, spec.h, spec.d, config=config)
    if spec.method == "pl_opcg":
        return pl_opcg_fit(data, spec.h, spec.d, config=config)
    return sir_fit(data, spec.d, tikhonov=spec.tikhonov)


def opg_fit(data: LabeledDataset, h: float, d: int) -> SdrBasis:
    """Outer product of gradients with the class label as the response.

    The classic mean-regression estimator, kept deliberately naive: the
    integer label is treated as a continuous scalar.  Around each anchor it
    is regressed on the centered predictors by weighted least squares; the
    slope outer products are averaged and eigendecomposed."""
    if not 1 <= d < data.p:
        raise ParameterError(f"d={d} must satisfy 1 <= d < p={data.p}")
    data_std, record = standardize(data)
    X = data_std.X
    Y = data_std.labels.astype(float)[:, None]
    n, p = X.shape
    lam = np.zeros((p, p))
    diagnostics = ()
    for j in range(n):
        w = gaussian_weights(X, j, h).w
        C = X - X[j]
        Z = np.concatenate([np.ones((n, 1)), C], axis=1)
        Zw = Z * w[:, None]
        G = Z.T @ Zw
        rhs = Zw.T @ Y
        try:
            coef = np.linalg.solve(G, rhs)
        except np.linalg.LinAlgError:
            coef = None
        if coef is None or not np.isfinite(coef).all():
            G[np.diag_indices_from(G)] += 1e-10 * (1.0 + np.trace(G) / (p + 1))
            coef = np.linalg.solve(G, rhs)
            diagnostics = ("ridge-damped weighted design",)
        B = coef[1:]
        lam += B @ B.T
    lam /= n
    evals, basis_std = top_eigenvectors((lam + lam.T) / 2.0, d)
    return SdrBasis(
        basis=record.basis_to_original(basis_std),
        basis_std=basis_std,
        eigenvalues=evals,
        d=d,
        record=record,
        diagnostics=diagnostics,
    )


def _binary_subproblem(data: LabeledDataset, mask: np.ndarray, positive: int):
    labels = np.where(data.labels[mask] == positive, 1, 2)
    return LabeledDataset(X=data.X[mask], labels=labels, family=categorical(2))


def _pooled_directions(data, subproblems, h, d, config):
    """Run binary OPCG per subproblem and pool eigenvalue-weighted direction
    outer products in original coordinates.

    The weights matter: a binary subproblem that identifies fewer than d
    directions pads its basis with near-noise eigenvectors, and pooling
    those at full weight swamps the shared signal.
    """
    p = data.p
    pooled = np.zeros((p, p))
    count = 0
    diagnostics = []
    for name, mask, positive in subproblems:
        if mask.sum() < 2 * (d + 1):
            diagnostics.append(f"{name} skipped: {int(mask.sum())} observations")
            continue
        sub = _binary_subproblem(data, mask, positive)
        try:
            fit = opcg_fit(sub, h, d, config=config)
        except EstimationError as exc:
            diagnostics.append(f"{name} failed: {exc}")
            continue
        pooled += fit.basis @ np.diag(fit.eigenvalues[:d]) @ fit.basis.T
        count += 1
    if count == 0:
        raise EstimationError("no usable binary subproblem")
    evals, basis = top_eigenvectors(pooled / count, d)
    return SdrBasis(
        basis=basis,
        basis_std=basis,
        eigenvalues=evals,
        d=d,
        record=StandardizeRecord(mean=np.zeros(p), scale=np.ones(p)),
        diagnostics=tuple(diagnostics) + (f"{count} pooled subproblems",),
    )


def pw_opcg_fit(data: LabeledDataset, h: float, d: int,
                config: OptimizerConfig | None = None) -> SdrBasis:
    """Pairwise reduction: binary OPCG per unordered class pair, directions
    pooled, top-d eigenvectors."""
    if data.m == 2:
        return opcg_fit(data, h, d, config=config)
    subproblems = []
    for l1, l2 in combinations(range(1, data.m + 1), 2):
        mask = (data.labels == l1) | (data.labels == l2)
        subproblems.append((f"pair ({l1},{l2})", mask, l1))
    return _pooled_directions(data, subproblems, h, d, config)


def pl_opcg_fit(data: LabeledDataset, h: float, d: int,
                config: OptimizerConfig | None = None) -> SdrBasis:
    """Per-label reduction: binary one-vs-rest OPCG per class, directions
    pooled, top-d eigenvectors."""
    full = np.ones(data.n, dtype=bool)
    subproblems = [
        (f"class {l} vs rest", full, l) for l in range(1, data.m + 1)
    ]
    return _pooled_directions(data, subproblems, h, d, config)


def sir_fit(data: LabeledDataset, d: int, tikhonov: float = 0.0) -> SdrBasis:
    """Sliced inverse regression with classes as slices."""
    if not 1 <= d <= data.m - 1:
        raise ParameterError(
            f"SIR can recover at most m-1={data.m - 1} directions, got d={d}"
        )
    if tikhonov < 0:
        raise ParameterError("tikhonov must be >= 0")
    X = data.X
    n, p = X.shape
    mu = X.mean(axis=0)
    sigma = np.cov(X, rowvar=False, ddof=1) + tikhonov * np.eye(p)
    svals, svecs = np.linalg.eigh(sigma)
    if svals.min() <= 0:
        raise EstimationError(
            "predictor covariance is singular; increase tikhonov"
        )
    whiten = svecs @ np.diag(svals**-0.5) @ svecs.T
    Z = (X - mu) @ whiten
    M = np.zeros((p, p))
    for label in range(1, data.m + 1):
        rows = Z[data.labels == label]
        pi = rows.shape[0] / n
        zbar = rows.mean(axis=0)
        M += pi * np.outer(zbar, zbar)
    evals, evecs = top_eigenvectors(M, d)
    basis = fix_eigenvector_signs(orthonormalize(whiten @ evecs))
    return SdrBasis(
        basis=basis,
        basis_std=basis,
        eigenvalues=evals,
        d=d,
        record=StandardizeRecord(mean=np.zeros(p), scale=np.ones(p)),
        diagnostics=("slices = classes",),
    )
