"""Outer product of canonical gradients: candidate matrix and SDR basis.

Predictors are standardized, a local GLM is fit around every anchor, and the
slope matrices are pooled into the candidate matrix mean(B_j B_j'); its top-d
eigenvectors span the estimated subspace.  An optional refinement recomputes
kernel weights on the current projected differences and iterates.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, StandardizeRecord, standardize
from .errors import EstimationError, ParameterError
from .families import alt_link_transform
from .localfit import LocalFit, OptimizerConfig, fit_local, gaussian_weights
from .subspaces import projection_distance, top_eigenvectors

__all__ = [
    "CandidateMatrix",
    "SdrBasis",
    "canonical_gradients",
    "assemble_lambda",
    "opcg_fit",
]

# Fraction of flagged local fits above which the candidate matrix carries a
# warning diagnostic.
_FLAG_WARN_FRACTION = 0.20

REFINE_TOL = 1e-4


@dataclass(frozen=True)
class CandidateMatrix:
    """Pooled outer product of local gradients and its bookkeeping."""

    matrix: np.ndarray
    n_effective: int
    diagnostics: tuple = ()


@dataclass(frozen=True)
class SdrBasis:
    """Estimated SDR basis in original and standardized coordinates."""

    basis: np.ndarray
    basis_std: np.ndarray
    eigenvalues: np.ndarray
    d: int
    record: StandardizeRecord
    diagnostics: tuple = ()


def canonical_gradients(
    data: LabeledDataset,
    h: float,
    config: OptimizerConfig | None = None,
    direction: np.ndarray | None = None,
    inits=None,
    threads: int = 1,
) -> list:
    """One local GLM fit per anchor.

    direction switches to refined weights on the projected differences;
    inits optionally warm-starts each anchor (the ridged objective is
    strictly convex, so results do not depend on the starting point beyond
    the gradient tolerance).  Fits are independent, so the thread count
    never changes the result.
    """
    config = config or OptimizerConfig()

    def one(j: int) -> LocalFit:
        w = gaussian_weights(data.X, j, h, direction=direction)
        init = None if inits is None else inits[j]
        return fit_local(j, w, data, config, init=init)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(data.n)))
    return [one(j) for j in range(data.n)]


def assemble_lambda(fits, psi: str | None = None) -> CandidateMatrix:
    """Average B_j B_j' over unflagged fits; with an alternative link psi the
    slopes are first mapped through the link's Jacobian at a_j."""
    fits = list(fits)
    if not fits:
        raise ParameterError("no local fits supplied")
    p = fits[0].slopes.shape[0]
    lam = np.zeros((p, p))
    used = 0
    for fit in fits:
        if not fit.usable:
            continue
        B = fit.slopes
        if psi is not None and psi != "identity":
            B = alt_link_transform(fit.intercept, B, psi)
        lam += B @ B.T
        used += 1
    if used == 0:
        raise EstimationError("every local fit was flagged; cannot assemble")
    lam /= used
    lam = (lam + lam.T) / 2.0
    diagnostics = ()
    flagged = len(fits) - used
    if flagged > _FLAG_WARN_FRACTION * len(fits):
        diagnostics = (f"{flagged}/{len(fits)} local fits flagged",)
    return CandidateMatrix(matrix=lam, n_effective=used, diagnostics=diagnostics)


def _basis_from_fits(fits, d, psi):
    cand = assemble_lambda(fits, psi=psi)
    evals, basis_std = top_eigenvectors(cand.matrix, d)
    return cand, evals, basis_std


def opcg_fit(
    data: LabeledDataset,
    h: float,
    d: int,
    config: OptimizerConfig | None = None,
    refine: int = 5,
    psi: str | None = None,
    threads: int = 1,
) -> SdrBasis:
    """Standardize, fit local gradients, eigendecompose the candidate matrix.

    refine > 0 (default 5 rounds) re-runs the gradient fits with kernel
    weights measured on the current basis's projected differences, stopping
    when successive bases agree to REFINE_TOL in projection distance or
    after `refine` rounds.  refine=0 gives the plain single-pass estimator.
    """
    if not 1 <= d < data.p:
        raise ParameterError(f"d={d} must satisfy 1 <= d < p={data.p}")
    if not h > 0:
        raise ParameterError(f"bandwidth must be positive, got {h}")
    data_std, record = standardize(data)
    fits = canonical_gradients(data_std, h, config, threads=threads)
    cand, evals, basis_std = _basis_from_fits(fits, d, psi)
    diagnostics = cand.diagnostics
    for _ in range(refine):
        refits = canonical_gradients(
            data_std, h, config, direction=basis_std, inits=fits, threads=threads
        )
        cand, evals, new_basis = _basis_from_fits(refits, d, psi)
        moved = projection_distance(new_basis, basis_std)
        basis_std = new_basis
        fits = refits
        diagnostics = diagnostics + cand.diagnostics
        if moved < REFINE_TOL:
            break
    basis = record.basis_to_original(basis_std)
    return SdrBasis(
        basis=basis,
        basis_std=basis_std,
        eigenvalues=evals,
        d=d,
        record=record,
        diagnostics=tuple(dict.fromkeys(diagnostics)),
    )
