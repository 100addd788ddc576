"""Structural dimension estimation by predictor augmentation.

Noise predictors appended to the real ones act as a yardstick: eigenvectors
of the augmented candidate matrix that carry genuine signal put almost no
mass on the appended block, while pure-noise eigenvectors spread into it.
Combining that mass profile with the eigenvalue scree gives a curve whose
minimizer estimates the dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset, standardize
from .errors import ParameterError
from .localfit import LocalFit, OptimizerConfig
from .opcg import assemble_lambda, canonical_gradients
from .subspaces import top_eigenvectors

__all__ = ["OrderEstimate", "predictor_augmentation"]


@dataclass(frozen=True)
class OrderEstimate:
    """Dimension estimate with the combined objective curve over 0..d_max."""

    d_hat: int
    objective_curve: np.ndarray
    eigenvalue_curve: np.ndarray
    eigenvector_curve: np.ndarray
    replications: int
    r_augment: int
    diagnostics: tuple = ()


def _padded_inits(fits, r: int, k: int):
    """Warm starts for the augmented problem: zero slopes on the appended
    noise block, everything else carried over from the base fits."""
    inits = []
    for fit in fits:
        slopes = np.vstack([fit.slopes, np.zeros((r, k))])
        inits.append(
            LocalFit(
                intercept=fit.intercept.copy(),
                slopes=slopes,
                iterations=0,
                final_gradient_norm=float("nan"),
                converged=False,
                objective=float("nan"),
                flags=(),
            )
        )
    return inits


def predictor_augmentation(
    data: LabeledDataset,
    h: float,
    d_max: int,
    r: int | None = None,
    reps: int = 200,
    seed=None,
    config: OptimizerConfig | None = None,
) -> OrderEstimate:
    """Estimate the structural dimension from the candidate-matrix spectrum.

    Per replication, r independent standard normal columns are appended to
    the standardized predictors and the local-gradient candidate matrix is
    rebuilt on the augmented data.  Two curves are accumulated over
    k = 0..d_max: the mean squared mass of the leading k eigenvectors on
    the appended block (0 at k=0 by convention) and the mean (k+1)-th
    eigenvalue.  Each is normalized to unit sum and added; d_hat is the
    argmin.  Deterministic given seed: replication RNGs are spawned from a
    single seed sequence, and the accumulation is order-independent.
    """
    p = data.p
    if not 1 <= d_max < p:
        raise ParameterError(f"d_max={d_max} must satisfy 1 <= d_max < p={p}")
    if r is None:
        r = math.ceil(p / 5)
    if r < 1:
        raise ParameterError(f"r={r} must be >= 1")
    if reps < 1:
        raise ParameterError(f"reps={reps} must be >= 1")
    if config is None:
        # replication driver budget; the curve only needs the spectrum's
        # shape, not fully converged local fits
        config = OptimizerConfig(max_iters=60)
    data_std, _ = standardize(data)
    k = data.family.n_coords
    base_fits = canonical_gradients(data_std, h, config)
    inits = _padded_inits(base_fits, r, k)

    children = np.random.SeedSequence(seed).spawn(reps)
    vec_mass = np.zeros(d_max + 1)
    eval_sum = np.zeros(d_max + 1)
    diagnostics = []
    for child in children:
        rng = np.random.default_rng(child)
        noise = rng.standard_normal((data.n, r))
        aug = LabeledDataset(
            X=np.hstack([data_std.X, noise]),
            labels=data.labels,
            family=data.family,
        )
        fits = canonical_gradients(aug, h, config, inits=inits)
        cand = assemble_lambda(fits)
        evals, vecs = top_eigenvectors(cand.matrix, d_max)
        diagnostics.extend(cand.diagnostics)
        block = (vecs[p:, :] ** 2).sum(axis=0)
        # cumulative augmented-block mass of the leading k eigenvectors
        vec_mass[1:] += np.cumsum(block)
        eval_sum += evals[: d_max + 1]
    vec_curve = vec_mass / reps
    eval_curve = eval_sum / reps
    curve = np.zeros(d_max + 1)
    for component in (vec_curve, eval_curve):
        total = component.sum()
        if total > 0:
            curve += component / total
    d_hat = int(np.argmin(curve))
    return OrderEstimate(
        d_hat=d_hat,
        objective_curve=curve,
        eigenvalue_curve=eval_curve,
        eigenvector_curve=vec_curve,
        replications=reps,
        r_augment=r,
        diagnostics=tuple(dict.fromkeys(diagnostics)),
    )
