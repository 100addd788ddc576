"""Labeled datasets and predictor standardization.

A dataset couples an (n, p) predictor matrix with integer class labels in
1..m and the response family used to encode them.  Estimators standardize
predictors to zero mean and unit sample standard deviation; the record of
that transform maps fitted directions back to the original scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DataError
from .families import Family, encode_labels
from .subspaces import orthonormalize

__all__ = ["LabeledDataset", "StandardizeRecord", "standardize"]


@dataclass(frozen=True)
class LabeledDataset:
    """Predictors, labels in 1..m, and the response family."""

    X: np.ndarray
    labels: np.ndarray
    family: Family
    column_names: tuple | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        labels = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError(f"predictors must be a matrix, got shape {X.shape}")
        n, p = X.shape
        if n < 2:
            raise DataError(f"need at least 2 observations, got {n}")
        if p < 1:
            raise DataError("need at least 1 predictor")
        if not np.isfinite(X).all():
            raise DataError("predictors contain non-finite values")
        if labels.shape != (n,):
            raise DataError(
                f"labels must have shape ({n},), got {labels.shape}"
            )
        lab = labels.astype(np.int64)
        if not np.array_equal(lab, np.asarray(labels, dtype=float)):
            raise DataError("labels must be integers")
        m = self.family.m
        present = np.unique(lab)
        if present[0] < 1 or present[-1] > m:
            raise DataError(f"labels must lie in 1..{m}, found {present}")
        if len(present) != m:
            missing = sorted(set(range(1, m + 1)) - set(present.tolist()))
            raise DataError(f"classes {missing} have no observations")
        if self.column_names is not None and len(self.column_names) != p:
            raise DataError("column_names length does not match predictors")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", lab)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def m(self) -> int:
        return self.family.m

    def encoded(self) -> np.ndarray:
        """The (n, m-1) encoded response matrix."""
        return encode_labels(self.labels, self.family)

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices)
        return replace(self, X=self.X[idx], labels=self.labels[idx])

    def with_predictors(self, X: np.ndarray) -> "LabeledDataset":
        names = self.column_names
        if names is not None and np.asarray(X).shape[1] != len(names):
            names = None
        return replace(self, X=X, column_names=names)


@dataclass(frozen=True)
class StandardizeRecord:
    """Column means and sample standard deviations of a standardization."""

    mean: np.ndarray
    scale: np.ndarray

    @property
    def is_identity(self) -> bool:
        return bool(
            np.allclose(self.mean, 0.0, atol=1e-10)
            and np.allclose(self.scale, 1.0, atol=1e-10)
        )

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * self.scale + self.mean

    def basis_to_original(self, basis_std: np.ndarray) -> np.ndarray:
        """Map an orthonormal basis for the standardized predictors back to
        an orthonormal basis on the original scale.

        A direction v on standardized coordinates acts on x through
        v'(x - mean)/scale, so the original-scale direction is v/scale,
        re-orthonormalized columnwise.
        """
        basis_std = np.asarray(basis_std, dtype=float)
        return orthonormalize(basis_std / self.scale[:, None])


def standardize(data: LabeledDataset):
    """Center and scale each predictor column to zero mean and unit sample
    standard deviation.  Returns the standardized dataset and the record
    needed to undo the transform."""
    X = data.X
    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1)
    bad = np.flatnonzero(scale <= 0)
    if bad.size:
        j = int(bad[0])
        name = data.column_names[j] if data.column_names else f"column {j}"
        raise DataError(f"predictor {name} has zero variance")
    record = StandardizeRecord(mean=mean, scale=scale)
    return data.with_predictors((X - mean) / scale), record
