"""Orthonormal bases, projection distances and eigenvector extraction."""

from __future__ import annotations

import warnings

import numpy as np

from .errors import ParameterError

__all__ = [
    "orthonormalize",
    "fix_eigenvector_signs",
    "projection_distance",
    "top_eigenvectors",
    "principal_angles",
]


def orthonormalize(M: np.ndarray) -> np.ndarray:
    """Orthonormal basis for the column space of M (thin QR, deterministic
    signs via a positive R diagonal)."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ParameterError(f"expected a matrix, got shape {M.shape}")
    Q, R = np.linalg.qr(M)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def fix_eigenvector_signs(V: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    V = np.array(V, dtype=float, copy=True)
    idx = np.abs(V).argmax(axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _ensure_orthonormal(A: np.ndarray, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    gram = A.T @ A
    if not np.allclose(gram, np.eye(A.shape[1]), atol=1e-8):
        warnings.warn(f"{name} is not orthonormal; re-orthonormalizing")
        return orthonormalize(A)
    return A


def projection_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Frobenius distance between the projection matrices of two column
    spaces, ||AA' - BB'||_F."""
    A = _ensure_orthonormal(A, "first basis")
    B = _ensure_orthonormal(B, "second basis")
    # ||AA' - BB'||_F^2 = 2 d - 2 ||A'B||_F^2 for equal-rank orthonormal bases
    if A.shape[1] == B.shape[1]:
        cross = A.T @ B
        val = 2.0 * A.shape[1] - 2.0 * (cross * cross).sum()
        return float(np.sqrt(max(val, 0.0)))
    PA = A @ A.T
    PB = B @ B.T
    return float(np.linalg.norm(PA - PB, "fro"))


def top_eigenvectors(sym: np.ndarray, d: int):
    """Descending eigenvalues and the sign-fixed top-d eigenvector basis of a
    symmetric matrix."""
    sym = np.asarray(sym, dtype=float)
    p = sym.shape[0]
    if not 1 <= d <= p:
        raise ParameterError(f"d={d} must lie in 1..{p}")
    evals, evecs = np.linalg.eigh((sym + sym.T) / 2.0)
    order = np.argsort(evals)[::-1]
    evals = evals[order]
    basis = fix_eigenvector_signs(evecs[:, order[:d]])
    return evals, basis


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Principal angles (radians, ascending) between two column spaces."""
    A = _ensure_orthonormal(A, "first basis")
    B = _ensure_orthonormal(B, "second basis")
    sv = np.linalg.svd(A.T @ B, compute_uv=False)
    # singular values arrive descending, so arccos is already ascending
    return np.arccos(np.clip(sv, -1.0, 1.0))
