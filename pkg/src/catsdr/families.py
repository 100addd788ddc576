"""Link functions, cumulants and variance functions for the two response
families.

Both families live on an (m-1)-dimensional binary encoding of a label in
1..m: indicator coordinates with the last category as baseline for a
categorical response, and threshold indicators 1{Y > j} for an ordinal one.
Each is a linear exponential family, so the gradient of the cumulant is the
inverse link and its Hessian is the variance function; the test suite checks
those identities against finite differences.

All exp/log compositions are evaluated in shifted log-sum-exp form, so
canonical parameters with entries up to ~700 in magnitude do not overflow.
The ordinal family's cumulant uses the fact that the terms inside its
log-sum-exp are exponentials of prefix sums of theta; the verbatim
matrix-product form of the inverse ordinal link is kept available through
:func:`ordinal_structure` / :func:`adcat_inverse_matrix_form` for testing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DegenerateLinkError, DomainError

__all__ = [
    "Family",
    "categorical",
    "ordinal",
    "EncodedResponse",
    "encode_label",
    "decode_label",
    "encode_labels",
    "cat_link",
    "cat_inverse_link",
    "cat_cumulant",
    "cat_variance",
    "adcat_link",
    "adcat_inverse_link",
    "ord_cumulant",
    "ord_variance",
    "prob_to_survivor",
    "survivor_to_prob",
    "link",
    "inverse_link",
    "cumulant",
    "variance",
    "inverse_link_rows",
    "cumulant_rows",
    "variance_rows",
    "alt_link_values",
    "alt_link_derivative",
    "alt_link_transform",
    "ordinal_structure",
    "adcat_inverse_matrix_form",
]

# Forward links clamp probabilities this far away from {0, 1} so the
# resulting canonical parameter is always finite.
_PROB_CLAMP = 1e-12

ALT_LINKS = ("identity", "cumulative-logit", "cumulative-probit")


@dataclass(frozen=True)
class Family:
    """Response family: ``kind`` is 'categorical' or 'ordinal', ``m`` the
    number of categories."""

    kind: str
    m: int

    def __post_init__(self):
        if self.kind not in ("categorical", "ordinal"):
            raise DomainError(f"unknown family kind {self.kind!r}")
        if self.m < 2:
            raise DomainError(f"a family needs m >= 2 categories, got m={self.m}")

    @property
    def n_coords(self) -> int:
        """Length of the binary encoding and of the canonical parameter."""
        return self.m - 1

    @property
    def is_ordinal(self) -> bool:
        return self.kind == "ordinal"


def categorical(m: int) -> Family:
    return Family("categorical", m)


def ordinal(m: int) -> Family:
    return Family("ordinal", m)


@dataclass(frozen=True)
class EncodedResponse:
    """Binary encoding of one label: indicator vector (categorical) or
    threshold-indicator vector (ordinal)."""

    vec: np.ndarray
    kind: str


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise DomainError(f"{name} must be a 1-d vector, got shape {v.shape}")
    return v


def _check_finite(theta: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(theta)):
        raise DomainError("canonical parameter must be finite")
    return theta


# ---------------------------------------------------------------------------
# label encodings
# ---------------------------------------------------------------------------


def encode_label(label: int, family: Family) -> EncodedResponse:
    """Encode a label in 1..m as its (m-1)-dimensional binary vector."""
    label = int(label)
    if not 1 <= label <= family.m:
        raise DomainError(f"label {label} outside 1..{family.m}")
    k = family.n_coords
    vec = np.zeros(k)
    if family.is_ordinal:
        vec[: label - 1] = 1.0  # indicators of {Y > j}
    elif label <= k:
        vec[label - 1] = 1.0  # last category encodes as all zeros
    return EncodedResponse(vec=vec, kind=family.kind)


def decode_label(enc: EncodedResponse, family: Family) -> int:
    """Inverse of :func:`encode_label`."""
    vec = np.asarray(enc.vec)
    if vec.shape != (family.n_coords,):
        raise DomainError(
            f"encoded vector has length {vec.size}, expected {family.n_coords}"
        )
    if family.is_ordinal:
        return int(round(vec.sum())) + 1
    hits = np.flatnonzero(vec > 0.5)
    return int(hits[0]) + 1 if hits.size else family.m


def encode_labels(labels: np.ndarray, family: Family) -> np.ndarray:
    """Encode a vector of labels into an (n, m-1) float matrix."""
    labels = np.asarray(labels, dtype=int)
    if labels.size and (labels.min() < 1 or labels.max() > family.m):
        raise DomainError(f"labels must lie in 1..{family.m}")
    k = family.n_coords
    out = np.zeros((labels.size, k))
    if family.is_ordinal:
        out[:] = labels[:, None] > np.arange(1, k + 1)[None, :]
    else:
        rows = np.flatnonzero(labels <= k)
        out[rows, labels[rows] - 1] = 1.0
    return out


# ---------------------------------------------------------------------------
# categorical family (multivariate logistic link, baseline = last category)
# ---------------------------------------------------------------------------


def _check_prob_vector(p, need_all_positive: bool) -> np.ndarray:
    p = _as_vector(p, "probability vector")
    if np.any(p <= 0.0):
        raise DomainError("probabilities must be strictly positive")
    tail = 1.0 - p.sum()
    if need_all_positive and tail <= 0.0:
        raise DomainError("probabilities must sum to strictly less than 1")
    return np.clip(p, _PROB_CLAMP, 1.0 - _PROB_CLAMP)


def cat_link(p) -> np.ndarray:
    """Map category probabilities (first m-1 of them) to log-odds against the
    baseline category."""
    p = _check_prob_vector(p, need_all_positive=True)
    tail = max(1.0 - p.sum(), _PROB_CLAMP)
    return np.log(p) - np.log(tail)


def cat_inverse_link(theta) -> np.ndarray:
    """Softmax over (theta, 0), dropping the baseline coordinate."""
    theta = _check_finite(_as_vector(theta, "theta"))
    shift = max(theta.max(initial=0.0), 0.0)
    w = np.exp(theta - shift)
    return w / (np.exp(-shift) + w.sum())


def cat_cumulant(theta) -> float:
    """log{1 + sum(exp(theta))}, evaluated stably."""
    theta = _check_finite(_as_vector(theta, "theta"))
    shift = max(theta.max(initial=0.0), 0.0)
    return shift + np.log(np.exp(-shift) + np.exp(theta - shift).sum())


def cat_variance(theta) -> np.ndarray:
    """Variance of the indicator encoding: Diag(p) - p p'."""
    p = cat_inverse_link(theta)
    return np.diag(p) - np.outer(p, p)


# ---------------------------------------------------------------------------
# ordinal family (adjacent-categories link on threshold indicators)
# ---------------------------------------------------------------------------


def prob_to_survivor(p) -> np.ndarray:
    """Survivor probabilities P(Y > j), j = 1..m-1, from the first m-1
    category probabilities."""
    p = _check_prob_vector(p, need_all_positive=True)
    return 1.0 - np.cumsum(p)


def survivor_to_prob(tau) -> np.ndarray:
    """Category probabilities (first m-1) from survivor probabilities."""
    tau = _as_vector(tau, "survivor vector")
    if np.any(tau <= 0.0) or np.any(tau >= 1.0):
        raise DomainError("survivor probabilities must lie strictly in (0, 1)")
    if np.any(np.diff(tau) >= 0.0):
        raise DomainError("survivor probabilities must be strictly decreasing")
    return -np.diff(np.concatenate(([1.0], tau)))


def adcat_link(p) -> np.ndarray:
    """Adjacent-categories log-ratios log(p[j+1]/p[j]) including the implied
    last category."""
    p = _check_prob_vector(p, need_all_positive=True)
    full = np.append(p, max(1.0 - p.sum(), _PROB_CLAMP))
    return np.diff(np.log(full))


def _ordinal_log_masses(theta: np.ndarray) -> np.ndarray:
    # log of the unnormalized category masses: (0, cumsum(theta)); the
    # adjacent-ratio definition makes mass k proportional to
    # exp(theta_1 + ... + theta_{k-1}).
    return np.concatenate(([0.0], np.cumsum(theta)))


def adcat_inverse_link(theta) -> np.ndarray:
    """Survivor probabilities P(Y > j) from the canonical parameter."""
    theta = _check_finite(_as_vector(theta, "theta"))
    logq = _ordinal_log_masses(theta)
    q = np.exp(logq - logq.max())
    upper = np.cumsum(q[::-1])[::-1]  # upper[j] = sum of masses for Y > j
    return upper[1:] / upper[0]


def ord_cumulant(theta) -> float:
    """log-sum-exp of the prefix sums of theta (with a leading zero)."""
    theta = _check_finite(_as_vector(theta, "theta"))
    logq = _ordinal_log_masses(theta)
    shift = logq.max()
    return shift + np.log(np.exp(logq - shift).sum())


def _survivor_gamma(tau: np.ndarray) -> np.ndarray:
    j = np.arange(tau.size)
    return tau[np.maximum(j[:, None], j[None, :])]


def ord_variance(theta) -> np.ndarray:
    """Variance of the threshold encoding: Gamma - tau tau' with
    Gamma[j, k] = tau[max(j, k)]."""
    tau = adcat_inverse_link(theta)
    return _survivor_gamma(tau) - np.outer(tau, tau)


def ordinal_structure(m: int):
    """The constant matrices (L, P, Q, e1) of the ordinal family, exposed for
    testing the verbatim matrix form of the inverse link.

    L is the (m-1)x(m-1) lower-triangular matrix of ones, P the cyclic
    permutation sending (a_1, ..., a_k) to (a_k, a_1, ..., a_{k-1}),
    Q = -I + 1 e1' + e1 e1', and e1 the first standard basis vector.
    """
    if m < 2:
        raise DomainError("m must be >= 2")
    k = m - 1
    L = np.tril(np.ones((k, k)))
    P = np.eye(k)[np.r_[k - 1, 0 : k - 1]]
    e1 = np.zeros(k)
    e1[0] = 1.0
    Q = -np.eye(k) + np.outer(np.ones(k), e1) + np.outer(e1, e1)
    return L, P, Q, e1


def adcat_inverse_matrix_form(theta) -> np.ndarray:
    """Inverse ordinal link computed literally as
    Q P L exp(L theta) / (1 + e1' P L exp(L theta)).

    Overflow-prone by construction; intended only for cross-checking
    :func:`adcat_inverse_link` at moderate theta.
    """
    theta = _check_finite(_as_vector(theta, "theta"))
    L, P, Q, e1 = ordinal_structure(theta.size + 1)
    phi = L @ np.exp(L @ theta)
    return (Q @ P @ phi) / (1.0 + e1 @ P @ phi)


# ---------------------------------------------------------------------------
# family dispatch
# ---------------------------------------------------------------------------


def link(p, family: Family) -> np.ndarray:
    return adcat_link(p) if family.is_ordinal else cat_link(p)


def inverse_link(theta, family: Family) -> np.ndarray:
    return adcat_inverse_link(theta) if family.is_ordinal else cat_inverse_link(theta)


def cumulant(theta, family: Family) -> float:
    return ord_cumulant(theta) if family.is_ordinal else cat_cumulant(theta)


def variance(theta, family: Family) -> np.ndarray:
    return ord_variance(theta) if family.is_ordinal else cat_variance(theta)


def inverse_link_rows(thetas: np.ndarray, family: Family) -> np.ndarray:
    """Row-wise inverse link for an (n, m-1) matrix of canonical parameters."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if family.is_ordinal:
        logq = np.concatenate(
            [np.zeros((thetas.shape[0], 1)), np.cumsum(thetas, axis=1)], axis=1
        )
        q = np.exp(logq - logq.max(axis=1, keepdims=True))
        upper = np.cumsum(q[:, ::-1], axis=1)[:, ::-1]
        return upper[:, 1:] / upper[:, :1]
    shift = np.maximum(thetas.max(axis=1, keepdims=True), 0.0)
    w = np.exp(thetas - shift)
    return w / (np.exp(-shift) + w.sum(axis=1, keepdims=True))


def cumulant_rows(thetas: np.ndarray, family: Family) -> np.ndarray:
    """Row-wise cumulant for an (n, m-1) matrix of canonical parameters."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if family.is_ordinal:
        logq = np.concatenate(
            [np.zeros((thetas.shape[0], 1)), np.cumsum(thetas, axis=1)], axis=1
        )
    else:
        logq = np.concatenate(
            [np.zeros((thetas.shape[0], 1)), thetas], axis=1
        )
    shift = logq.max(axis=1)
    return shift + np.log(np.exp(logq - shift[:, None]).sum(axis=1))


def variance_rows(thetas: np.ndarray, family: Family) -> np.ndarray:
    """Row-wise conditional covariance of the encoded response, (n, k, k)."""
    mu = inverse_link_rows(thetas, family)
    k = mu.shape[1]
    if family.is_ordinal:
        jj = np.maximum(np.arange(k)[:, None], np.arange(k)[None, :])
        V = mu[:, jj] - mu[:, :, None] * mu[:, None, :]
    else:
        V = -mu[:, :, None] * mu[:, None, :]
        idx = np.arange(k)
        V[:, idx, idx] += mu
    return V


# ---------------------------------------------------------------------------
# alternative links for the ordinal family
# ---------------------------------------------------------------------------


def _survivor_from_param(a) -> np.ndarray:
    tau = adcat_inverse_link(a)
    if np.any(tau <= 0.0) or np.any(tau >= 1.0):
        raise DegenerateLinkError(
            "alternative link undefined: a survivor probability hit 0 or 1"
        )
    return tau


def alt_link_values(a, psi: str) -> np.ndarray:
    """Alternative-link parameter evaluated at canonical parameter ``a``."""
    tau = _survivor_from_param(a)
    if psi == "identity":
        return np.asarray(a, dtype=float).copy()
    if psi == "cumulative-logit":
        return np.log((1.0 - tau) / tau)
    if psi == "cumulative-probit":
        return ndtri(1.0 - tau)
    raise DomainError(f"unknown alternative link {psi!r}; expected one of {ALT_LINKS}")


def alt_link_derivative(a, psi: str) -> np.ndarray:
    """Jacobian of the alternative-link parameter with respect to the
    canonical parameter, evaluated at ``a``.

    Computed by the chain rule through the survivor probabilities: the
    diagonal d(psi)/d(tau) factor times the variance matrix.  The diagonal
    factors follow the positive sign convention (1/[tau(1-tau)] for the
    cumulative logit, 1/phi(Phi^{-1}(1-tau)) for the probit); the overall
    sign cancels in the outer products this feeds.
    """
    if psi == "identity":
        k = np.asarray(a).size
        return np.eye(k)
    tau = _survivor_from_param(a)
    V = _survivor_gamma(tau) - np.outer(tau, tau)
    if psi == "cumulative-logit":
        diag = 1.0 / (tau * (1.0 - tau))
    elif psi == "cumulative-probit":
        z = ndtri(1.0 - tau)
        diag = 1.0 / (np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi))
    else:
        raise DomainError(
            f"unknown alternative link {psi!r}; expected one of {ALT_LINKS}"
        )
    return diag[:, None] * V


def alt_link_transform(a, B, psi: str) -> np.ndarray:
    """Post-multiply a gradient matrix by the transposed alternative-link
    Jacobian at ``a``: B -> B (dpsi/dtheta)'."""
    B = np.asarray(B, dtype=float)
    J = alt_link_derivative(a, psi)
    return B @ J.T
