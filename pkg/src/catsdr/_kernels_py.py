"""Pure-numpy implementation of the hot numerical kernels.

Mirrors the call surface of the compiled extension module so either can sit
behind the backend selector: weighted negative log-likelihood values and
gradients for a single local fit, the conjugate-gradient local solver, and
the stacked objective/gradient used by the alternating estimator.

family_code: 0 = categorical (baseline-category encoding), 1 = ordinal
(adjacent-category encoding).
"""

from __future__ import annotations

import numpy as np

from . import optim

__all__ = [
    "mu_and_cumulant",
    "nll_value",
    "nll_value_grad",
    "fit_local",
    "made_value",
    "made_value_grad",
]


def mu_and_cumulant(Theta: np.ndarray, family_code: int):
    """Row-wise inverse link and cumulant values, overflow-safe."""
    Theta = np.atleast_2d(np.asarray(Theta, dtype=float))
    if family_code == 0:
        shift = np.maximum(Theta.max(axis=1), 0.0)
        E = np.exp(Theta - shift[:, None])
        denom = np.exp(-shift) + E.sum(axis=1)
        mu = E / denom[:, None]
        b = shift + np.log(denom)
        return mu, b
    # ordinal: log category masses are prefix sums of theta, with a leading 0
    n, k = Theta.shape
    S = np.empty((n, k + 1))
    S[:, 0] = 0.0
    np.cumsum(Theta, axis=1, out=S[:, 1:])
    shift = S.max(axis=1)
    Q = np.exp(S - shift[:, None])
    tot = Q.sum(axis=1)
    # survivor values are suffix sums over the category masses
    suffix = np.cumsum(Q[:, ::-1], axis=1)[:, ::-1]
    mu = suffix[:, 1:] / tot[:, None]
    b = shift + np.log(tot)
    return mu, b


def nll_value(C, Y, w, a, B, family_code, ridge):
    Theta = a + C @ B
    _, b = mu_and_cumulant(Theta, family_code)
    f = float(w @ (b - (Theta * Y).sum(axis=1)))
    if ridge:
        f += 0.5 * ridge * (float(a @ a) + float((B * B).sum()))
    return f


def nll_value_grad(C, Y, w, a, B, family_code, ridge):
    Theta = a + C @ B
    mu, b = mu_and_cumulant(Theta, family_code)
    f = float(w @ (b - (Theta * Y).sum(axis=1)))
    R = w[:, None] * (mu - Y)
    ga = R.sum(axis=0)
    gB = C.T @ R
    if ridge:
        f += 0.5 * ridge * (float(a @ a) + float((B * B).sum()))
        ga = ga + ridge * a
        gB = gB + ridge * B
    return f, ga, gB


def fit_local(
    C,
    Y,
    w,
    family_code,
    a0,
    B0,
    grad_tol,
    max_iters,
    armijo_c,
    backtrack_factor,
    ridge,
):
    """Minimize the ridged local negative log-likelihood in (a, B)."""
    p = C.shape[1]
    k = Y.shape[1]

    def unpack(x):
        return x[:k], x[k:].reshape(p, k)

    def value(x):
        a, B = unpack(x)
        return nll_value(C, Y, w, a, B, family_code, ridge)

    def value_grad(x):
        a, B = unpack(x)
        f, ga, gB = nll_value_grad(C, Y, w, a, B, family_code, ridge)
        return f, np.concatenate([ga, gB.ravel()])

    x0 = np.concatenate([np.asarray(a0, dtype=float), np.asarray(B0, dtype=float).ravel()])
    res = optim.minimize_cg(
        value_grad,
        x0,
        grad_tol=grad_tol,
        max_iters=max_iters,
        armijo_c=armijo_c,
        backtrack_factor=backtrack_factor,
        value=value,
    )
    a, B = unpack(res.x)
    gnorm = float(np.linalg.norm(res.grad))
    return a.copy(), B.copy(), res.iterations, gnorm, int(res.converged)


def made_value(X, Y, W, A, BT, beta, family_code):
    """Stacked weighted negative log-likelihood over all anchors.

    W[i, j] is the normalized weight of observation i around anchor j,
    A[j] the anchor intercept, BT[j] the (d, k) local slope matrix on the
    projected predictors, beta the (p, d) frame.
    """
    n = X.shape[0]
    U_all = X @ beta
    total = 0.0
    for j in range(n):
        wj = W[:, j]
        U = U_all - U_all[j]
        Theta = A[j] + U @ BT[j]
        _, b = mu_and_cumulant(Theta, family_code)
        total += float(wj @ (b - (Theta * Y).sum(axis=1)))
    return total


def made_value_grad(X, Y, W, A, BT, beta, family_code):
    n, p = X.shape
    d = beta.shape[1]
    grad = np.zeros((p, d))
    total = 0.0
    for j in range(n):
        wj = W[:, j]
        Cj = X - X[j]
        U = Cj @ beta
        Theta = A[j] + U @ BT[j]
        mu, b = mu_and_cumulant(Theta, family_code)
        total += float(wj @ (b - (Theta * Y).sum(axis=1)))
        R = wj[:, None] * (mu - Y)
        grad += Cj.T @ (R @ BT[j].T)
    return total, grad
