"""Independent reference implementations used as test oracles.

Everything here is written from the textbook definitions, on purpose not
sharing code paths with the package: probabilities are reconstructed by
brute force, derivatives by finite differences, and the weighted GLM by
Newton-Raphson on the explicitly assembled information matrix (IRLS).
"""

import numpy as np


# -- probability reconstruction ---------------------------------------------

def cat_probs(theta):
    """Baseline-category probabilities (p^1..p^{m-1}) from logits."""
    theta = np.asarray(theta, dtype=float)
    shift = max(float(theta.max()), 0.0)
    e = np.exp(theta - shift)
    return e / (np.exp(-shift) + e.sum())


def cat_probs_full(theta):
    p = cat_probs(theta)
    return np.append(p, 1.0 - p.sum())


def adcat_probs_full(theta):
    """Category probabilities from adjacent-categories logits, by the
    ratio recursion u^{j+1} = u^j exp(theta^j)."""
    theta = np.asarray(theta, dtype=float)
    logu = np.concatenate([[0.0], np.cumsum(theta)])
    logu -= logu.max()
    u = np.exp(logu)
    return u / u.sum()


def survivor_from_theta(theta):
    """tau^j = P(Y > j) under the adjacent-categories model."""
    p = adcat_probs_full(theta)
    return np.cumsum(p[::-1])[::-1][1:]


def family_mean(theta, is_ordinal):
    return survivor_from_theta(theta) if is_ordinal else cat_probs(theta)


def family_cumulant(theta, is_ordinal):
    theta = np.asarray(theta, dtype=float)
    if is_ordinal:
        logu = np.concatenate([[0.0], np.cumsum(theta)])
        mx = logu.max()
        return mx + np.log(np.exp(logu - mx).sum())
    mx = max(float(theta.max()), 0.0)
    return mx + np.log(np.exp(-mx) + np.exp(theta - mx).sum())


def family_variance(theta, is_ordinal):
    if is_ordinal:
        tau = survivor_from_theta(theta)
        k = tau.size
        gamma = tau[np.maximum.outer(np.arange(k), np.arange(k))]
        return gamma - np.outer(tau, tau)
    p = cat_probs(theta)
    return np.diag(p) - np.outer(p, p)


# -- finite differences ------------------------------------------------------

def fd_gradient(f, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = eps
        g[i] = (f(x + step) - f(x - step)) / (2 * eps)
    return g


def fd_hessian(f, x, eps=1e-4):
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.empty((n, n))
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = eps
        for j in range(i, n):
            ej = np.zeros(n)
            ej[j] = eps
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4 * eps * eps)
    return H


# -- encoded responses -------------------------------------------------------

def encode(labels, m, is_ordinal):
    labels = np.asarray(labels)
    n = labels.size
    Y = np.zeros((n, m - 1))
    for i, lab in enumerate(labels):
        if is_ordinal:
            Y[i, : lab - 1] = 1.0
        elif lab < m:
            Y[i, lab - 1] = 1.0
    return Y


# -- weighted multivariate GLM by IRLS ---------------------------------------

def irls_glm(Z, Y, w, is_ordinal, ridge=0.0, tol=1e-10, max_iters=200):
    """Newton-Raphson for the weighted negative log-likelihood

        sum_i w_i [ b(coef' z_i) - (coef' z_i)' y_i ] + ridge/2 ||coef||^2

    Z is n x q (column of ones included by the caller), Y the n x (m-1)
    encoded responses.  Returns the q x (m-1) coefficient matrix.
    """
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y, dtype=float)
    w = np.asarray(w, dtype=float)
    n, q = Z.shape
    k = Y.shape[1]
    coef = np.zeros((q, k))
    for _ in range(max_iters):
        grad = ridge * coef.ravel()
        H = ridge * np.eye(q * k)
        for i in range(n):
            theta = coef.T @ Z[i]
            mu = family_mean(theta, is_ordinal)
            V = family_variance(theta, is_ordinal)
            grad += w[i] * np.kron(Z[i], mu - Y[i])
            H += w[i] * np.kron(np.outer(Z[i], Z[i]), V)
        step = np.linalg.solve(H, grad)
        coef = coef - step.reshape(q, k)
        if np.linalg.norm(step) < tol:
            break
    return coef


def irls_local(X, labels, m, anchor, w, is_ordinal=False, ridge=0.0):
    """Local-GLM parametrisation: intercept plus slopes on X - X[anchor].

    Returns (a, B) with a length m-1 and B of shape (p, m-1).
    """
    X = np.asarray(X, dtype=float)
    C = X - X[anchor]
    Z = np.hstack([np.ones((X.shape[0], 1)), C])
    Y = encode(labels, m, is_ordinal)
    coef = irls_glm(Z, Y, w, is_ordinal, ridge=ridge)
    return coef[0], coef[1:]
