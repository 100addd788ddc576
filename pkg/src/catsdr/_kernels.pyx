# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled hot kernels: local GLM objective/gradient, the conjugate-gradient
local solver, and the stacked alternating-estimator objective.

Call surface mirrors _kernels_py; the backend selector picks whichever is
available.  family_code: 0 = categorical, 1 = ordinal.
"""

from libc.math cimport exp, log, sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef double _row_contrib(int p, int k, int family_code,
                         const double* crow, const double* yrow, double wi,
                         const double* a, const double* B,
                         double* grad, double* th, double* q,
                         bint want_grad) noexcept nogil:
    """One observation's weighted contribution to the local objective and,
    when want_grad, to grad (layout: a then row-major B).  Returns the value
    term; scratch th has length k, q length k+1."""
    cdef int j, l
    cdef double s, shift, tot, b, cl, r, suf
    for j in range(k):
        th[j] = a[j]
    for l in range(p):
        cl = crow[l]
        if cl != 0.0:
            for j in range(k):
                th[j] += cl * B[l * k + j]
    s = 0.0
    for j in range(k):
        s += th[j] * yrow[j]
    if family_code == 0:
        shift = 0.0
        for j in range(k):
            if th[j] > shift:
                shift = th[j]
        tot = exp(-shift)
        for j in range(k):
            q[j] = exp(th[j] - shift)
            tot += q[j]
        b = shift + log(tot)
        for j in range(k):
            q[j] = q[j] / tot
    else:
        q[0] = 0.0
        for j in range(k):
            q[j + 1] = q[j] + th[j]
        shift = 0.0
        for j in range(1, k + 1):
            if q[j] > shift:
                shift = q[j]
        tot = 0.0
        for j in range(k + 1):
            q[j] = exp(q[j] - shift)
            tot += q[j]
        b = shift + log(tot)
        suf = 0.0
        for j in range(k, 0, -1):
            suf += q[j]
            q[j] = suf
        for j in range(k):
            q[j] = q[j + 1] / tot
    if want_grad:
        for j in range(k):
            r = wi * (q[j] - yrow[j])
            grad[j] += r
            th[j] = r
        for l in range(p):
            cl = crow[l]
            if cl != 0.0:
                for j in range(k):
                    grad[k + l * k + j] += cl * th[j]
    return wi * (b - s)


cdef double _local_vg(int n, int p, int k, int family_code,
                      const double* C, const double* Y, const double* w,
                      const double* x, double ridge,
                      double* grad, double* th, double* q,
                      bint want_grad) noexcept nogil:
    cdef int i, j
    cdef int nx = (p + 1) * k
    cdef double f = 0.0, ssq
    if want_grad:
        for j in range(nx):
            grad[j] = 0.0
    for i in range(n):
        if w[i] == 0.0:
            continue
        f += _row_contrib(p, k, family_code, C + i * p, Y + i * k, w[i],
                          x, x + k, grad, th, q, want_grad)
    if ridge != 0.0:
        ssq = 0.0
        for j in range(nx):
            ssq += x[j] * x[j]
            if want_grad:
                grad[j] += ridge * x[j]
        f += 0.5 * ridge * ssq
    return f


def nll_value(double[:, ::1] C, double[:, ::1] Y, double[::1] w,
              double[::1] a, double[:, ::1] B, int family_code, double ridge):
    cdef int n = C.shape[0], p = C.shape[1], k = Y.shape[1]
    cdef cnp.ndarray[double, ndim=1] x = np.empty((p + 1) * k)
    cdef cnp.ndarray[double, ndim=1] th = np.empty(k)
    cdef cnp.ndarray[double, ndim=1] q = np.empty(k + 1)
    x[:k] = a
    x[k:] = np.asarray(B).ravel()
    cdef double f
    with nogil:
        f = _local_vg(n, p, k, family_code, &C[0, 0], &Y[0, 0], &w[0],
                      &x[0], ridge, NULL, &th[0], &q[0], 0)
    return float(f)


def nll_value_grad(double[:, ::1] C, double[:, ::1] Y, double[::1] w,
                   double[::1] a, double[:, ::1] B, int family_code, double ridge):
    cdef int n = C.shape[0], p = C.shape[1], k = Y.shape[1]
    cdef cnp.ndarray[double, ndim=1] x = np.empty((p + 1) * k)
    cdef cnp.ndarray[double, ndim=1] g = np.empty((p + 1) * k)
    cdef cnp.ndarray[double, ndim=1] th = np.empty(k)
    cdef cnp.ndarray[double, ndim=1] q = np.empty(k + 1)
    x[:k] = a
    x[k:] = np.asarray(B).ravel()
    cdef double f
    with nogil:
        f = _local_vg(n, p, k, family_code, &C[0, 0], &Y[0, 0], &w[0],
                      &x[0], ridge, &g[0], &th[0], &q[0], 1)
    return float(f), g[:k].copy(), g[k:].copy().reshape(p, k)


cdef double _dot(const double* u, const double* v, int n) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(n):
        s += u[i] * v[i]
    return s


def fit_local(double[:, ::1] C, double[:, ::1] Y, double[::1] w, int family_code,
              double[::1] a0, double[:, ::1] B0, double grad_tol, int max_iters,
              double armijo_c, double backtrack_factor, double ridge):
    """Hybrid conjugate gradient (HS/DY beta, Armijo backtracking) on the
    ridged local negative log-likelihood.  Returns (a, B, iterations,
    gradient_norm, converged)."""
    cdef int n = C.shape[0], p = C.shape[1], k = Y.shape[1]
    cdef int nx = (p + 1) * k
    cdef cnp.ndarray[double, ndim=1] xa = np.empty(nx)
    cdef cnp.ndarray[double, ndim=1] ga = np.empty(nx)
    cdef cnp.ndarray[double, ndim=1] gna = np.empty(nx)
    cdef cnp.ndarray[double, ndim=1] da = np.empty(nx)
    cdef cnp.ndarray[double, ndim=1] xta = np.empty(nx)
    cdef cnp.ndarray[double, ndim=1] tha = np.empty(k)
    cdef cnp.ndarray[double, ndim=1] qa = np.empty(k + 1)
    xa[:k] = a0
    xa[k:] = np.asarray(B0).ravel()
    cdef double* x = &xa[0]
    cdef double* g = &ga[0]
    cdef double* gn = &gna[0]
    cdef double* d = &da[0]
    cdef double* xt = &xta[0]
    cdef double* th = &tha[0]
    cdef double* q = &qa[0]
    cdef const double* Cp = &C[0, 0]
    cdef const double* Yp = &Y[0, 0]
    cdef const double* wp = &w[0]

    cdef double f, gnorm, gd, step, f_trial, denom, beta, bhs, bdy, yj
    cdef int iters = 0, j
    cdef bint steepest, accepted
    with nogil:
        f = _local_vg(n, p, k, family_code, Cp, Yp, wp, x, ridge, g, th, q, 1)
        gnorm = sqrt(_dot(g, g, nx))
        for j in range(nx):
            d[j] = -g[j]
        steepest = True
        while gnorm > grad_tol and iters < max_iters:
            gd = _dot(g, d, nx)
            if gd >= 0.0:
                for j in range(nx):
                    d[j] = -g[j]
                steepest = True
                gd = -gnorm * gnorm
                if gd == 0.0:
                    break
            step = 1.0
            accepted = False
            while step >= 1e-20:
                for j in range(nx):
                    xt[j] = x[j] + step * d[j]
                f_trial = _local_vg(n, p, k, family_code, Cp, Yp, wp, xt,
                                    ridge, NULL, th, q, 0)
                if f_trial <= f + armijo_c * step * gd:
                    accepted = True
                    break
                step *= backtrack_factor
            if not accepted:
                if steepest:
                    break
                for j in range(nx):
                    d[j] = -g[j]
                steepest = True
                iters += 1
                continue
            for j in range(nx):
                x[j] = x[j] + step * d[j]
            f = _local_vg(n, p, k, family_code, Cp, Yp, wp, x, ridge, gn, th, q, 1)
            denom = 0.0
            bhs = 0.0
            bdy = 0.0
            for j in range(nx):
                yj = gn[j] - g[j]
                denom += d[j] * yj
                bhs += gn[j] * yj
                bdy += gn[j] * gn[j]
            if denom > 0.0:
                beta = bhs / denom
                if bdy / denom < beta:
                    beta = bdy / denom
                if beta < 0.0:
                    beta = 0.0
            else:
                beta = 0.0
            for j in range(nx):
                d[j] = -gn[j] + beta * d[j]
                g[j] = gn[j]
            steepest = beta == 0.0
            gnorm = sqrt(_dot(g, g, nx))
            iters += 1
    if not np.isfinite(f) or not np.isfinite(xa).all():
        raise ArithmeticError("local optimizer diverged to non-finite values")
    return (xa[:k].copy(), xa[k:].copy().reshape(p, k), iters, float(gnorm),
            int(gnorm <= grad_tol))


cdef double _made_core(int n, int p, int d, int k, int family_code,
                       const double* X, const double* Y, const double* W,
                       const double* A, const double* BT, const double* U,
                       double* grad, double* u, double* th, double* q,
                       double* res, bint want_grad) noexcept nogil:
    """Stacked objective over anchors; U is the precomputed n x d matrix of
    projected predictors X @ beta.  grad is p x d row-major when wanted."""
    cdef int i, j, l, dd, kk
    cdef double f = 0.0, wij, s, shift, tot, b, v, xjl
    if want_grad:
        for j in range(p * d):
            grad[j] = 0.0
    for j in range(n):
        for i in range(n):
            wij = W[i * n + j]
            if wij == 0.0:
                continue
            for dd in range(d):
                u[dd] = U[i * d + dd] - U[j * d + dd]
            # theta = A_j + BT_j' u, BT_j laid out (d, k)
            for kk in range(k):
                th[kk] = A[j * k + kk]
            for dd in range(d):
                v = u[dd]
                if v != 0.0:
                    for kk in range(k):
                        th[kk] += v * BT[(j * d + dd) * k + kk]
            s = 0.0
            for kk in range(k):
                s += th[kk] * Y[i * k + kk]
            if family_code == 0:
                shift = 0.0
                for kk in range(k):
                    if th[kk] > shift:
                        shift = th[kk]
                tot = exp(-shift)
                for kk in range(k):
                    q[kk] = exp(th[kk] - shift)
                    tot += q[kk]
                b = shift + log(tot)
                for kk in range(k):
                    q[kk] = q[kk] / tot
            else:
                q[0] = 0.0
                for kk in range(k):
                    q[kk + 1] = q[kk] + th[kk]
                shift = 0.0
                for kk in range(1, k + 1):
                    if q[kk] > shift:
                        shift = q[kk]
                tot = 0.0
                for kk in range(k + 1):
                    q[kk] = exp(q[kk] - shift)
                    tot += q[kk]
                b = shift + log(tot)
                v = 0.0
                for kk in range(k, 0, -1):
                    v += q[kk]
                    q[kk] = v
                for kk in range(k):
                    q[kk] = q[kk + 1] / tot
            f += wij * (b - s)
            if want_grad:
                for kk in range(k):
                    res[kk] = wij * (q[kk] - Y[i * k + kk])
                for dd in range(d):
                    v = 0.0
                    for kk in range(k):
                        v += BT[(j * d + dd) * k + kk] * res[kk]
                    u[dd] = v
                for l in range(p):
                    xjl = X[i * p + l] - X[j * p + l]
                    if xjl != 0.0:
                        for dd in range(d):
                            grad[l * d + dd] += xjl * u[dd]
    return f


def made_value(double[:, ::1] X, double[:, ::1] Y, double[:, ::1] W,
               double[:, ::1] A, double[:, :, ::1] BT, double[:, ::1] beta,
               int family_code):
    cdef int n = X.shape[0], p = X.shape[1], k = Y.shape[1]
    cdef int d = beta.shape[1]
    cdef cnp.ndarray[double, ndim=2] U = np.asarray(X) @ np.asarray(beta)
    cdef cnp.ndarray[double, ndim=1] u = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] th = np.empty(k)
    cdef cnp.ndarray[double, ndim=1] q = np.empty(k + 1)
    cdef cnp.ndarray[double, ndim=1] res = np.empty(k)
    cdef double f
    with nogil:
        f = _made_core(n, p, d, k, family_code, &X[0, 0], &Y[0, 0], &W[0, 0],
                       &A[0, 0], &BT[0, 0, 0], &U[0, 0], NULL,
                       &u[0], &th[0], &q[0], &res[0], 0)
    return float(f)


def made_value_grad(double[:, ::1] X, double[:, ::1] Y, double[:, ::1] W,
                    double[:, ::1] A, double[:, :, ::1] BT, double[:, ::1] beta,
                    int family_code):
    cdef int n = X.shape[0], p = X.shape[1], k = Y.shape[1]
    cdef int d = beta.shape[1]
    cdef cnp.ndarray[double, ndim=2] U = np.asarray(X) @ np.asarray(beta)
    cdef cnp.ndarray[double, ndim=2] G = np.empty((p, d))
    cdef cnp.ndarray[double, ndim=1] u = np.empty(d)
    cdef cnp.ndarray[double, ndim=1] th = np.empty(k)
    cdef cnp.ndarray[double, ndim=1] q = np.empty(k + 1)
    cdef cnp.ndarray[double, ndim=1] res = np.empty(k)
    cdef double f
    with nogil:
        f = _made_core(n, p, d, k, family_code, &X[0, 0], &Y[0, 0], &W[0, 0],
                       &A[0, 0], &BT[0, 0, 0], &U[0, 0], &G[0, 0],
                       &u[0], &th[0], &q[0], &res[0], 1)
    return float(f), G


def mu_and_cumulant(thetas, int family_code):
    """Row-wise inverse link and cumulant; provided for backend parity."""
    cdef cnp.ndarray[double, ndim=2] T = np.ascontiguousarray(
        np.atleast_2d(np.asarray(thetas, dtype=float)))
    cdef int n = T.shape[0], k = T.shape[1]
    cdef cnp.ndarray[double, ndim=2] mu = np.empty((n, k))
    cdef cnp.ndarray[double, ndim=1] b = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] th = np.empty(k)
    cdef cnp.ndarray[double, ndim=1] q = np.empty(k + 1)
    cdef int i, j
    cdef double shift, tot, suf
    with nogil:
        for i in range(n):
            if family_code == 0:
                shift = 0.0
                for j in range(k):
                    if T[i, j] > shift:
                        shift = T[i, j]
                tot = exp(-shift)
                for j in range(k):
                    q[j] = exp(T[i, j] - shift)
                    tot += q[j]
                b[i] = shift + log(tot)
                for j in range(k):
                    mu[i, j] = q[j] / tot
            else:
                q[0] = 0.0
                for j in range(k):
                    q[j + 1] = q[j] + T[i, j]
                shift = 0.0
                for j in range(1, k + 1):
                    if q[j] > shift:
                        shift = q[j]
                tot = 0.0
                for j in range(k + 1):
                    q[j] = exp(q[j] - shift)
                    tot += q[j]
                b[i] = shift + log(tot)
                suf = 0.0
                for j in range(k, 0, -1):
                    suf += q[j]
                    q[j] = suf
                for j in range(k):
                    mu[i, j] = q[j + 1] / tot
    return mu, b
