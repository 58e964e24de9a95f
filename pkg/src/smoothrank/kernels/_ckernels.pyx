# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, INFINITY

cnp.import_array()

cdef double KINK = 1e-12


def pairwise_distances(const double[:, ::1] Q, const double[:, ::1] R):
    cdef Py_ssize_t n = Q.shape[0], m = R.shape[0], d = Q.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc, t
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for k in range(d):
                    t = Q[i, k] - R[j, k]
                    acc = acc + t * t
                o[i, j] = sqrt(acc)
    return out


cdef double _value_grad(const double[:, ::1] X, const double[::1] c,
                        double[::1] q, double[::1] g) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, k
    cdef double f = 0.0, acc, t, dist, coef
    for k in range(d):
        g[k] = 0.0
    for i in range(n):
        acc = 0.0
        for k in range(d):
            t = q[k] - X[i, k]
            acc = acc + t * t
        dist = sqrt(acc)
        f = f + c[i] * dist
        if dist >= KINK:
            coef = c[i] / dist
            for k in range(d):
                g[k] = g[k] + coef * (q[k] - X[i, k])
    if f < 0.0:
        for k in range(d):
            g[k] = -g[k]
    return f


def pricing_value(const double[:, ::1] X, const double[::1] c, const double[::1] q):
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, k
    cdef double f = 0.0, acc, t
    with nogil:
        for i in range(n):
            acc = 0.0
            for k in range(d):
                t = q[k] - X[i, k]
                acc = acc + t * t
            f = f + c[i] * sqrt(acc)
    return f


def pricing_value_grad(const double[:, ::1] X, const double[::1] c, q):
    qq = np.array(q, dtype=np.float64, copy=True)
    g = np.empty_like(qq)
    cdef double f
    cdef double[::1] qv = qq
    cdef double[::1] gv = g
    with nogil:
        f = _value_grad(X, c, qv, gv)
    return f, g


def adam_ascent(const double[:, ::1] X, const double[::1] c, q0, double lr,
                double beta1, double beta2, double eps, int max_iters, double rel_tol):
    cdef Py_ssize_t d = X.shape[1], k, i
    qa = np.array(q0, dtype=np.float64, copy=True)
    best = qa.copy()
    ga = np.empty(d)
    ma = np.zeros(d)
    va = np.zeros(d)
    cdef double[::1] q = qa, bq = best, g = ga, m = ma, v = va
    cdef double f, val, best_val, prev, change, b1t = 1.0, b2t = 1.0, mhat, vhat
    cdef int it = 0, any_c = 0
    for i in range(c.shape[0]):
        if c[i] != 0.0:
            any_c = 1
            break
    with nogil:
        f = _value_grad(X, c, q, g)
        best_val = fabs(f)
        if any_c:
            prev = best_val
            it = 1
            while it <= max_iters:
                b1t = b1t * beta1
                b2t = b2t * beta2
                for k in range(d):
                    m[k] = beta1 * m[k] + (1.0 - beta1) * g[k]
                    v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k]
                    mhat = m[k] / (1.0 - b1t)
                    vhat = v[k] / (1.0 - b2t)
                    q[k] = q[k] + lr * mhat / (sqrt(vhat) + eps)
                f = _value_grad(X, c, q, g)
                val = fabs(f)
                if val > best_val:
                    best_val = val
                    for k in range(d):
                        bq[k] = q[k]
                if prev == 0.0:
                    change = 0.0 if val == 0.0 else INFINITY
                else:
                    change = fabs(val - prev) / prev
                if change < rel_tol:
                    break
                prev = val
                it += 1
            if it > max_iters:
                it = max_iters
    return best, best_val, it
