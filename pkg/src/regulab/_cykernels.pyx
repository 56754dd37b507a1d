# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil kernels (hot loops of the wide-stencil solver).

Semantics match regulab.kernels._py exactly; the numpy fallback is selected
at import when this extension is unavailable.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def second_diffs(double[::1] u,
                 long[:, ::1] nbp, long[:, ::1] nbm,
                 double[:, ::1] wpz, double[:, ::1] wmz,
                 double[:, ::1] w0, double[:, ::1] bconst):
    cdef Py_ssize_t n = u.shape[0]
    cdef Py_ssize_t D = nbp.shape[1]
    out = np.empty((n, D), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, d
    cdef double ui
    for i in range(n):
        ui = u[i]
        for d in range(D):
            o[i, d] = (wpz[i, d] * u[nbp[i, d]] + wmz[i, d] * u[nbm[i, d]]
                       - w0[i, d] * ui + bconst[i, d])
    return out


def combine_pucci(double[:, ::1] delta, long[:, ::1] frames,
                  double lam, double Lam, bint take_max):
    cdef Py_ssize_t n = delta.shape[0]
    cdef Py_ssize_t D = delta.shape[1]
    cdef Py_ssize_t F = frames.shape[0]
    value = np.empty(n, dtype=np.float64)
    gamma = np.zeros((n, D), dtype=np.float64)
    cdef double[::1] val = value
    cdef double[:, ::1] gam = gamma
    cdef Py_ssize_t i, f, e0, e1, best
    cdef double d0, d1, s, bestv, c_hi, c_lo
    if take_max:
        c_hi = Lam
        c_lo = lam
    else:
        c_hi = lam
        c_lo = Lam
    for i in range(n):
        best = 0
        bestv = 0.0
        for f in range(F):
            e0 = frames[f, 0]
            e1 = frames[f, 1]
            d0 = delta[i, e0]
            d1 = delta[i, e1]
            s = (c_hi * d0 if d0 >= 0.0 else c_lo * d0) + (
                c_hi * d1 if d1 >= 0.0 else c_lo * d1
            )
            if f == 0 or (take_max and s > bestv) or (not take_max and s < bestv):
                bestv = s
                best = f
        val[i] = bestv
        e0 = frames[best, 0]
        e1 = frames[best, 1]
        gam[i, e0] = c_hi if delta[i, e0] >= 0.0 else c_lo
        gam[i, e1] = c_hi if delta[i, e1] >= 0.0 else c_lo
    return value, gamma


def combine_isaacs(double[:, ::1] delta, double[:, :, ::1] W):
    cdef Py_ssize_t nj = W.shape[0]
    cdef Py_ssize_t nk = W.shape[1]
    cdef Py_ssize_t D = W.shape[2]
    cdef Py_ssize_t n = delta.shape[0]
    value = np.empty(n, dtype=np.float64)
    gamma = np.empty((n, D), dtype=np.float64)
    cdef double[::1] val = value
    cdef double[:, ::1] gam = gamma
    cdef Py_ssize_t i, j, k, e, bj, bk, kk
    cdef double s, inner, outer
    cdef long[::1] kstar = np.zeros(nj, dtype=np.int64)
    for i in range(n):
        outer = 0.0
        bj = 0
        for j in range(nj):
            inner = 0.0
            bk = 0
            for k in range(nk):
                s = 0.0
                for e in range(D):
                    s += W[j, k, e] * delta[i, e]
                if k == 0 or s > inner:
                    inner = s
                    bk = k
            kstar[j] = bk
            if j == 0 or inner < outer:
                outer = inner
                bj = j
        val[i] = outer
        kk = kstar[bj]
        for e in range(D):
            gam[i, e] = W[bj, kk, e]
    return value, gamma


def combine_linear(double[:, ::1] delta, double[::1] weights):
    cdef Py_ssize_t n = delta.shape[0]
    cdef Py_ssize_t D = delta.shape[1]
    value = np.empty(n, dtype=np.float64)
    gamma = np.empty((n, D), dtype=np.float64)
    cdef double[::1] val = value
    cdef double[:, ::1] gam = gamma
    cdef Py_ssize_t i, e
    cdef double s
    for i in range(n):
        s = 0.0
        for e in range(D):
            s += delta[i, e] * weights[e]
            gam[i, e] = weights[e]
        val[i] = s
    return value, gamma


def relax_step(double[:] u, double[:] residual, double[:] diag_scale,
               double omega):
    cdef Py_ssize_t n = u.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = u[i] + omega * residual[i] / diag_scale[i]
    return out
