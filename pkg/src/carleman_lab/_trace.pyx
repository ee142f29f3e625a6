# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backward characteristic tracer.  Same algorithm as ``_trace_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fmax

cnp.import_array()

DEF MAX_BISECT = 200
DEF MAXD = 3


cdef inline Py_ssize_t _segment(const double[::1] knots, double s) noexcept nogil:
    # largest k with knots[k] <= s, clipped to [0, K - 2]
    cdef Py_ssize_t lo = 0, hi = knots.shape[0] - 1, mid
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if knots[mid] <= s:
            lo = mid
        else:
            hi = mid
    return lo


cdef inline void _path(const double[:, ::1] nodes, Py_ssize_t n, Py_ssize_t d,
                       const double[::1] knots, const double[:, ::1] X,
                       const double[:, ::1] H, Py_ssize_t i_end, double s,
                       double* y) noexcept nogil:
    cdef Py_ssize_t k = _segment(knots, s), c
    cdef double h = knots[k + 1] - knots[k]
    cdef double tau = (s - knots[k]) / h
    cdef double tau2 = tau * tau
    cdef double tau3 = tau2 * tau
    cdef double h00 = 2 * tau3 - 3 * tau2 + 1
    cdef double h10 = tau3 - 2 * tau2 + tau
    cdef double h01 = -2 * tau3 + 3 * tau2
    cdef double h11 = tau3 - tau2
    cdef double xs
    for c in range(d):
        xs = h00 * X[k, c] + h10 * h * H[k, c] + h01 * X[k + 1, c] + h11 * h * H[k + 1, c]
        y[c] = nodes[n, c] - (X[i_end, c] - xs)


cdef inline double _level(double* y, Py_ssize_t d, int code, const double[::1] center,
                          double radius, const double[:, ::1] A,
                          const double[::1] b) noexcept nogil:
    cdef Py_ssize_t c, r
    cdef double acc, best
    if code == 0:
        acc = 0.0
        for c in range(d):
            acc += (y[c] - center[c]) * (y[c] - center[c])
        return sqrt(acc) - radius
    best = -1e300
    for r in range(A.shape[0]):
        acc = 0.0
        for c in range(d):
            acc += y[c] * A[r, c]
        acc -= b[r]
        if acc > best:
            best = acc
    return best


def trace_backward(nodes, knots, X, H, Py_ssize_t i_end, Py_ssize_t i_start,
                   double hstar, double dmin, int code, center, double radius, A, b,
                   double tol_in=1e-12, double time_tol=1e-12):
    cdef const double[:, ::1] nv = np.ascontiguousarray(nodes, dtype=np.float64)
    cdef const double[::1] kv = np.ascontiguousarray(knots, dtype=np.float64)
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Hv = np.ascontiguousarray(H, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(center, dtype=np.float64)
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64).reshape(-1, nv.shape[1])
    cdef const double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)

    cdef Py_ssize_t N = nv.shape[0], d = nv.shape[1], n, c, it
    if d > MAXD:
        raise ValueError("dimension too large for the compiled tracer")
    foot_arr = np.array(nodes, dtype=np.float64, copy=True, order="C")
    time_arr = np.full(N, kv[i_start])
    hit_arr = np.zeros(N, dtype=np.int8)
    cdef double[:, ::1] foot = foot_arr
    cdef double[::1] ftime = time_arr
    cdef signed char[::1] hit = hit_arr

    cdef double t_end = kv[i_end], t0 = kv[i_start]
    cdef double s_in, s_try, lev, lt, lo, hi, mid
    cdef double y[MAXD]
    cdef bint found

    with nogil:
        for n in range(N):
            if t_end <= t0:
                continue
            s_in = t_end
            for c in range(d):
                y[c] = nv[n, c]
            lev = _level(y, d, code, cv, radius, Av, bv)
            found = False
            while True:
                s_try = s_in - fmax(-lev / hstar, dmin)
                if s_try < t0:
                    s_try = t0
                _path(nv, n, d, kv, Xv, Hv, i_end, s_try, y)
                lt = _level(y, d, code, cv, radius, Av, bv)
                if lt > tol_in:
                    found = True
                    break
                if s_try <= t0:
                    for c in range(d):
                        foot[n, c] = y[c]
                    ftime[n] = t0
                    break
                s_in = s_try
                lev = lt
            if found:
                lo = s_try
                hi = s_in
                for it in range(MAX_BISECT):
                    if hi - lo <= time_tol:
                        break
                    mid = 0.5 * (lo + hi)
                    _path(nv, n, d, kv, Xv, Hv, i_end, mid, y)
                    if _level(y, d, code, cv, radius, Av, bv) > tol_in:
                        lo = mid
                    else:
                        hi = mid
                _path(nv, n, d, kv, Xv, Hv, i_end, hi, y)
                for c in range(d):
                    foot[n, c] = y[c]
                ftime[n] = hi
                hit[n] = 1
    return foot_arr, time_arr, hit_arr
