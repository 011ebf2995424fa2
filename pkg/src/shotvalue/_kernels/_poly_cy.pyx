# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of _poly_np: batch polynomial kernels in C loops.

Semantics must match the numpy fallback bit-for-branch: same degree-drop
threshold, same Newton polishing, same selection rules.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, cbrt, cos, acos, isfinite, NAN, INFINITY, M_PI

cnp.import_array()

cdef double DEGREE_DROP = 1e-12
cdef int NEWTON_STEPS = 3


def poly_eval(coeffs, t):
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef const double[::1] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = ((c[i, 3] * tt[i] + c[i, 2]) * tt[i] + c[i, 1]) * tt[i] + c[i, 0]
    return out


def poly_deriv(coeffs, t):
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef const double[::1] tt = np.ascontiguousarray(t, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = (3.0 * c[i, 3] * tt[i] + 2.0 * c[i, 2]) * tt[i] + c[i, 1]
    return out


cdef inline int _row_real_roots(double c0, double c1, double c2, double c3,
                                double* r) noexcept nogil:
    """Real roots of one row into r[0..2]; returns the count."""
    cdef double scale, b, cc, d, p, q, shift, disc, sq, u, v, m, arg, theta, qq
    cdef double r1, r2
    scale = fabs(c0)
    if fabs(c1) > scale: scale = fabs(c1)
    if fabs(c2) > scale: scale = fabs(c2)
    if fabs(c3) > scale: scale = fabs(c3)
    if scale == 0.0:
        return 0
    if fabs(c3) > DEGREE_DROP * scale:
        b = c2 / c3
        cc = c1 / c3
        d = c0 / c3
        p = cc - b * b / 3.0
        q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d
        shift = -b / 3.0
        disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0)
        if disc > 0.0:
            sq = sqrt(disc)
            u = cbrt(-q / 2.0 + sq)
            v = cbrt(-q / 2.0 - sq)
            r[0] = u + v + shift
            return 1
        m = -p / 3.0
        m = sqrt(m if m > 0.0 else 0.0)
        if m > 0.0:
            arg = 3.0 * q / (2.0 * p * m)
        else:
            arg = 0.0
        if arg > 1.0: arg = 1.0
        if arg < -1.0: arg = -1.0
        theta = acos(arg) / 3.0
        r[0] = 2.0 * m * cos(theta) + shift
        r[1] = 2.0 * m * cos(theta - 2.0 * M_PI / 3.0) + shift
        r[2] = 2.0 * m * cos(theta - 4.0 * M_PI / 3.0) + shift
        return 3
    if fabs(c2) > DEGREE_DROP * scale:
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            return 0
        sq = sqrt(disc)
        qq = -0.5 * (c1 + (sq if c1 >= 0.0 else -sq))
        r1 = qq / c2
        if qq != 0.0:
            r2 = c0 / qq
        else:
            r2 = -c1 / c2 - r1
        r[0] = r1
        r[1] = r2
        return 2
    if fabs(c1) > DEGREE_DROP * scale:
        r[0] = -c0 / c1
        return 1
    return 0


cdef inline double _newton(double c0, double c1, double c2, double c3,
                           double x) noexcept nogil:
    cdef int it
    cdef double f, fp
    for it in range(NEWTON_STEPS):
        f = ((c3 * x + c2) * x + c1) * x + c0
        fp = (3.0 * c3 * x + 2.0 * c2) * x + c1
        if fp != 0.0 and isfinite(f / fp):
            x = x - f / fp
    return x


def smallest_root_in(coeffs, double lo, hi):
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], i
    cdef const double[::1] hh = np.ascontiguousarray(
        np.broadcast_to(np.asarray(hi, dtype=np.float64), (n,)))
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double r[3]
    cdef int cnt, j
    cdef double best, x
    for i in range(n):
        cnt = _row_real_roots(c[i, 0], c[i, 1], c[i, 2], c[i, 3], r)
        best = INFINITY
        for j in range(cnt):
            x = _newton(c[i, 0], c[i, 1], c[i, 2], c[i, 3], r[j])
            if isfinite(x) and x > lo and x <= hh[i] and x < best:
                best = x
        o[i] = best if isfinite(best) else NAN
    return out


def first_local_max(coeffs):
    cdef const double[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double r[3]
    cdef int cnt, j
    cdef double d0, d1, d2, best, x, f, fp, curv
    cdef int it
    for i in range(n):
        # Derivative rows: d0 + d1 t + d2 t^2.
        d0 = c[i, 1]
        d1 = 2.0 * c[i, 2]
        d2 = 3.0 * c[i, 3]
        cnt = _row_real_roots(d0, d1, d2, 0.0, r)
        best = INFINITY
        for j in range(cnt):
            x = r[j]
            for it in range(NEWTON_STEPS):
                f = (d2 * x + d1) * x + d0
                fp = 2.0 * d2 * x + d1
                if fp != 0.0 and isfinite(f / fp):
                    x = x - f / fp
            curv = 2.0 * d2 * x + d1
            if isfinite(x) and x >= 0.0 and curv < 0.0 and x < best:
                best = x
        o[i] = best if isfinite(best) else NAN
    return out
