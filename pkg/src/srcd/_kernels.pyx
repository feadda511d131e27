# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: jet-term evaluation and the Lie-Euler group step.

Semantics match srcd._numpy_kernels; see that module for documentation.
The group step fuses the per-matrix Pade-13 exponential and the right
multiplication into one pass with stack temporaries, which is where the
speedup over the stacked-numpy route comes from.
"""

import numpy as np

cimport cython
from libc.math cimport ceil, log2, sqrt

BACKEND = "compiled"

DEF MAXD = 8          # largest realization dimension handled by the fused step

ctypedef fused scalar:
    double
    double complex

cdef double _PADE13[14]
_PADE13[:] = [64764752532480000., 32382376266240000., 7771770303897600.,
              1187353796428800., 129060195264000., 10559470521600.,
              670442572800., 33522128640., 1323241920., 40840800.,
              960960., 16380., 182., 1.]
cdef double _THETA13 = 5.371920351148152


def assemble_hessians(double[:, ::1] p, double[:, ::1] tri, double[:, :, ::1] hv,
                      double[:, :, ::1] R, int n):
    cdef Py_ssize_t N = p.shape[0]
    cdef Py_ssize_t d = p.shape[1]
    cdef Py_ssize_t nu = d - n
    out_np = np.empty((N, n, d))
    cdef double[:, :, ::1] H = out_np
    cdef Py_ssize_t k, i, j, s, t
    cdef double anti
    for k in range(N):
        t = 0
        for i in range(n):
            for j in range(i, n):
                H[k, i, j] = tri[k, t]
                if j > i:
                    H[k, j, i] = tri[k, t]
                t += 1
        for i in range(n):
            for j in range(n):
                anti = 0.0
                for s in range(nu):
                    anti += p[k, n + s] * R[i, j, s]
                H[k, i, j] += 0.5 * anti
            for s in range(nu):
                H[k, i, n + s] = hv[k, i, s]
    return out_np


def jet_terms(double[:, ::1] p, double[:, :, ::1] H, double[:, ::1] ric_h,
              double[:, ::1] ric_hv, double[:, :, ::1] R, double[:, :, ::1] nv,
              double[:, ::1] dv, int n):
    cdef Py_ssize_t N = p.shape[0]
    cdef Py_ssize_t d = p.shape[1]
    cdef Py_ssize_t nu = d - n
    out_np = np.empty((N, 13))
    cdef double[:, ::1] out = out_np
    cdef Py_ssize_t k, i, j, s, a, b
    cdef double gh, gv, lf, hess_h, t_rich, t_richv, cross, hess_v, t_nv, t_dv
    cdef double q_h, q_v, cb1, cb2, acc, row
    for k in range(N):
        gh = 0.0
        for i in range(n):
            gh += p[k, i] * p[k, i]
        gv = 0.0
        for s in range(nu):
            gv += p[k, n + s] * p[k, n + s]
        lf = 0.0
        hess_h = 0.0
        for i in range(n):
            lf += H[k, i, i]
            for j in range(n):
                hess_h += H[k, i, j] * H[k, i, j]
        t_rich = 0.0
        for i in range(n):
            for j in range(n):
                t_rich += p[k, i] * ric_h[i, j] * p[k, j]
        t_richv = 0.0
        for a in range(d):
            for b in range(d):
                t_richv += p[k, a] * ric_hv[a, b] * p[k, b]
        cross = 0.0
        hess_v = 0.0
        for i in range(n):
            for s in range(nu):
                acc = 0.0
                for j in range(n):
                    acc += R[i, j, s] * p[k, j]
                cross += H[k, i, n + s] * acc
                hess_v += H[k, i, n + s] * H[k, i, n + s]
        cross *= 2.0
        t_nv = 0.0
        for i in range(n):
            for a in range(d):
                acc = 0.0
                for b in range(d):
                    acc += nv[i, a, b] * H[k, i, b]
                t_nv += p[k, a] * acc
        t_nv *= 2.0
        t_dv = 0.0
        for a in range(d):
            for b in range(d):
                t_dv += dv[a, b] * p[k, a] * p[k, b]
        t_dv *= 0.5
        q_h = 0.0
        q_v = 0.0
        cb1 = 0.0
        cb2 = 0.0
        for i in range(n):
            row = 0.0
            for j in range(n):
                row += H[k, i, j] * p[k, j]
            q_h += row * row
            row = 0.0
            for s in range(nu):
                row += H[k, i, n + s] * p[k, n + s]
            q_v += row * row
            cb1 += p[k, i] * row
        for s in range(nu):
            row = 0.0
            for j in range(n):
                row += H[k, j, n + s] * p[k, j]
            cb2 += p[k, n + s] * row
        out[k, 0] = gh
        out[k, 1] = gv
        out[k, 2] = lf
        out[k, 3] = hess_h
        out[k, 4] = t_rich
        out[k, 5] = t_richv
        out[k, 6] = cross
        out[k, 7] = hess_v
        out[k, 8] = t_nv
        out[k, 9] = t_dv
        out[k, 10] = 4.0 * q_h
        out[k, 11] = 4.0 * q_v
        out[k, 12] = 2.0 * cb1 - 2.0 * cb2
    return out_np


cdef inline void _matmul(scalar* a, scalar* b, scalar* out, int d) noexcept:
    cdef int i, j, l
    cdef scalar acc
    for i in range(d):
        for j in range(d):
            acc = 0
            for l in range(d):
                acc = acc + a[i * d + l] * b[l * d + j]
            out[i * d + j] = acc


cdef inline double _abs2(scalar z) noexcept:
    if scalar is double:
        return z * z
    else:
        return z.real * z.real + z.imag * z.imag


cdef inline int _solve(scalar* m, scalar* rhs, int d) noexcept:
    """Row-reduce m x = rhs (rhs holds d columns, row-major); returns 0 on success."""
    cdef int i, j, k, piv
    cdef double best, mag
    cdef scalar factor, tmp
    for i in range(d):
        piv = i
        best = _abs2(m[i * d + i])
        for k in range(i + 1, d):
            mag = _abs2(m[k * d + i])
            if mag > best:
                best = mag
                piv = k
        if best == 0.0:
            return 1
        if piv != i:
            for j in range(d):
                tmp = m[i * d + j]; m[i * d + j] = m[piv * d + j]; m[piv * d + j] = tmp
                tmp = rhs[i * d + j]; rhs[i * d + j] = rhs[piv * d + j]; rhs[piv * d + j] = tmp
        for k in range(i + 1, d):
            factor = m[k * d + i] / m[i * d + i]
            for j in range(i, d):
                m[k * d + j] = m[k * d + j] - factor * m[i * d + j]
            for j in range(d):
                rhs[k * d + j] = rhs[k * d + j] - factor * rhs[i * d + j]
    for i in range(d - 1, -1, -1):
        for k in range(i - 1, -1, -1):
            factor = m[k * d + i] / m[i * d + i]
            for j in range(d):
                rhs[k * d + j] = rhs[k * d + j] - factor * rhs[i * d + j]
        for j in range(d):
            rhs[i * d + j] = rhs[i * d + j] / m[i * d + i]
    return 0


cdef int _expm_one(scalar* a, scalar* out, int d) noexcept:
    """out = expm(a) via Pade-13 with scaling and squaring."""
    cdef scalar a2[MAXD * MAXD]
    cdef scalar a4[MAXD * MAXD]
    cdef scalar a6[MAXD * MAXD]
    cdef scalar u[MAXD * MAXD]
    cdef scalar v[MAXD * MAXD]
    cdef scalar w[MAXD * MAXD]
    cdef scalar vm[MAXD * MAXD]
    cdef int i, j, k, s
    cdef double norm1, colsum, scale
    norm1 = 0.0
    for j in range(d):
        colsum = 0.0
        for i in range(d):
            colsum += sqrt(_abs2(a[i * d + j]))
        if colsum > norm1:
            norm1 = colsum
    s = 0
    if norm1 > _THETA13:
        s = <int>ceil(log2(norm1 / _THETA13))
    scale = 1.0
    for i in range(s):
        scale *= 0.5
    for i in range(d * d):
        a[i] = a[i] * scale
    _matmul(a, a, a2, d)
    _matmul(a2, a2, a4, d)
    _matmul(a4, a2, a6, d)
    # w = b13 a6 + b11 a4 + b9 a2; u = a (a6 w + b7 a6 + b5 a4 + b3 a2 + b1 I)
    for i in range(d * d):
        w[i] = _PADE13[13] * a6[i] + _PADE13[11] * a4[i] + _PADE13[9] * a2[i]
    _matmul(a6, w, u, d)
    for i in range(d * d):
        u[i] = u[i] + _PADE13[7] * a6[i] + _PADE13[5] * a4[i] + _PADE13[3] * a2[i]
    for i in range(d):
        u[i * d + i] = u[i * d + i] + _PADE13[1]
    _matmul(a, u, w, d)          # w = U
    for i in range(d * d):
        v[i] = _PADE13[12] * a6[i] + _PADE13[10] * a4[i] + _PADE13[8] * a2[i]
    _matmul(a6, v, u, d)
    for i in range(d * d):
        v[i] = u[i] + _PADE13[6] * a6[i] + _PADE13[4] * a4[i] + _PADE13[2] * a2[i]
    for i in range(d):
        v[i * d + i] = v[i * d + i] + _PADE13[0]
    # solve (V - U) F = (V + U)
    for i in range(d * d):
        vm[i] = v[i] - w[i]
        out[i] = v[i] + w[i]
    if _solve(vm, out, d) != 0:
        return 1
    for k in range(s):
        _matmul(out, out, u, d)
        for i in range(d * d):
            out[i] = u[i]
    return 0


def step_expmul(scalar[:, :, ::1] g, scalar[:, :, ::1] m):
    """g[k] <- g[k] @ expm(m[k]) for every k, in place."""
    cdef Py_ssize_t N = g.shape[0]
    cdef int d = <int>g.shape[1]
    if d > MAXD:
        raise ValueError(f"fused step supports dimension <= {MAXD}, got {d}")
    cdef scalar buf[MAXD * MAXD]
    cdef scalar e[MAXD * MAXD]
    cdef scalar prod[MAXD * MAXD]
    cdef Py_ssize_t k
    cdef int i, j
    for k in range(N):
        for i in range(d):
            for j in range(d):
                buf[i * d + j] = m[k, i, j]
        if _expm_one(buf, e, d) != 0:
            raise ArithmeticError("singular Pade denominator in matrix exponential")
        for i in range(d):
            for j in range(d):
                prod[i * d + j] = g[k, i, j]
        _matmul(prod, e, buf, d)
        for i in range(d):
            for j in range(d):
                g[k, i, j] = buf[i * d + j]
    return np.asarray(g)
