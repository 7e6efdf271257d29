# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kinematic kernels for the 6-DoF arm.

Same call signatures and results as ``_kernels_py``; all work happens on
C stack arrays so a call costs a few microseconds instead of the ~100 us of
small-matrix numpy code.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, fabs

cnp.import_array()


cdef void _chain(const double[:, ::1] links, const double* q,
                 double* T, double* axes, double* origins) noexcept nogil:
    # T is a row-major 3x4 [R | p]
    cdef int i, r
    cdef double a, ca, sa, ct, st, d, th
    cdef double A[12]
    cdef double N[12]
    for r in range(12):
        T[r] = 0.0
    T[0] = 1.0
    T[5] = 1.0
    T[10] = 1.0
    for i in range(6):
        a = links[i, 0]
        ca = cos(links[i, 1])
        sa = sin(links[i, 1])
        d = links[i, 2]
        th = q[i] + links[i, 3]
        ct = cos(th)
        st = sin(th)
        A[0] = ct
        A[1] = -st
        A[2] = 0.0
        A[3] = a
        A[4] = st * ca
        A[5] = ct * ca
        A[6] = -sa
        A[7] = -sa * d
        A[8] = st * sa
        A[9] = ct * sa
        A[10] = ca
        A[11] = ca * d
        for r in range(3):
            N[4 * r + 0] = T[4 * r] * A[0] + T[4 * r + 1] * A[4] + T[4 * r + 2] * A[8]
            N[4 * r + 1] = T[4 * r] * A[1] + T[4 * r + 1] * A[5] + T[4 * r + 2] * A[9]
            N[4 * r + 2] = T[4 * r] * A[2] + T[4 * r + 1] * A[6] + T[4 * r + 2] * A[10]
            N[4 * r + 3] = (T[4 * r] * A[3] + T[4 * r + 1] * A[7]
                            + T[4 * r + 2] * A[11] + T[4 * r + 3])
        for r in range(12):
            T[r] = N[r]
        for r in range(3):
            axes[3 * i + r] = T[4 * r + 2]
            origins[3 * i + r] = T[4 * r + 3]


cdef void _jacobian(const double* T, const double* axes, const double* origins,
                    double* J) noexcept nogil:
    # J row-major 6x6
    cdef int i
    cdef double rx, ry, rz, zx, zy, zz
    for i in range(6):
        zx = axes[3 * i]
        zy = axes[3 * i + 1]
        zz = axes[3 * i + 2]
        rx = T[3] - origins[3 * i]
        ry = T[7] - origins[3 * i + 1]
        rz = T[11] - origins[3 * i + 2]
        J[0 * 6 + i] = zy * rz - zz * ry
        J[1 * 6 + i] = zz * rx - zx * rz
        J[2 * 6 + i] = zx * ry - zy * rx
        J[3 * 6 + i] = zx
        J[4 * 6 + i] = zy
        J[5 * 6 + i] = zz


cdef double _det6(double* M) noexcept nogil:
    # LU with partial pivoting, destroys M
    cdef int c, r, k, piv
    cdef double best, tmp, det = 1.0, f
    for c in range(6):
        piv = c
        best = fabs(M[c * 6 + c])
        for r in range(c + 1, 6):
            if fabs(M[r * 6 + c]) > best:
                best = fabs(M[r * 6 + c])
                piv = r
        if best == 0.0:
            return 0.0
        if piv != c:
            for k in range(6):
                tmp = M[c * 6 + k]
                M[c * 6 + k] = M[piv * 6 + k]
                M[piv * 6 + k] = tmp
            det = -det
        det *= M[c * 6 + c]
        for r in range(c + 1, 6):
            f = M[r * 6 + c] / M[c * 6 + c]
            for k in range(c + 1, 6):
                M[r * 6 + k] -= f * M[c * 6 + k]
    return det


cdef double _penalty(const double* q, const double[::1] lower,
                     const double[::1] upper, double k_j) noexcept nogil:
    cdef int i
    cdef double prod = 1.0, span, fac
    for i in range(6):
        span = upper[i] - lower[i]
        fac = (q[i] - lower[i]) * (upper[i] - q[i])
        if fac < 0.0:
            fac = 0.0
        prod *= fac / (span * span)
    return 1.0 - exp(-k_j * prod)


cdef double _capability(const double[:, ::1] links, const double* q,
                        const double[::1] lower, const double[::1] upper,
                        double k_j, double* pos, double* m_out,
                        double* p_out) noexcept nogil:
    cdef double T[12]
    cdef double axes[18]
    cdef double origins[18]
    cdef double J[36]
    _chain(links, q, T, axes, origins)
    _jacobian(T, axes, origins, J)
    m_out[0] = fabs(_det6(J))
    p_out[0] = _penalty(q, lower, upper, k_j)
    pos[0] = T[3]
    pos[1] = T[7]
    pos[2] = T[11]
    return m_out[0] * p_out[0]


def fk(q, links):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] lv = np.ascontiguousarray(links, dtype=np.float64)
    cdef double T[12]
    cdef double axes[18]
    cdef double origins[18]
    _chain(lv, &qv[0], T, axes, origins)
    pos = np.array([T[3], T[7], T[11]])
    rot = np.array([[T[0], T[1], T[2]], [T[4], T[5], T[6]], [T[8], T[9], T[10]]])
    return pos, rot


def fk_jacobian(q, links):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] lv = np.ascontiguousarray(links, dtype=np.float64)
    cdef double T[12]
    cdef double axes[18]
    cdef double origins[18]
    jac = np.empty((6, 6))
    cdef double[:, ::1] jv = jac
    _chain(lv, &qv[0], T, axes, origins)
    _jacobian(T, axes, origins, &jv[0, 0])
    pos = np.array([T[3], T[7], T[11]])
    rot = np.array([[T[0], T[1], T[2]], [T[4], T[5], T[6]], [T[8], T[9], T[10]]])
    return pos, rot, jac


def capability(q, links, lower, upper, double k_j):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] lv = np.ascontiguousarray(links, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(upper, dtype=np.float64)
    cdef double pos[3]
    cdef double m, p, c
    c = _capability(lv, &qv[0], lo, hi, k_j, pos, &m, &p)
    return m, p, c


def capability_stencil(q, links, lower, upper, double k_j, double h):
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef double[:, ::1] lv = np.ascontiguousarray(links, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(upper, dtype=np.float64)
    out = np.empty((13, 4))
    cdef double[:, ::1] ov = out
    cdef double qp[6]
    cdef double pos[3]
    cdef double m, p
    cdef int i, j, k, row
    cdef double sign
    with nogil:
        for i in range(6):
            qp[i] = qv[i]
        ov[0, 0] = _capability(lv, qp, lo, hi, k_j, pos, &m, &p)
        ov[0, 1] = pos[0]
        ov[0, 2] = pos[1]
        ov[0, 3] = pos[2]
        for j in range(6):
            for k in range(2):
                sign = 1.0 if k == 0 else -1.0
                qp[j] = qv[j] + sign * h
                row = 1 + 2 * j + k
                ov[row, 0] = _capability(lv, qp, lo, hi, k_j, pos, &m, &p)
                ov[row, 1] = pos[0]
                ov[row, 2] = pos[1]
                ov[row, 3] = pos[2]
            qp[j] = qv[j]
    return out
