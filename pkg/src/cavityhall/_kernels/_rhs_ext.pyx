# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled right-hand-side kernels; same contract as ``_numpy``.

All work arrays are C-contiguous ``n x n`` blocks addressed through flat
pointers, ``n = L*L``.
"""

import numpy as np

from scipy.linalg.cython_blas cimport zgemm

ctypedef double complex cplx

DEF COHERENT = 1
DEF DISSIPATIVE = 2
DEF FLUCTUATION = 4


cdef inline cplx _conj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef void _l1(const cplx* r, cplx* out, int L, double lam, double om,
              const cplx* ph) noexcept nogil:
    # out = v1^T r : row a takes lam*r[a+x] + om*ph[i]*r[a+y]
    cdef int n = L * L
    cdef int a, b, i, j
    cdef cplx w
    cdef cplx* o
    for a in range(n):
        i = a // L
        j = a % L
        o = out + a * n
        for b in range(n):
            o[b] = 0
        if i < L - 1:
            for b in range(n):
                o[b] = o[b] + lam * r[(a + L) * n + b]
        if j < L - 1:
            w = om * ph[i]
            for b in range(n):
                o[b] = o[b] + w * r[(a + 1) * n + b]


cdef void _l2(const cplx* r, cplx* out, int L, double lam, double om,
              const cplx* ph) noexcept nogil:
    # out = v2^T r : row a takes lam*r[a-x] + om*conj(ph[i])*r[a-y]
    cdef int n = L * L
    cdef int a, b, i, j
    cdef cplx w
    cdef cplx* o
    for a in range(n):
        i = a // L
        j = a % L
        o = out + a * n
        for b in range(n):
            o[b] = 0
        if i > 0:
            for b in range(n):
                o[b] = o[b] + lam * r[(a - L) * n + b]
        if j > 0:
            w = om * _conj(ph[i])
            for b in range(n):
                o[b] = o[b] + w * r[(a - 1) * n + b]


cdef void _r1(const cplx* r, cplx* out, int L, double lam, double om,
              const cplx* ph) noexcept nogil:
    # out = r v1^T : column b takes lam*r[:, b-x] + om*ph[i_b]*r[:, b-y]
    cdef int n = L * L
    cdef int a, b, i, j
    cdef const cplx* row
    cdef cplx* o
    for a in range(n):
        row = r + a * n
        o = out + a * n
        for b in range(n):
            i = b // L
            j = b % L
            o[b] = 0
            if i > 0:
                o[b] = o[b] + lam * row[b - L]
            if j > 0:
                o[b] = o[b] + om * ph[i] * row[b - 1]


cdef void _r2(const cplx* r, cplx* out, int L, double lam, double om,
              const cplx* ph) noexcept nogil:
    # out = r v2^T : column b takes lam*r[:, b+x] + om*conj(ph[i_b])*r[:, b+y]
    cdef int n = L * L
    cdef int a, b, i, j
    cdef const cplx* row
    cdef cplx* o
    for a in range(n):
        row = r + a * n
        o = out + a * n
        for b in range(n):
            i = b // L
            j = b % L
            o[b] = 0
            if i < L - 1:
                o[b] = o[b] + lam * row[b + L]
            if j < L - 1:
                o[b] = o[b] + om * _conj(ph[i]) * row[b + 1]


def density_rhs(rho, cplx alpha, int L, double lam, double om, phases, double K, int parts=7):
    cdef int n = L * L
    cdef const cplx[:, ::1] r_mv = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef const cplx[::1] ph_mv = np.ascontiguousarray(phases, dtype=np.complex128)
    result = np.zeros((n, n), dtype=np.complex128)
    work = np.empty((4, n, n), dtype=np.complex128)
    cdef cplx[:, ::1] out_mv = result
    cdef cplx[:, :, ::1] work_mv = work

    cdef const cplx* r = &r_mv[0, 0]
    cdef const cplx* ph = &ph_mv[0]
    cdef cplx* out = &out_mv[0, 0]
    cdef cplx* a1 = &work_mv[0, 0, 0]
    cdef cplx* t1 = &work_mv[1, 0, 0]
    cdef cplx* t2 = &work_mv[2, 0, 0]
    cdef cplx* x = &work_mv[3, 0, 0]
    cdef cplx ac = _conj(alpha)
    cdef cplx one = 1.0, zero = 0.0
    cdef char tn = b'N'
    cdef int a, b, k, nn = n * n

    with nogil:
        _l1(r, a1, L, lam, om, ph)
        if parts & COHERENT:
            _l2(r, t1, L, lam, om, ph)
            for k in range(nn):
                out[k] = out[k] - 1j * (ac * a1[k] + alpha * t1[k])
            _r1(r, t1, L, lam, om, ph)
            _r2(r, t2, L, lam, om, ph)
            for k in range(nn):
                out[k] = out[k] + 1j * (ac * t1[k] + alpha * t2[k])
        if parts & DISSIPATIVE:
            _l2(a1, t1, L, lam, om, ph)
            _r2(r, t2, L, lam, om, ph)
            _r1(t2, x, L, lam, om, ph)
            _r2(a1, t2, L, lam, om, ph)
            for k in range(nn):
                out[k] = out[k] - K * (t1[k] + x[k]) + 2 * K * t2[k]
        if parts & FLUCTUATION:
            # x = v2^T r v1^T - v1^T r v2^T ; out += K (r x + x r)
            _l2(r, t1, L, lam, om, ph)
            _r1(t1, x, L, lam, om, ph)
            _r2(a1, t2, L, lam, om, ph)
            for k in range(nn):
                x[k] = x[k] - t2[k]
            # x is Hermitian, so r x + x r = P + P^dagger with P = r x.
            # BLAS is column-major: the row-major product r x is x^T r^T there.
            zgemm(&tn, &tn, &n, &n, &n, &one, x, &n, <cplx*>r, &n, &zero, t1, &n)
            for a in range(n):
                for b in range(n):
                    out[a * n + b] = out[a * n + b] + K * (t1[a * n + b] + _conj(t1[b * n + a]))
    return result


def cavity_drive(rho, int L, double lam, double om, phases):
    cdef const cplx[:, ::1] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef const cplx[::1] ph = np.ascontiguousarray(phases, dtype=np.complex128)
    cdef cplx sx = 0
    cdef cplx sy = 0
    cdef int n = L * L
    cdef int a, i, j
    for a in range(n):
        i = a // L
        j = a % L
        if i < L - 1:
            sx += r[a + L, a]
        if j < L - 1:
            sy += ph[i] * r[a + 1, a]
    return lam * sx + om * sy
