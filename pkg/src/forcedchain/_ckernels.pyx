# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the hot loops. See ``_pykernels`` for documentation."""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs
from libc.stdlib cimport malloc, free

from .errors import SingularPivotError

cnp.import_array()

cdef double _PIVOT_FLOOR = 1e-14


cdef inline double cabs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


def shifted_tridiag_solve(c, rhs):
    cdef double complex[::1] cv = np.ascontiguousarray(c, dtype=np.complex128)
    cdef double complex[:, ::1] r = np.ascontiguousarray(rhs, dtype=np.complex128)
    cdef Py_ssize_t k = r.shape[0], m = r.shape[1], row, i
    if m < 2:
        raise ValueError("need at least two sites")
    out = np.empty((k, m), dtype=np.complex128)
    cdef double complex[:, ::1] u = out
    cdef double complex[::1] cp = np.empty(m, dtype=np.complex128)
    cdef double complex piv, cc
    cdef double scale
    for row in range(k):
        cc = cv[row]
        scale = max(abs(cc) + 2.0, 1.0)
        for i in range(m):
            if i == 0:
                piv = cc + 1.0
            elif i == m - 1:
                piv = cc + 1.0 + cp[i - 1]
            else:
                piv = cc + 2.0 + cp[i - 1]
            if cabs2(piv) <= (_PIVOT_FLOOR * scale) ** 2:
                raise SingularPivotError(f"pivot {i} vanished for shift {cc}")
            cp[i] = -1.0 / piv
            if i == 0:
                u[row, i] = r[row, i] / piv
            else:
                u[row, i] = (r[row, i] + u[row, i - 1]) / piv
        for i in range(m - 2, -1, -1):
            u[row, i] = u[row, i] - cp[i] * u[row, i + 1]
    return out


cdef void _replica(double[::1] q, double[::1] p, const double[::1] force,
                   const double[:, :, ::1] uflip, const double[:, ::1] gauss,
                   double h, double w2, double flip_prob, double ou_decay, double ou_amp,
                   double t_minus, double gamma, bint measure,
                   double[::1] acc_p2, double[::1] acc_j, Py_ssize_t stride,
                   double[:, ::1] acc_q, double[:, ::1] acc_p, Py_ssize_t step0,
                   double* a) noexcept nogil:
    cdef Py_ssize_t m = q.shape[0], n = m - 1, steps = uflip.shape[0]
    cdef Py_ssize_t S = force.shape[0] - 1
    cdef Py_ssize_t s, x, k = step0, slot
    cdef double hh = 0.5 * h
    for s in range(steps):
        for x in range(1, m):
            if uflip[s, 0, x - 1] < flip_prob:
                p[x] = -p[x]
        p[0] = p[0] * ou_decay + ou_amp * gauss[s, 0]

        for x in range(m):
            a[x] = -w2 * q[x]
        for x in range(n):
            a[x] += q[x + 1] - q[x]
        for x in range(n):
            a[x + 1] -= q[x + 1] - q[x]
        a[n] += force[k]
        for x in range(m):
            p[x] += hh * a[x]
            q[x] += h * p[x]
        for x in range(m):
            a[x] = -w2 * q[x]
        for x in range(n):
            a[x] += q[x + 1] - q[x]
        for x in range(n):
            a[x + 1] -= q[x + 1] - q[x]
        a[n] += force[k + 1]
        for x in range(m):
            p[x] += hh * a[x]

        p[0] = p[0] * ou_decay + ou_amp * gauss[s, 1]
        for x in range(1, m):
            if uflip[s, 1, x - 1] < flip_prob:
                p[x] = -p[x]
        k += 1
        if k == S:
            k = 0
        if measure:
            for x in range(m):
                acc_p2[x] += p[x] * p[x]
            acc_j[0] += 2.0 * gamma * (t_minus - p[0] * p[0])
            for x in range(n):
                acc_j[x + 1] -= p[x] * (q[x + 1] - q[x])
            acc_j[m] -= force[k] * p[n]
            if stride > 0 and k % stride == 0:
                slot = k // stride
                for x in range(m):
                    acc_q[slot, x] += q[x]
                    acc_p[slot, x] += p[x]


def splitting_chunk(q, p, force, uflip, gauss, double h, double omega0, double flip_prob,
                    double ou_decay, double ou_amp, double t_minus, double gamma, bint measure,
                    acc_p2, acc_j, Py_ssize_t phase_stride, acc_q, acc_p, Py_ssize_t step0,
                    int threads=1):
    cdef double[:, ::1] qv = q
    cdef double[:, ::1] pv = p
    cdef const double[::1] fv = np.ascontiguousarray(force, dtype=np.float64)
    cdef const double[:, :, :, ::1] uv = np.ascontiguousarray(uflip, dtype=np.float64)
    cdef const double[:, :, ::1] gv = np.ascontiguousarray(gauss, dtype=np.float64)
    cdef double[:, ::1] ap2 = acc_p2
    cdef double[:, ::1] aj = acc_j
    cdef double[:, :, ::1] aq = acc_q
    cdef double[:, :, ::1] ap = acc_p
    cdef Py_ssize_t R = qv.shape[0], m = qv.shape[1], r
    cdef Py_ssize_t steps = uv.shape[1], S = fv.shape[0] - 1
    cdef double w2 = omega0 * omega0
    cdef double* work = <double*> malloc(R * m * sizeof(double))
    if work == NULL:
        raise MemoryError()
    try:
        for r in prange(R, nogil=True, num_threads=max(threads, 1), schedule="static"):
            _replica(qv[r], pv[r], fv, uv[r], gv[r], h, w2, flip_prob, ou_decay, ou_amp,
                     t_minus, gamma, measure, ap2[r], aj[r], phase_stride, aq[r], ap[r],
                     step0, work + r * m)
    finally:
        free(work)
    return (step0 + steps) % S
