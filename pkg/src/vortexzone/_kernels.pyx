# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pairwise sums for the vortex-blob simulator.

Every target accumulates its sources in index order with Neumaier's
compensated summation.  The arithmetic matches ``_kernels_py`` operation by
operation, so both backends agree bit for bit when the C compiler does not
contract multiply-adds (the extension is built with ``-ffp-contract=off``).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, log

cnp.import_array()


cdef inline void _neumaier(double x, double* s, double* c) noexcept nogil:
    cdef double t = s[0] + x
    # branch-free selection so the target loop vectorizes
    c[0] += ((s[0] - t) + x) if fabs(s[0]) >= fabs(x) else ((x - t) + s[0])
    s[0] = t


def induced_velocity(const double[::1] tx, const double[::1] ty,
                     const double[::1] sx, const double[::1] sy,
                     const double[::1] w, double delta):
    """Return (u, v) with u + iv = (1/2pi) sum_j w_j i(x - x_j) / (|x - x_j|^2 + delta^2)."""
    cdef Py_ssize_t nt = tx.shape[0]
    cdef Py_ssize_t ns = sx.shape[0]
    cdef Py_ssize_t i, j
    cdef double d2 = delta * delta
    cdef double inv2pi = 1.0 / (2.0 * np.pi)
    cdef double dx, dy, r2, q, xj, yj, wj
    u_arr = np.zeros(nt, dtype=np.float64)
    v_arr = np.zeros(nt, dtype=np.float64)
    cu_arr = np.zeros(nt, dtype=np.float64)
    cv_arr = np.zeros(nt, dtype=np.float64)
    cdef double[::1] su = u_arr
    cdef double[::1] sv = v_arr
    cdef double[::1] cu = cu_arr
    cdef double[::1] cv = cv_arr
    with nogil:
        # sources outside, targets inside: each target still sees its sources in index order
        for j in range(ns):
            xj = sx[j]
            yj = sy[j]
            wj = w[j]
            for i in range(nt):
                dx = tx[i] - xj
                dy = ty[i] - yj
                r2 = dx * dx + dy * dy + d2
                q = wj / r2 if r2 != 0.0 else 0.0
                _neumaier(-dy * q, &su[i], &cu[i])
                _neumaier(dx * q, &sv[i], &cv[i])
        for i in range(nt):
            su[i] = (su[i] + cu[i]) * inv2pi
            sv[i] = (sv[i] + cv[i]) * inv2pi
    return u_arr, v_arr


def log_energy_rows(const double[::1] x, const double[::1] y,
                    const double[::1] w, double delta):
    """Row sums r_i = sum_{j != i, r_ij^2 + delta^2 > 0} w_j log(|z_i - z_j|^2 + delta^2)."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j
    cdef double d2 = delta * delta
    cdef double dx, dy, r2, term
    rows_arr = np.zeros(n, dtype=np.float64)
    comp_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] s = rows_arr
    cdef double[::1] c = comp_arr
    with nogil:
        for j in range(n):
            for i in range(n):
                dx = x[i] - x[j]
                dy = y[i] - y[j]
                r2 = dx * dx + dy * dy + d2
                term = w[j] * log(r2) if (r2 != 0.0 and i != j) else 0.0
                _neumaier(term, &s[i], &c[i])
        for i in range(n):
            s[i] = s[i] + c[i]
    return rows_arr
