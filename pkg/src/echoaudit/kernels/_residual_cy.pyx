# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the standardized-residual operator products.

Single-threaded on purpose: the reduction order is fixed (row-major over the
stored entries), so results match the NumPy fallback to rounding and never
depend on thread count.
"""

import numpy as np

BACKEND = "compiled"


def residual_matvec(long[::1] indptr, long[::1] indices, double[::1] data,
                    double[::1] sqrt_r, double[::1] sqrt_c, double[::1] v):
    """y = W v - sqrt_r * (sqrt_c . v), fused in one pass over the CSR data."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t n_cols = sqrt_c.shape[0]
    out = np.empty(n_rows, dtype=np.float64)
    cdef double[::1] y = out
    cdef double s = 0.0
    cdef double acc
    cdef Py_ssize_t i, k
    for k in range(n_cols):
        s += sqrt_c[k] * v[k]
    for i in range(n_rows):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * v[indices[k]]
        y[i] = acc - sqrt_r[i] * s
    return out


def residual_rmatvec(long[::1] indptr, long[::1] indices, double[::1] data,
                     double[::1] sqrt_r, double[::1] sqrt_c, double[::1] u):
    """z = W^T u - sqrt_c * (sqrt_r . u), fused in one pass over the CSR data."""
    cdef Py_ssize_t n_rows = indptr.shape[0] - 1
    cdef Py_ssize_t n_cols = sqrt_c.shape[0]
    out = np.zeros(n_cols, dtype=np.float64)
    cdef double[::1] z = out
    cdef double s = 0.0
    cdef double ui
    cdef Py_ssize_t i, k
    for i in range(n_rows):
        s += sqrt_r[i] * u[i]
        ui = u[i]
        for k in range(indptr[i], indptr[i + 1]):
            z[indices[k]] += data[k] * ui
    for k in range(n_cols):
        z[k] -= sqrt_c[k] * s
    return out
