"""NumPy implementation of the standardized-residual operator products.

The operator is S = W - sqrt_r * sqrt_c^T where W is a CSR matrix holding the
mass-scaled interaction weights.  Both products reduce in a fixed order
(row-major over the stored entries) so results are reproducible regardless of
threading or BLAS configuration.
"""

from __future__ import annotations

import numpy as np

BACKEND = "fallback"


def residual_matvec(indptr, indices, data, sqrt_r, sqrt_c, v):
    """y = W v - sqrt_r * (sqrt_c . v)"""
    n_rows = indptr.shape[0] - 1
    prod = data * v[indices]
    rows = np.repeat(np.arange(n_rows), np.diff(indptr))
    y = np.bincount(rows, weights=prod, minlength=n_rows)
    y -= sqrt_r * float(sqrt_c @ v)
    return y


def residual_rmatvec(indptr, indices, data, sqrt_r, sqrt_c, u):
    """z = W^T u - sqrt_c * (sqrt_r . u)"""
    n_rows = indptr.shape[0] - 1
    n_cols = sqrt_c.shape[0]
    u_per_entry = np.repeat(u, np.diff(indptr))
    z = np.bincount(indices, weights=data * u_per_entry, minlength=n_cols)
    z -= sqrt_c * float(sqrt_r @ u)
    return z
