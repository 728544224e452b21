"""Compiled inner loops: Sturm sequence and banded LDL^T inertia."""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def sturm_count(diag, off, lam, tiny):
    """Negative pivots of T - lam I for symmetric tridiagonal T.

    Returns (count, smallest |pivot|).  A pivot below ``tiny`` is flagged by
    returning count = -1; the caller shifts lam and retries.
    """
    n = diag.shape[0]
    count = 0
    d = diag[0] - lam
    dmin = abs(d)
    if dmin < tiny:
        return -1, dmin
    if d < 0.0:
        count += 1
    for i in range(1, n):
        d = (diag[i] - lam) - off[i - 1] * off[i - 1] / d
        ad = abs(d)
        if ad < dmin:
            dmin = ad
        if ad < tiny:
            return -1, dmin
        if d < 0.0:
            count += 1
    return count, dmin


@njit(cache=True, nogil=True)
def banded_ldlt_inertia(ab, tol):
    """Count negative pivots of a symmetric banded matrix, no pivoting.

    ``ab`` is lower band storage, ab[d, j] = A[j + d, j], and is overwritten.
    Returns (negatives, breakdown_index) with breakdown_index = -1 on success.
    """
    bw = ab.shape[0] - 1
    n = ab.shape[1]
    neg = 0
    for j in range(n):
        dj = ab[0, j]
        if abs(dj) <= tol:
            return neg, j
        if dj < 0.0:
            neg += 1
        m = min(bw, n - 1 - j)
        inv = 1.0 / dj
        for q in range(1, m + 1):
            c = ab[q, j] * inv
            if c == 0.0:
                continue
            col = j + q
            for p in range(q, m + 1):
                ab[p - q, col] -= ab[p, j] * c
    return neg, -1


@njit(cache=True)
def csr_to_lower_band(indptr, indices, data, n, bw):
    ab = np.zeros((bw + 1, n))
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            j = indices[k]
            if j <= i:
                ab[i - j, j] += data[k]
    return ab
