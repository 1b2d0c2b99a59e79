# cython: boundscheck=False, wraparound=False, cdivision=True
"""Monotone-chain hull kernel (compiled backend).

Must stay arithmetic-identical to ``_envelope_py.hull_nodes``: same pop
test, same tolerance, same float expressions, so the two backends return
identical node sets bit for bit.
"""

from libc.math cimport fabs, fmax

import numpy as np


def hull_nodes(double[::1] y, bint lower):
    """Node indices of the greatest convex minorant (lower=True) or least
    concave majorant (lower=False) of the points (k, y[k]).

    Interior points whose cross-product test falls within 1e-12 of the
    cross product's own magnitude scale count as collinear and are dropped.
    """
    cdef Py_ssize_t n = y.shape[0]
    if n < 2:
        raise ValueError("need at least 2 points")
    out = np.empty(n, dtype=np.int64)
    cdef long long[::1] stack = out
    cdef Py_ssize_t top = 1
    cdef Py_ssize_t k, i0, i1
    cdef double t1, t2, cross, tol
    stack[0] = 0
    for k in range(1, n):
        while top >= 2:
            i0 = stack[top - 2]
            i1 = stack[top - 1]
            t1 = (i1 - i0) * (y[k] - y[i0])
            t2 = (k - i0) * (y[i1] - y[i0])
            cross = t1 - t2
            tol = 1e-12 * fmax(fabs(t1), fabs(t2))
            if lower:
                if cross <= tol:
                    top -= 1
                else:
                    break
            else:
                if cross >= -tol:
                    top -= 1
                else:
                    break
        stack[top] = k
        top += 1
    return out[:top].copy()
