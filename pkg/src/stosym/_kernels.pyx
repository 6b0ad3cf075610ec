# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Thomas-elimination kernels for complex tridiagonal systems.

The factorization assumes no pivoting is needed; the matrices arising from
the Cayley operators are strictly diagonally dominant in modulus, so the
elimination is stable.  A vanishing pivot is reported as ValueError.
"""

import numpy as np


def tridiag_factor(lower, diag, upper):
    """Factor a tridiagonal matrix given by its three bands.

    Returns an opaque factor object consumed by tridiag_solve.
    """
    cdef double complex[::1] lo = np.ascontiguousarray(lower, dtype=np.complex128)
    cdef double complex[::1] dg = np.ascontiguousarray(diag, dtype=np.complex128)
    up_arr = np.ascontiguousarray(upper, dtype=np.complex128)
    cdef double complex[::1] up = up_arr
    cdef Py_ssize_t m = dg.shape[0]
    if m == 0:
        raise ValueError("empty system")
    if lo.shape[0] != m - 1 or up.shape[0] != m - 1:
        raise ValueError("band length mismatch")

    inv_piv_arr = np.empty(m, dtype=np.complex128)
    mult_arr = np.empty(m - 1 if m > 1 else 0, dtype=np.complex128)
    cdef double complex[::1] inv_piv = inv_piv_arr
    cdef double complex[::1] mult = mult_arr
    cdef Py_ssize_t i
    cdef double complex piv = dg[0]

    if piv == 0:
        raise ValueError("zero pivot at row 0")
    # store reciprocal pivots so the solve needs no complex divisions
    inv_piv[0] = 1.0 / piv
    for i in range(1, m):
        mult[i - 1] = lo[i - 1] * inv_piv[i - 1]
        piv = dg[i] - mult[i - 1] * up[i - 1]
        if piv == 0:
            raise ValueError("zero pivot at row %d" % i)
        inv_piv[i] = 1.0 / piv
    return (mult_arr, inv_piv_arr, up_arr)


def tridiag_solve(factor, rhs):
    """Solve the factored tridiagonal system for one right-hand side."""
    mult_arr, inv_piv_arr, up_arr = factor
    x_arr = np.array(rhs, dtype=np.complex128, copy=True, order="C")
    cdef double complex[::1] mult = mult_arr
    cdef double complex[::1] inv_piv = inv_piv_arr
    cdef double complex[::1] up = up_arr
    cdef double complex[::1] x = x_arr
    cdef Py_ssize_t m = inv_piv.shape[0]
    cdef Py_ssize_t i
    if x.shape[0] != m:
        raise ValueError("rhs length mismatch")

    for i in range(1, m):
        x[i] = x[i] - mult[i - 1] * x[i - 1]
    x[m - 1] = x[m - 1] * inv_piv[m - 1]
    for i in range(m - 2, -1, -1):
        x[i] = (x[i] - up[i] * x[i + 1]) * inv_piv[i]
    return x_arr
