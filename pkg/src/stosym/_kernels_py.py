"""Pure-Python fallback for the tridiagonal kernels.

Uses the LAPACK gttrf/gttrs pair through scipy, which performs the same
elimination with partial pivoting.  Semantics match stosym._kernels.
"""

import numpy as np
from scipy.linalg import lapack


def tridiag_factor(lower, diag, upper):
    lo = np.ascontiguousarray(lower, dtype=np.complex128)
    dg = np.ascontiguousarray(diag, dtype=np.complex128)
    up = np.ascontiguousarray(upper, dtype=np.complex128)
    m = dg.shape[0]
    if m == 0:
        raise ValueError("empty system")
    if lo.shape[0] != m - 1 or up.shape[0] != m - 1:
        raise ValueError("band length mismatch")
    dl, d, du, du2, ipiv, info = lapack.zgttrf(lo, dg, up)
    if info != 0:
        raise ValueError("zero pivot at row %d" % (info - 1))
    return (dl, d, du, du2, ipiv)


def tridiag_solve(factor, rhs):
    dl, d, du, du2, ipiv = factor
    b = np.asarray(rhs, dtype=np.complex128)
    if b.shape[0] != d.shape[0]:
        raise ValueError("rhs length mismatch")
    x, info = lapack.zgttrs(dl, d, du, du2, ipiv, b)
    if info != 0:
        raise ValueError("tridiagonal solve failed (info=%d)" % info)
    return x
