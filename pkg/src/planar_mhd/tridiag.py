"""Thomas algorithm for tridiagonal systems."""

from __future__ import annotations

import numpy as np
from numba import njit


class LinearSolveError(ArithmeticError):
    pass


@njit(cache=True)
def _thomas(lower, diag, upper, rhs, out):
    n = diag.shape[0]
    c = np.empty(n)
    pivot = diag[0]
    if pivot == 0.0 or not np.isfinite(pivot):
        return 0
    c[0] = upper[0] / pivot if n > 1 else 0.0
    for k in range(rhs.shape[1]):
        out[0, k] = rhs[0, k] / pivot
    for i in range(1, n):
        pivot = diag[i] - lower[i - 1] * c[i - 1]
        if pivot == 0.0 or not np.isfinite(pivot):
            return i
        c[i] = upper[i] / pivot if i < n - 1 else 0.0
        for k in range(rhs.shape[1]):
            out[i, k] = (rhs[i, k] - lower[i - 1] * out[i - 1, k]) / pivot
    for i in range(n - 2, -1, -1):
        for k in range(rhs.shape[1]):
            out[i, k] -= c[i] * out[i + 1, k]
    return -1


def tridiag_solve(lower, diag, upper, rhs) -> np.ndarray:
    """Solve ``A x = rhs`` for tridiagonal ``A`` without pivoting.

    ``lower`` and ``upper`` hold the sub- and super-diagonal (length n-1).
    ``rhs`` may be of shape ``(n,)`` or ``(n, k)`` for k right-hand sides.
    Raises LinearSolveError on a zero or non-finite pivot.
    """
    diag = np.ascontiguousarray(diag, dtype=float)
    n = diag.shape[0]
    lower = np.ascontiguousarray(lower, dtype=float)
    upper = np.ascontiguousarray(upper, dtype=float)
    if lower.shape != (n - 1,) or upper.shape != (n - 1,):
        raise ValueError("off-diagonals must have length n-1")
    b = np.asarray(rhs, dtype=float)
    if b.shape[0] != n:
        raise ValueError("rhs length does not match the matrix")
    vec = b.ndim == 1
    b2 = np.ascontiguousarray(b.reshape(n, -1))
    out = np.empty_like(b2)
    bad = _thomas(lower, diag, upper, b2, out)
    if bad >= 0:
        raise LinearSolveError(f"zero pivot in tridiagonal solve at row {bad}")
    return out[:, 0] if vec else out
