"""Banded direct solves (LAPACK gbtrf/gbtrs) with singularity and residual checks."""

from __future__ import annotations

import numpy as np
from scipy.linalg import lapack

__all__ = ["SingularMatrixError", "BandedLU", "solve_banded", "banded_from_dense", "dense_from_banded"]


class SingularMatrixError(np.linalg.LinAlgError):
    pass


def banded_from_dense(a: np.ndarray, lower: int, upper: int) -> np.ndarray:
    """Pack a dense matrix into (upper + lower + 1, n) diagonal-ordered storage."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    ab = np.zeros((upper + lower + 1, n))
    for j in range(n):
        for i in range(max(0, j - upper), min(n, j + lower + 1)):
            ab[upper + i - j, j] = a[i, j]
    return ab


def dense_from_banded(ab: np.ndarray, lower: int, upper: int) -> np.ndarray:
    n = ab.shape[1]
    a = np.zeros((n, n))
    for j in range(n):
        for i in range(max(0, j - upper), min(n, j + lower + 1)):
            a[i, j] = ab[upper + i - j, j]
    return a


def _banded_matvec(ab: np.ndarray, lower: int, upper: int, x: np.ndarray) -> np.ndarray:
    n = ab.shape[1]
    y = np.zeros(n)
    for k in range(-lower, upper + 1):
        row = ab[upper - k]
        if k >= 0:
            y[: n - k] += row[k:] * x[k:]
        else:
            y[-k:] += row[: n + k] * x[: n + k]
    return y


class BandedLU:
    """LU factorization of a banded matrix, factored once and reused.

    ``ab`` uses the same diagonal-ordered layout as ``scipy.linalg.solve_banded``.
    """

    def __init__(self, ab: np.ndarray, lower: int, upper: int, pivot_tol: float = 1e-14):
        ab = np.asarray(ab, dtype=float)
        if ab.shape[0] != lower + upper + 1:
            raise ValueError("band storage does not match the declared bandwidth")
        self.lower, self.upper, self.n = lower, upper, ab.shape[1]
        self.ab = ab.copy()
        work = np.zeros((2 * lower + upper + 1, self.n))
        work[lower:] = ab
        lu, piv, info = lapack.dgbtrf(work, lower, upper)
        scale = float(np.max(np.abs(ab))) if ab.size else 0.0
        diag = np.abs(lu[lower + upper])
        if info > 0 or scale == 0.0 or diag.min() < pivot_tol * scale:
            k = int(np.argmin(diag))
            raise SingularMatrixError(f"pivot {diag[k]:.3e} at row {k} below {pivot_tol:.0e} x scale {scale:.3e}")
        self._lu, self._piv = lu, piv

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x, info = lapack.dgbtrs(self._lu, self.lower, self.upper, np.asarray(rhs, dtype=float), self._piv)
        if info != 0:
            raise SingularMatrixError(f"dgbtrs failed with info={info}")
        return x

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return _banded_matvec(self.ab, self.lower, self.upper, np.asarray(x, dtype=float))


def solve_banded(ab: np.ndarray, lower: int, upper: int, rhs: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """One-shot banded solve; raises if singular or if the residual check fails.

    The residual is measured against ||rhs|| + ||A|| ||x|| so that tiny right-hand
    sides do not trip the check on roundoff alone.
    """
    lu = BandedLU(ab, lower, upper)
    x = lu.solve(rhs)
    res = lu.matvec(x) - rhs
    norm_a = float(np.max(np.sum(np.abs(dense_from_banded(lu.ab, lower, upper)), axis=1)))
    scale = float(np.max(np.abs(rhs))) + norm_a * float(np.max(np.abs(x)))
    if np.max(np.abs(res)) > rtol * scale:
        raise SingularMatrixError(f"residual {np.max(np.abs(res)):.3e} exceeds {rtol:.0e} x {scale:.3e}")
    return x
