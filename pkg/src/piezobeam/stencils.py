"""Finite-difference kernels.

Each stencil is fitted at import time by solving the moment (Vandermonde)
conditions exactly in rational arithmetic, so consistency holds by
construction and is re-checked in the tests against an independent source.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

import numpy as np

__all__ = [
    "Stencil",
    "fit_stencil",
    "D1_CENTRAL",
    "D1_BACKWARD",
    "D1_FORWARD",
    "D2_CENTRAL",
    "D2_BACKWARD",
    "D3_BACKWARD",
    "D4_CENTRAL",
    "d1_central",
    "d1_onesided_backward",
    "d2_central",
    "d3_onesided_backward",
    "d4_central",
    "observed_order",
]


def _solve_exact(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(b)
    m = [row[:] + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next(r for r in range(col, n) if m[r][col] != 0)
        m[col], m[piv] = m[piv], m[col]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col] / m[col][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [m[i][n] / m[i][i] for i in range(n)]


@dataclass(frozen=True)
class Stencil:
    """Weights over integer node offsets approximating d^deriv/dx^deriv.

    value = sum(coeffs[k] * z[i + offsets[k]]) / dx**deriv
    """

    offsets: tuple[int, ...]
    coeffs: tuple[Fraction, ...]
    deriv: int
    order: int

    @property
    def weights(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])

    def moment(self, p: int) -> Fraction:
        """sum_k c_k * offset_k**p / p!  (equals 1 for p == deriv, 0 below)."""
        return sum((c * Fraction(o) ** p for c, o in zip(self.coeffs, self.offsets)), Fraction(0)) / factorial(p)

    def apply(self, z: np.ndarray, i: int, dx: float) -> float:
        lo, hi = i + min(self.offsets), i + max(self.offsets)
        if lo < 0 or hi >= len(z):
            raise IndexError(f"stencil at index {i} needs [{lo}, {hi}] but array has {len(z)} entries")
        return float(sum(float(c) * z[i + o] for c, o in zip(self.coeffs, self.offsets))) / dx**self.deriv

    def apply_range(self, z: np.ndarray, start: int, stop: int, dx: float) -> np.ndarray:
        """Vectorised apply over array indices start..stop-1."""
        lo, hi = start + min(self.offsets), stop - 1 + max(self.offsets)
        if lo < 0 or hi >= len(z):
            raise IndexError(f"stencil over [{start}, {stop}) needs [{lo}, {hi}]")
        out = np.zeros(stop - start)
        for c, o in zip(self.coeffs, self.offsets):
            out += float(c) * z[start + o : stop + o]
        return out / dx**self.deriv


def fit_stencil(offsets, deriv: int) -> Stencil:
    offsets = tuple(int(o) for o in offsets)
    n = len(offsets)
    if n <= deriv:
        raise ValueError("need more nodes than the derivative order")
    a = [[Fraction(o) ** p for o in offsets] for p in range(n)]
    b = [Fraction(factorial(deriv)) if p == deriv else Fraction(0) for p in range(n)]
    coeffs = tuple(_solve_exact(a, b))
    st = Stencil(offsets, coeffs, deriv, order=n - deriv)
    # symmetric stencils gain one order for free
    if st.moment(n) == 0:
        st = Stencil(offsets, coeffs, deriv, order=n - deriv + 1)
    return st


D1_CENTRAL = fit_stencil((-1, 0, 1), 1)
D1_BACKWARD = fit_stencil((-2, -1, 0), 1)
D1_FORWARD = fit_stencil((0, 1, 2), 1)
D2_CENTRAL = fit_stencil((-1, 0, 1), 2)
D2_BACKWARD = fit_stencil((-3, -2, -1, 0), 2)
D3_BACKWARD = fit_stencil((1, 0, -1, -2, -3), 3)
D4_CENTRAL = fit_stencil((-2, -1, 0, 1, 2), 4)


def d1_central(z, i, dx):
    return D1_CENTRAL.apply(z, i, dx)


def d1_onesided_backward(z, i, dx):
    return D1_BACKWARD.apply(z, i, dx)


def d2_central(z, i, dx):
    return D2_CENTRAL.apply(z, i, dx)


def d3_onesided_backward(z, i, dx):
    """Third derivative from nodes i+1, i, ..., i-3 (uses the tip ghost when i = N)."""
    return D3_BACKWARD.apply(z, i, dx)


def d4_central(z, i, dx):
    return D4_CENTRAL.apply(z, i, dx)


def observed_order(stencil: Stencil, f, exact, x0: float, spacings) -> list[float]:
    """Observed orders log2(e_k / e_{k+1}) for a halving sequence of spacings."""
    errs = []
    for dx in spacings:
        pts = x0 + np.array(stencil.offsets) * dx
        approx = float(np.dot(stencil.weights, f(pts))) / dx**stencil.deriv
        errs.append(abs(approx - exact(x0)))
    return [float(np.log(errs[k] / errs[k + 1]) / np.log(spacings[k] / spacings[k + 1])) for k in range(len(errs) - 1)]
