"""Independent reference values: wave-mode frequencies, Richardson orders, manufactured solutions.

Manufactured forcing is derived twice. The symbolic route differentiates the
closed-form fields with sympy; the check route differentiates the same fields
with sixth-order central differences (h = 1e-3) carried out in 40-digit mpmath
arithmetic, so roundoff cannot mask a wrong derivative. Both feed one residual
formula per model, written once against an abstract derivative provider.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import mpmath
import numpy as np
import sympy as sp

from .controllers import ControllerGains
from .core import BeamState, Coefficients, GridSpec, MaterialParams, ModelTag, derive_nondim
from .models import ForcingFields, ModelOptions, assemble
from .stencils import fit_stencil

__all__ = [
    "X",
    "T",
    "MMSVerificationError",
    "RichardsonResult",
    "wave_mode_frequency",
    "richardson_order",
    "ManufacturedCase",
    "mms_residuals",
    "mms_forcing",
    "verify_forcing",
    "linear_v_frequencies",
    "fft_tip_frequencies",
]

X, T = sp.symbols("x t", real=True)


class MMSVerificationError(AssertionError):
    """The two derivative routes disagree."""


def wave_mode_frequency(k: int, params: MaterialParams | None = None, nondim: bool = True) -> float:
    """k-th angular frequency of the clamped-free wave equation v_tt = v_xx."""
    if k < 1:
        raise ValueError("mode index starts at 1")
    omega = (2 * k - 1) * math.pi / 2.0
    if nondim:
        return omega
    if params is None:
        raise ValueError("dimensional frequencies need material parameters")
    return omega / derive_nondim(params).A1


@dataclass(frozen=True)
class RichardsonResult:
    orders: tuple[float, ...]
    spread: float
    conclusive: bool

    @property
    def order(self) -> float:
        """Order from the finest pair."""
        return self.orders[-1]


def richardson_order(errors, ratio: float = 2.0) -> RichardsonResult:
    """Observed orders log_ratio(e_k / e_{k+1}) from a refinement sequence."""
    e = [float(v) for v in errors]
    if len(e) < 3:
        raise ValueError("need at least three refinement levels")
    if any(not v > 0 for v in e):
        raise ValueError("errors must be positive")
    orders = tuple(math.log(e[k] / e[k + 1]) / math.log(ratio) for k in range(len(e) - 1))
    monotone = all(e[k + 1] < e[k] for k in range(len(e) - 1))
    return RichardsonResult(orders, max(orders) - min(orders), monotone)


# -- manufactured solutions ----------------------------------------------------


@dataclass(frozen=True)
class ManufacturedCase:
    """Closed-form fields (sympy expressions in ``X`` and ``T``, nondimensional)."""

    fields: Mapping[str, sp.Expr]
    name: str = "custom"
    _fn: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def expr(self, name: str) -> sp.Expr:
        return sp.sympify(self.fields.get(name, 0))

    def _lamb(self, key, expr):
        if key not in self._fn:
            self._fn[key] = sp.lambdify((X, T), expr, "numpy")
        return self._fn[key]

    def sample(self, name: str, x: np.ndarray, t: float, nt: int = 0) -> np.ndarray:
        f = self._lamb((name, nt), sp.diff(self.expr(name), T, nt))
        return np.broadcast_to(np.asarray(f(x, t), dtype=float), np.shape(x)).copy()

    def state(self, grid: GridSpec, t: float, tag: ModelTag | str) -> BeamState:
        """Exact nodal values (ghosts included; the model closure may overwrite them)."""
        tag = ModelTag(tag)
        x = grid.x / grid.length
        fields = {n: self.sample(n, x, t) for n in tag.fields}
        rates = {n: self.sample(n, x, t, 1) for n in tag.fields}
        for arr in list(fields.values()) + list(rates.values()):
            arr[1] = 0.0
        return BeamState(tag=tag, t=t, fields=fields, rates=rates)

    @classmethod
    def eb(cls, a_v: float = 0.1, a_w: float = 0.1) -> "ManufacturedCase":
        """v = a_v sin(pi x / 2) cos t,  w = a_w x^2 (x - 1)^2 cos t (clamped: w_x(0) = 0)."""
        return cls(
            {
                "v": a_v * sp.sin(sp.pi * X / 2) * sp.cos(T),
                "w": a_w * X**2 * (X - 1) ** 2 * sp.cos(T),
            },
            name="eb",
        )

    @classmethod
    def mt(cls, a_v: float = 0.1, a_w: float = 0.1, a_psi: float = 0.1) -> "ManufacturedCase":
        return cls(
            {
                "v": a_v * sp.sin(sp.pi * X / 2) * sp.cos(T),
                "w": a_w * X * (2 - X) * sp.cos(T),
                "psi": a_psi * sp.sin(sp.pi * X) * sp.sin(T + 1),
            },
            name="mt",
        )

    @classmethod
    def zero(cls) -> "ManufacturedCase":
        return cls({}, name="zero")


Derivative = Callable[[str, int, int, bool], object]


def _residual_formulas(tag: ModelTag, c: Coefficients, D: Derivative) -> dict[str, object]:
    """Continuous residuals (uncontrolled) written against a derivative provider.

    ``D(name, nx, nt, tip)`` returns d^nx/dx^nx d^nt/dt^nt of a field, at x = 1
    when ``tip`` is set.
    """
    nl = 0 if tag.linear else 1

    def strain_x(tip=False):
        return D("v", 2, 0, tip) + nl * D("w", 1, 0, tip) * D("w", 2, 0, tip)

    out = {"v": D("v", 0, 2, False) - strain_x()}
    membrane = nl * (
        D("v", 2, 0, False) * D("w", 1, 0, False)
        + D("v", 1, 0, False) * D("w", 2, 0, False)
        + sp.Rational(3, 2) * D("w", 1, 0, False) ** 2 * D("w", 2, 0, False)
    )
    out["traction"] = D("v", 1, 0, True) + nl * D("w", 1, 0, True) ** 2 / 2
    if tag.family == "EB":
        out["w"] = D("w", 0, 2, False) - c.rot * D("w", 2, 2, False) + c.bend * D("w", 4, 0, False) - membrane
        out["moment"] = c.bend * D("w", 2, 0, True)
        out["shear"] = c.rot * D("w", 1, 2, True) - c.bend * D("w", 3, 0, True)
    else:
        shear = D("w", 1, 0, False) + D("psi", 0, 0, False)
        out["psi"] = D("psi", 0, 2, False) - c.kappa * D("psi", 2, 0, False) + 12 * c.shear / c.eta**2 * shear
        out["w"] = D("w", 0, 2, False) - c.shear * (D("w", 2, 0, False) + D("psi", 1, 0, False)) - membrane
        out["moment"] = c.kappa * c.rot * D("psi", 1, 0, True)
        out["shear"] = c.shear * (D("w", 1, 0, True) + D("psi", 0, 0, True))
    return out


def _coeffs(params) -> Coefficients:
    return params if isinstance(params, Coefficients) else Coefficients.from_params(params)


def mms_residuals(case: ManufacturedCase, tag: ModelTag | str, params) -> dict[str, sp.Expr]:
    """Symbolic residuals; interior entries depend on (x, t), boundary ones on t only."""
    tag = ModelTag(tag)
    if tag is ModelTag.EB_FD_LIN:
        raise ValueError("manufactured forcing is provided for the electrostatic models")
    c = _coeffs(params)

    def D(name, nx, nt, tip):
        e = case.expr(name)
        if nx:
            e = sp.diff(e, X, nx)
        if nt:
            e = sp.diff(e, T, nt)
        return e.subs(X, 1) if tip else e

    return {k: sp.sympify(v) for k, v in _residual_formulas(tag, c, D).items()}


_FD_CACHE: dict[int, list] = {}


def _central_weights(order: int) -> tuple[list[int], list]:
    """Sixth-order central weights (exact rationals) for d^order/dx^order."""
    if order not in _FD_CACHE:
        half = {1: 3, 2: 3, 3: 4, 4: 4}[order]
        st = fit_stencil(range(-half, half + 1), order)
        _FD_CACHE[order] = [list(st.offsets), [mpmath.mpf(c.numerator) / c.denominator for c in st.coeffs]]
    return tuple(_FD_CACHE[order])


def _mp_derivative(f, x, t, nx, nt, h):
    if nx == 0 and nt == 0:
        return f(x, t)
    if nx:
        offs, wts = _central_weights(nx)
        return sum(w * _mp_derivative(f, x + o * h, t, 0, nt, h) for o, w in zip(offs, wts)) / h**nx
    offs, wts = _central_weights(nt)
    return sum(w * f(x, t + o * h) for o, w in zip(offs, wts)) / h**nt


def verify_forcing(
    case: ManufacturedCase,
    tag: ModelTag | str,
    params,
    points=((0.3, 0.7), (0.55, 1.3), (0.85, 2.1)),
    h: float = 1e-3,
    tol: float = 1e-9,
) -> float:
    """Compare symbolic residuals with the high-precision finite-difference route.

    Returns the largest discrepancy relative to max(1, |value|); raises
    :class:`MMSVerificationError` above ``tol``.
    """
    tag = ModelTag(tag)
    c = _coeffs(params)
    sym = mms_residuals(case, tag, c)
    with mpmath.workdps(40):
        hp = mpmath.mpf(h)
        fns = {n: sp.lambdify((X, T), case.expr(n), "mpmath") for n in tag.fields}
        worst = 0.0
        for x0, t0 in points:
            x0m, t0m = mpmath.mpf(x0), mpmath.mpf(t0)

            def D(name, nx, nt, tip):
                return _mp_derivative(fns[name], mpmath.mpf(1) if tip else x0m, t0m, nx, nt, hp)

            num = _residual_formulas(tag, c, D)
            for key, expr in sym.items():
                exact = float(expr.subs({X: x0, T: t0}).evalf(30))
                approx = float(num[key])
                err = abs(exact - approx) / max(1.0, abs(exact))
                worst = max(worst, err)
                if err > tol:
                    raise MMSVerificationError(
                        f"{tag.value} residual {key!r} at (x={x0}, t={t0}): symbolic {exact!r} vs FD {approx!r}"
                    )
    return worst


def mms_forcing(case: ManufacturedCase, tag: ModelTag | str, params, grid: GridSpec, verify: bool = True) -> ForcingFields:
    """Forcing arrays sampled on ``grid`` for injection into a model's right-hand side."""
    tag = ModelTag(tag)
    c = _coeffs(params)
    if verify:
        verify_forcing(case, tag, c)
    res = mms_residuals(case, tag, c)
    x = grid.x / grid.length
    interior = {}
    for name in tag.fields:
        expr = res.get(name, sp.Integer(0))
        if expr != 0:
            interior[name] = sp.lambdify((X, T), expr, "numpy")
    boundary = {}
    for key in ("traction", "moment", "shear"):
        expr = res.get(key, sp.Integer(0))
        if expr != 0:
            boundary[key] = (sp.lambdify(T, expr, "numpy"), sp.lambdify(T, sp.diff(expr, T), "numpy"))

    if not interior and not boundary:
        return ForcingFields()

    def interior_at(t):
        return {n: np.broadcast_to(np.asarray(f(x, t), dtype=float), x.shape) for n, f in interior.items()}

    def boundary_at(t):
        return {k: (float(f(t)), float(df(t))) for k, (f, df) in boundary.items()}

    return ForcingFields(interior=interior_at, boundary=boundary_at)


# -- modal checks -------------------------------------------------------------------


def linear_v_frequencies(grid: GridSpec, params=None, count: int = 3) -> np.ndarray:
    """Lowest axial angular frequencies from the assembled linear EB operator.

    The acceleration block of the uncontrolled, unfiltered linear model is
    probed column by column and its spectrum computed densely.
    """
    c = _coeffs(params if params is not None else MaterialParams.sample())
    system = assemble(ModelTag.EB_LIN, c, grid, options=ModelOptions(viscosity=False), gains=ControllerGains.uncontrolled())
    sl = system._slices["v"]
    n = sl.stop - sl.start
    a = np.empty((n, n))
    for j in range(n):
        y = np.zeros(system.size)
        y[sl.start + j] = 1.0
        a[:, j] = system.rhs(0.0, y)[system.n2 + sl.start : system.n2 + sl.stop]
    lam = np.sort(np.linalg.eigvals(-a).real)
    return np.sqrt(lam[:count])


def fft_tip_frequencies(
    grid: GridSpec, params=None, count: int = 3, t_final: float = 200.0, dt: float = 1e-2
) -> np.ndarray:
    """Spectral peaks of the tip axial velocity on a conservative linear run."""
    from .core import InitialCondition, make_initial_state
    from .integrator import IntegratorConfig, Stepper

    c = _coeffs(params if params is not None else MaterialParams.sample())
    system = assemble(ModelTag.EB_LIN, c, grid, options=ModelOptions(viscosity=False), gains=ControllerGains.uncontrolled())
    ic = InitialCondition(amplitude=1e-3, center=0.7, width=0.14, fields=("v",))
    y = system.pack(system.close_state(make_initial_state(grid, ic, ModelTag.EB_LIN)))
    stepper = Stepper(system, IntegratorConfig(scheme="ImplicitMidpoint", dt=dt))
    n = int(round(t_final / dt))
    tip = np.empty(n)
    fy = None
    for k in range(n):
        y, fy = stepper.step(k * dt, y, fy)
        tip[k] = system.state_from((k + 1) * dt, y).rates["v"][grid.N + 1]
    win = np.hanning(n)
    spec = np.abs(np.fft.rfft((tip - tip.mean()) * win, 8 * n))
    freqs = 2 * np.pi * np.fft.rfftfreq(8 * n, dt)
    peaks = [i for i in range(1, len(spec) - 1) if spec[i] > spec[i - 1] and spec[i] >= spec[i + 1]]
    # lowest peaks clear of the Hann sidelobes (about 3% of a main lobe)
    floor = 0.05 * spec.max()
    top = [i for i in peaks if spec[i] >= floor][:count]
    if len(top) < count:
        raise ValueError(f"only {len(top)} spectral peaks above the floor")
    out = []
    for i in top:  # parabolic refinement of the peak
        a, b, cc = np.log(spec[i - 1]), np.log(spec[i]), np.log(spec[i + 1])
        shift = 0.5 * (a - cc) / (a - 2 * b + cc)
        out.append(freqs[i] + shift * (freqs[1] - freqs[0]))
    return np.array(out)
