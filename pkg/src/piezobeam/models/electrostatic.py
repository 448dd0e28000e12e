"""Filtered schemes for the electrostatic Euler-Bernoulli and Mindlin-Timoshenko beams.

Nondimensional equations (r = rot, b = bend, a3 = shear, kappa, eta as in
:class:`~piezobeam.core.Coefficients`; N = v_x + w_x**2 / 2 is the membrane strain):

EB   vtt = N_x
     wtt - r wxxtt + b wxxxx = [(N + V) w_x]_x
     at x = 1:  N = -V,  b w_xx = -m,  r wtt_x - b w_xxx = g

MT   vtt = N_x
     psitt - kappa psi_xx + (12 a3 / eta**2)(w_x + psi) = 0
     wtt - a3 (w_x + psi)_x = [(N + V) w_x]_x
     at x = 1:  N = -V,  kappa r psi_x = m,  a3 (w_x + psi) = g

The linearized variants drop every slope product and the distributed V w_xx
term, which decouples stretching from bending entirely.
"""

from __future__ import annotations

import numpy as np

from ..controllers import ControlInput, ControllerGains, simpson_slope_rate
from ..core import Coefficients, GridSpec, MaterialParams, ModelTag
from ..linalg import BandedLU, banded_from_dense
from ..stencils import D3_BACKWARD
from .base import ForcingFields, ModelOptions, SemiDiscreteSystem, extrapolate_ghost

__all__ = [
    "EBElectrostatic",
    "MTElectrostatic",
    "assemble_eb_electrostatic",
    "assemble_mt_electrostatic",
    "assemble_linearized",
]

_D3 = D3_BACKWARD.weights  # offsets +1, 0, -1, -2, -3


class _Electrostatic(SemiDiscreteSystem):
    """Shared interior operators and the axial-traction closure."""

    def __init__(self, coeffs, grid, gains=None, options=None, forcing=None, linear=False):
        self.linear = bool(linear)
        super().__init__(coeffs, grid, gains, options, forcing)
        N, dx = grid.N, grid.dx
        self._N = N
        self._dx = dx
        self._inv_dx2 = 1.0 / dx**2
        self._inv_2dx = 0.5 / dx
        self._inv_dx4 = 1.0 / dx**4
        self._nu = self.options.wave_filter(dx)
        self._kv = coeffs.kv if self.kv_damping_enabled else 0.0

    # interior stencils over nodes 1..N-1 of a ghost-padded array
    def _lap(self, z):
        N = self._N
        return (z[3 : N + 2] - 2.0 * z[2 : N + 1] + z[1:N]) * self._inv_dx2

    def _d0(self, z):
        N = self._N
        return (z[3 : N + 2] - z[1:N]) * self._inv_2dx

    def _bih(self, z):
        N = self._N
        return (z[4 : N + 3] - 4.0 * z[3 : N + 2] + 6.0 * z[2 : N + 1] - 4.0 * z[1:N] + z[0 : N - 1]) * self._inv_dx4

    def _tip_slope(self, z):
        N = self._N
        return (3.0 * z[N + 1] - 4.0 * z[N] + z[N - 1]) * self._inv_2dx

    def _slope_term(self, q, qd, ghost_left: bool) -> float:
        if self.linear or self.kV == 0.0:
            return 0.0
        rate = simpson_slope_rate(q["w"], qd["w"], self.grid, ghost_left)
        return 0.5 * rate if self.gains.continuous_law else rate

    def _close_axial(self, q, qd, z_v, fb, ghost_left):
        """Solve the traction condition for v_N; returns (V, vdot_N rate or None).

        3v_N - 4v_{N-1} + v_{N-2} = 2dx * (F - w_x(1)**2 / 2 - V) is linear in v_N,
        so the "nonlinear" traction condition has an explicit solution.
        """
        N, dx = self._N, self._dx
        v, vd, w, wd = q["v"], qd["v"], q["w"], qd["w"]
        F, Fdot = fb.get("traction", (0.0, 0.0))
        s = 0.0 if self.linear else self._tip_slope(w)
        if self.kV > 0.0:
            v[N + 1] = z_v
            V = F - self._tip_slope(v) - 0.5 * s * s
            vd[N + 1] = V / self.kV - self._slope_term(q, qd, ghost_left)
            rate = vd[N + 1]
        else:
            V = 0.0
            sdot = 0.0 if self.linear else self._tip_slope(wd)
            v[N + 1] = (4.0 * v[N] - v[N - 1] + 2.0 * dx * (F - 0.5 * s * s)) / 3.0
            vd[N + 1] = (4.0 * vd[N] - vd[N - 1] + 2.0 * dx * (Fdot - s * sdot)) / 3.0
            rate = None
        extrapolate_ghost(v, N)
        extrapolate_ghost(vd, N)
        return V, rate

    def _axial_and_membrane(self, q, qd, fi, V):
        """Axial acceleration and the nonlinear part of [(N + V) w_x]_x (None if linear)."""
        v, w = q["v"], q["w"]
        lv = self._lap(v)
        av = lv.copy()
        if self._nu or self._kv:
            av += (self._nu + self._kv) * self._lap(qd["v"])
        if "v" in fi:
            av += fi["v"][2 : self._N + 1]
        if self.linear:
            return av, None
        dw, lw = self._d0(w), self._lap(w)
        av += dw * lw
        membrane = self._d0(v) * lw + lv * dw + 1.5 * dw * dw * lw + V * lw
        return av, membrane


class EBElectrostatic(_Electrostatic):
    """Euler-Bernoulli beam; rotational inertia gives the w-equation a banded mass.

    Unknowns: v_1..v_{N-1}, w_1..w_N (w_N carries the shear condition, whose
    one-sided acceleration stencil forms the last mass row) and, when the
    voltage gain is positive, v_N as a first-order unknown.
    """

    def __init__(self, coeffs, grid, gains=None, options=None, forcing=None, linear=False):
        self.tag = ModelTag.EB_LIN if linear else ModelTag.EB_NL
        super().__init__(coeffs, grid, gains, options, forcing, linear)
        self.mass_w = self._w_mass()
        self._mass_lu = BandedLU(self.mass_w, 2, 1)
        self._wvisc = 0.5 * coeffs.rot if self.options.viscosity else 0.0

    def _second_order_ranges(self):
        N = self.grid.N
        return {"v": (1, N - 1), "w": (1, N)}

    def _first_order_nodes(self):
        return (("v", self.grid.N),) if self.kV > 0.0 else ()

    def _w_mass(self) -> np.ndarray:
        """Banded (l=2, u=1) mass over wtt_1..wtt_N; last row is the scaled shear row."""
        N, dx, r = self.grid.N, self.grid.dx, self.coeffs.rot
        a = np.zeros((N, N))
        c = r / dx**2
        for i in range(N - 1):
            a[i, i] = 1.0 + 2.0 * c
            if i > 0:
                a[i, i - 1] = -c
            a[i, i + 1] = -c
        a[N - 1, N - 3 : N] = (1.0, -4.0, 3.0)
        return banded_from_dense(a, 2, 1)

    def mass_matrix(self) -> np.ndarray:
        """Symmetric interior block of the w mass (the operator I - r * d2)."""
        from ..linalg import dense_from_banded

        return dense_from_banded(self.mass_w, 2, 1)[: self.grid.N - 1, : self.grid.N - 1]

    def _close(self, t, q, qd, z, fb):
        N, dx, b = self._N, self._dx, self.coeffs.bend
        w, wd = q["w"], qd["w"]
        w[0], wd[0] = w[2], wd[2]
        m = self.km * self._tip_slope(wd)
        g = -self.kg * wd[N + 1]
        Fm, Fm_dot = fb.get("moment", (0.0, 0.0))
        w[N + 2] = 2.0 * w[N + 1] - w[N] + dx * dx * (Fm - m) / b
        # The moment feedback rate would need the tip acceleration; the velocity
        # ghost is only read by the optional Kelvin-Voigt term.
        wd[N + 2] = 2.0 * wd[N + 1] - wd[N] + dx * dx * Fm_dot / b
        V, rate = self._close_axial(q, qd, z[0] if len(z) else 0.0, fb, ghost_left=True)
        zdot = np.array([rate]) if rate is not None else np.empty(0)
        return ControlInput(V=V, m=m, g=g), zdot

    def _accelerations(self, t, q, qd, controls, fi, fb):
        N, dx, c = self._N, self._dx, self.coeffs
        w, wd = q["w"], qd["w"]
        av, membrane = self._axial_and_membrane(q, qd, fi, controls.V)
        rw = np.empty(N)
        inner = -c.bend * self._bih(w)
        if self._wvisc:
            inner += self._wvisc * self._lap(wd)
        if self._kv:
            inner -= self._kv * c.rot * self._bih(wd)
        if membrane is not None:
            inner += membrane
        if "w" in fi:
            inner += fi["w"][2 : N + 1]
        rw[: N - 1] = inner
        d3 = (_D3[0] * w[N + 2] + _D3[1] * w[N + 1] + _D3[2] * w[N] + _D3[3] * w[N - 1] + _D3[4] * w[N - 2]) / dx**3
        F_sh = fb.get("shear", (0.0, 0.0))[0]
        rw[N - 1] = 2.0 * dx / c.rot * (controls.g + c.bend * d3 + F_sh)
        return {"v": av, "w": self._mass_lu.solve(rw)}


class MTElectrostatic(_Electrostatic):
    """Mindlin-Timoshenko beam: identity mass, algebraic or first-order tip nodes.

    Tip closures are applied in the order psi_N, w_N, v_N because the shear
    condition for w_N involves psi_N.
    """

    def __init__(self, coeffs, grid, gains=None, options=None, forcing=None, linear=False):
        self.tag = ModelTag.MT_LIN if linear else ModelTag.MT_NL
        super().__init__(coeffs, grid, gains, options, forcing, linear)
        self._kr = coeffs.kappa * coeffs.rot
        self._shear_k = 12.0 * coeffs.shear / coeffs.eta**2

    def _second_order_ranges(self):
        N = self.grid.N
        return {"v": (1, N - 1), "w": (1, N - 1), "psi": (1, N - 1)}

    def _first_order_nodes(self):
        N = self.grid.N
        nodes = []
        if self.km > 0.0:
            nodes.append(("psi", N))
        if self.kg > 0.0:
            nodes.append(("w", N))
        if self.kV > 0.0:
            nodes.append(("v", N))
        return tuple(nodes)

    def _close(self, t, q, qd, z, fb):
        N, dx, a3 = self._N, self._dx, self.coeffs.shear
        psi, psid, w, wd = q["psi"], qd["psi"], q["w"], qd["w"]
        rates = []
        k = 0
        Fm, Fm_dot = fb.get("moment", (0.0, 0.0))
        if self.km > 0.0:
            m = self._kr * self._tip_slope(psi) - Fm
            psid[N + 1] = -m / self.km
            rates.append(psid[N + 1])
            k += 1
        else:
            m = 0.0
            psi[N + 1] = (4.0 * psi[N] - psi[N - 1] + 2.0 * dx * Fm / self._kr) / 3.0
            psid[N + 1] = (4.0 * psid[N] - psid[N - 1] + 2.0 * dx * Fm_dot / self._kr) / 3.0
        Fg, Fg_dot = fb.get("shear", (0.0, 0.0))
        if self.kg > 0.0:
            g = a3 * (self._tip_slope(w) + psi[N + 1]) - Fg
            wd[N + 1] = -g / self.kg
            rates.append(wd[N + 1])
            k += 1
        else:
            g = 0.0
            w[N + 1] = (4.0 * w[N] - w[N - 1] + 2.0 * dx * (Fg / a3 - psi[N + 1])) / 3.0
            wd[N + 1] = (4.0 * wd[N] - wd[N - 1] + 2.0 * dx * (Fg_dot / a3 - psid[N + 1])) / 3.0
        for arr in (psi, psid, w, wd):
            extrapolate_ghost(arr, N)
        V, rate = self._close_axial(q, qd, z[k] if len(z) > k else 0.0, fb, ghost_left=False)
        if rate is not None:
            rates.append(rate)
        return ControlInput(V=V, m=m, g=g), np.array(rates)

    def _accelerations(self, t, q, qd, controls, fi, fb):
        N, c = self._N, self.coeffs
        w, wd, psi, psid = q["w"], qd["w"], q["psi"], qd["psi"]
        av, membrane = self._axial_and_membrane(q, qd, fi, controls.V)
        shear = self._d0(w) + psi[2 : N + 1]
        apsi = c.kappa * self._lap(psi) - self._shear_k * shear
        filt = c.kappa * self._nu + self._kv
        if filt:
            apsi += filt * self._lap(psid)
        aw = c.shear * (self._lap(w) + self._d0(psi))
        if self._nu:
            aw += c.shear * self._nu * self._lap(wd)
        if membrane is not None:
            aw += membrane
        if "psi" in fi:
            apsi += fi["psi"][2 : N + 1]
        if "w" in fi:
            aw += fi["w"][2 : N + 1]
        return {"v": av, "w": aw, "psi": apsi}


def _coeffs(params) -> Coefficients:
    return params if isinstance(params, Coefficients) else Coefficients.from_params(params)


def assemble_eb_electrostatic(
    params: MaterialParams | Coefficients,
    grid: GridSpec,
    options: ModelOptions | None = None,
    gains: ControllerGains | None = None,
    forcing: ForcingFields | None = None,
) -> EBElectrostatic:
    if isinstance(params, MaterialParams):
        params.validate_for(ModelTag.EB_NL)
    return EBElectrostatic(_coeffs(params), grid, gains, options, forcing, linear=False)


def assemble_mt_electrostatic(
    params: MaterialParams | Coefficients,
    grid: GridSpec,
    options: ModelOptions | None = None,
    gains: ControllerGains | None = None,
    forcing: ForcingFields | None = None,
) -> MTElectrostatic:
    if isinstance(params, MaterialParams):
        params.validate_for(ModelTag.MT_NL)
    return MTElectrostatic(_coeffs(params), grid, gains, options, forcing, linear=False)


def assemble_linearized(
    params: MaterialParams | Coefficients,
    grid: GridSpec,
    family: str,
    options: ModelOptions | None = None,
    gains: ControllerGains | None = None,
    forcing: ForcingFields | None = None,
):
    family = family.upper()
    if family == "EB":
        return EBElectrostatic(_coeffs(params), grid, gains, options, forcing, linear=True)
    if family == "MT":
        if isinstance(params, MaterialParams):
            params.validate_for(ModelTag.MT_LIN)
        return MTElectrostatic(_coeffs(params), grid, gains, options, forcing, linear=True)
    raise ValueError(f"family must be 'EB' or 'MT', got {family!r}")
