"""Linear Euler-Bernoulli beam with a dynamic charge field p (magnetic effects kept).

Nondimensional system (kappa = 1 + c**2, c = couple, mu = magnetic):

    vtt = (kappa v_x - c p_x)_x
    mu ptt = (p_x - c v_x)_x
    wtt - r wxxtt + b wxxxx = 0
    at x = 1:  kappa v_x - c p_x = g1,  p_x - c v_x = -V,  b w_xx = -m,  r wtt_x - b w_xxx = g

The scheme is derived from a discrete Lagrangian (forward differences on each
cell, trapezoid-lumped nodal masses), so it reads M qtt = -K q - C qt + B u with
M symmetric positive definite and K symmetric positive semidefinite. Its energy
(``energy.fd_energy``) is conserved exactly by the semi-discrete flow when
uncontrolled and undamped, which is what makes it the conservation oracle.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ..controllers import ControlInput, ControllerGains
from ..core import Coefficients, GridSpec, MaterialParams, ModelTag
from .base import ForcingFields, ModelOptions, SemiDiscreteSystem, extrapolate_ghost

__all__ = ["EBFullyDynamicLinear", "assemble_eb_fully_dynamic_linear", "difference_matrices"]


def difference_matrices(N: int, dx: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(G, C, omega) acting on nodal values 1..N with the clamp folded in.

    G z gives the forward differences on cells 0..N-1; C w gives curvatures at
    nodes 0..N-1 (node 0 through the mirrored ghost, so 2 w_1 / dx**2); omega are
    the trapezoid nodal weights (1/2 at the free end).
    """
    G = np.zeros((N, N))
    for i in range(N):
        G[i, i] = 1.0 / dx
        if i > 0:
            G[i, i - 1] = -1.0 / dx
    C = np.zeros((N, N))
    C[0, 0] = 2.0 / dx**2
    for i in range(1, N):
        C[i, i] = 1.0 / dx**2
        C[i, i - 1] = -2.0 / dx**2
        if i > 1:
            C[i, i - 2] = 1.0 / dx**2
    omega = np.ones(N)
    omega[-1] = 0.5
    return G, C, omega


class EBFullyDynamicLinear(SemiDiscreteSystem):
    tag = ModelTag.EB_FD_LIN
    linear = True

    def __init__(self, coeffs, grid, gains=None, options=None, forcing=None):
        options = options if options is not None else ModelOptions(viscosity=False)
        super().__init__(coeffs, grid, gains, options, forcing)
        N, dx, c = grid.N, grid.dx, coeffs
        G, C, omega = difference_matrices(N, dx)
        GtG = dx * G.T @ G
        curv = np.diag(np.r_[0.5, np.ones(N - 1)])
        CtC = dx * C.T @ curv @ C
        lump = dx * np.diag(omega)
        Z = np.zeros((N, N))

        mass = np.block([[lump, Z, Z], [Z, lump + c.rot * GtG, Z], [Z, Z, c.magnetic * lump]])
        stiff = np.block(
            [[c.kappa * GtG, Z, -c.couple * GtG], [Z, c.bend * CtC, Z], [-c.couple * GtG, Z, GtG]]
        )
        nu = self.options.wave_filter(dx)
        kv = coeffs.kv if self.kv_damping_enabled else 0.0
        wvisc = 0.5 * c.rot if self.options.viscosity else 0.0
        damp = np.block(
            [[(nu + kv) * GtG, Z, Z], [Z, wvisc * GtG + kv * c.rot * CtC, Z], [Z, Z, nu * GtG]]
        )
        self.mass, self.stiffness, self.damping = mass, stiff, damp
        self._lump_weights = dx * omega
        factor = cho_factor(mass)
        minv = cho_solve(factor, np.eye(3 * N))
        self._Aq = -minv @ stiff
        self._Av = -minv @ damp
        self._minv = minv
        # generalized-force directions of the boundary inputs
        self.moment_vector = np.zeros(3 * N)
        self.moment_vector[N + N - 3 : 2 * N] = np.array([1.0, -4.0, 3.0]) / (2.0 * dx)
        self._b_g1 = minv[:, N - 1]
        self._b_g = minv[:, 2 * N - 1]
        self._b_V = minv[:, 3 * N - 1]
        self._b_m = minv @ self.moment_vector

    def _second_order_ranges(self):
        N = self.grid.N
        return {"v": (1, N), "w": (1, N), "p": (1, N)}

    def _close(self, t, q, qd, z, fb):
        N, dx = self.grid.N, self.grid.dx
        for name in ("v", "p"):
            extrapolate_ghost(q[name], N)
            extrapolate_ghost(qd[name], N)
        for arr in (q["w"], qd["w"]):
            arr[0] = arr[2]
            arr[N + 2] = 2.0 * arr[N + 1] - arr[N]  # zero curvature at the tip
        slope_rate = (3.0 * qd["w"][N + 1] - 4.0 * qd["w"][N] + qd["w"][N - 1]) / (2.0 * dx)
        controls = ControlInput(
            V=self.kV * qd["p"][N + 1],
            m=self.km * slope_rate,
            g=-self.kg * qd["w"][N + 1],
            g1=0.0,
        )
        return controls, np.empty(0)

    def _accelerations(self, t, q, qd, controls, fi, fb):
        N = self.grid.N
        pos = np.concatenate([q["v"][2 : N + 2], q["w"][2 : N + 2], q["p"][2 : N + 2]])
        vel = np.concatenate([qd["v"][2 : N + 2], qd["w"][2 : N + 2], qd["p"][2 : N + 2]])
        acc = self._Aq @ pos
        if self.options.viscosity or self.kv_damping_enabled:
            acc += self._Av @ vel
        g1 = controls.g1 + fb.get("traction", (0.0, 0.0))[0]
        if g1:
            acc += g1 * self._b_g1
        if controls.V:
            acc -= controls.V * self._b_V
        if controls.g:
            acc += controls.g * self._b_g
        if controls.m:
            acc -= controls.m * self._b_m
        if fi:
            src = np.concatenate([np.asarray(fi.get(n, np.zeros(N + 3)))[2 : N + 2] for n in ("v", "w", "p")])
            acc += self._minv @ (np.tile(self._lump_weights, 3) * src)
        return {"v": acc[:N], "w": acc[N : 2 * N], "p": acc[2 * N :]}


def assemble_eb_fully_dynamic_linear(
    params: MaterialParams | Coefficients,
    grid: GridSpec,
    options: ModelOptions | None = None,
    gains: ControllerGains | None = None,
    forcing: ForcingFields | None = None,
) -> EBFullyDynamicLinear:
    if isinstance(params, MaterialParams):
        params.validate_for(ModelTag.EB_FD_LIN)
        params = Coefficients.from_params(params)
    return EBFullyDynamicLinear(params, grid, gains, options, forcing)
