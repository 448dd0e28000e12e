"""Discrete energies, boundary power and filter dissipation.

Electrostatic models (Simpson quadrature over nodes 0..N, second-order slopes):

    EB  E = 1/2 int [vt^2 + r wxt^2 + wt^2 + N^2 + b wxx^2]
    MT  E = 1/2 int [vt^2 + r psit^2 + wt^2 + N^2 + b psix^2 + a3 (w_x + psi)^2]

with N = v_x + w_x^2/2 (N = v_x for the linear models). Along solutions

    EB  dE/dt = -V (vt_N + I) - m d/dt(w_x)_N + g wt_N + P_visc
    MT  dE/dt = -V (vt_N + I) + m psit_N + g wt_N + P_visc

with I the slope-coupling integral and P_visc <= 0 the filter power, so the
feedback laws in :mod:`piezobeam.controllers` give dE/dt <= P_visc.

The fully dynamic model uses the energy of its discrete Lagrangian instead,
which the semi-discrete flow conserves exactly when uncontrolled.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .controllers import ControlInput, ControllerGains, bstar_integral, node_slopes
from .core import BeamState, Coefficients, GridSpec, MaterialParams, ModelTag
from .models.base import ModelOptions
from .models.fully_dynamic import difference_matrices

__all__ = [
    "EnergyBreakdown",
    "compute_energy",
    "boundary_power",
    "dissipation_rate",
    "viscous_power",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy components (nondimensional).

    ``kinetic`` = kinetic_axial + kinetic_transverse. In the EB/MT models the
    stretching term holds the full membrane strain (so it carries the slope
    coupling); in the fully dynamic model ``stretching`` is the purely elastic
    1/2 v_x^2 and ``electric`` the completed square 1/2 (c v_x - p_x)^2, which
    is how the cross term is split.
    """

    kinetic_axial: float = 0.0
    kinetic_transverse: float = 0.0
    stretching: float = 0.0
    bending: float = 0.0
    shear: float = 0.0
    magnetic: float = 0.0
    electric: float = 0.0

    @property
    def kinetic(self) -> float:
        return self.kinetic_axial + self.kinetic_transverse

    @property
    def axial(self) -> float:
        """Energy of the stretching motion: axial kinetic plus stretching."""
        return self.kinetic_axial + self.stretching

    @property
    def total(self) -> float:
        return (
            self.kinetic_axial
            + self.kinetic_transverse
            + self.stretching
            + self.bending
            + self.shear
            + self.magnetic
            + self.electric
        )

    def as_dict(self) -> dict[str, float]:
        d = asdict(self)
        d.update(kinetic=self.kinetic, axial=self.axial, total=self.total)
        return d


def _coeffs(params) -> Coefficients:
    return params if isinstance(params, Coefficients) else Coefficients.from_params(params)


def _curvature(w: np.ndarray, grid: GridSpec) -> np.ndarray:
    N = grid.N
    return (w[2 : N + 3] - 2.0 * w[1 : N + 2] + w[0 : N + 1]) / grid.dx**2


def compute_energy(state: BeamState, params: MaterialParams | Coefficients, grid: GridSpec) -> EnergyBreakdown:
    c = _coeffs(params)
    if state.tag is ModelTag.EB_FD_LIN:
        return fd_energy(state, c, grid)
    N = grid.N
    wts = grid.simpson_weights
    f, r = state.fields, state.rates
    nodes = slice(1, N + 2)
    eb = state.tag.family == "EB"
    wx = node_slopes(f["w"], grid, ghost_left=eb)
    strain = node_slopes(f["v"], grid, ghost_left=False)
    if not state.tag.linear:
        strain = strain + 0.5 * wx**2
    kin_ax = 0.5 * np.dot(wts, r["v"][nodes] ** 2)
    kin_tr = 0.5 * np.dot(wts, r["w"][nodes] ** 2)
    stretching = 0.5 * np.dot(wts, strain**2)
    if eb:
        wxt = node_slopes(r["w"], grid, ghost_left=True)
        kin_tr += 0.5 * c.rot * np.dot(wts, wxt**2)
        bending = 0.5 * c.bend * np.dot(wts, _curvature(f["w"], grid) ** 2)
        return EnergyBreakdown(float(kin_ax), float(kin_tr), float(stretching), float(bending))
    psi = f["psi"][nodes]
    kin_tr += 0.5 * c.rot * np.dot(wts, r["psi"][nodes] ** 2)
    psix = node_slopes(f["psi"], grid, ghost_left=False)
    bending = 0.5 * c.bend * np.dot(wts, psix**2)
    shear = 0.5 * c.shear * np.dot(wts, (wx + psi) ** 2)
    return EnergyBreakdown(float(kin_ax), float(kin_tr), float(stretching), float(bending), float(shear))


def fd_energy(state: BeamState, c: Coefficients, grid: GridSpec) -> EnergyBreakdown:
    """Energy of the fully dynamic scheme's discrete Lagrangian."""
    N, dx = grid.N, grid.dx
    G, C, omega = difference_matrices(N, dx)
    lump = dx * omega
    part = {}
    for name in ("v", "w", "p"):
        part[name] = np.asarray(state.fields[name][2 : N + 2])
        part[name + "t"] = np.asarray(state.rates[name][2 : N + 2])
    gv, gp = G @ part["v"], G @ part["p"]
    curv = C @ part["w"]
    cw = np.r_[0.5, np.ones(N - 1)]
    return EnergyBreakdown(
        kinetic_axial=float(0.5 * np.dot(lump, part["vt"] ** 2)),
        kinetic_transverse=float(
            0.5 * np.dot(lump, part["wt"] ** 2) + 0.5 * c.rot * dx * np.sum((G @ part["wt"]) ** 2)
        ),
        stretching=float(0.5 * dx * np.sum(gv**2)),
        bending=float(0.5 * c.bend * dx * np.dot(cw, curv**2)),
        magnetic=float(0.5 * c.magnetic * np.dot(lump, part["pt"] ** 2)),
        electric=float(0.5 * dx * np.sum((c.couple * gv - gp) ** 2)),
    )


def boundary_power(
    state: BeamState, controls: ControlInput, grid: GridSpec, gains: ControllerGains | None = None
) -> float:
    """Rate of work done on the beam by the boundary inputs (signed)."""
    N, dx = grid.N, grid.dx
    r = state.rates
    wt = r["w"][N + 1]
    slope_rate = (3.0 * r["w"][N + 1] - 4.0 * r["w"][N] + r["w"][N - 1]) / (2.0 * dx)
    if state.tag is ModelTag.EB_FD_LIN:
        return controls.g1 * r["v"][N + 1] - controls.V * r["p"][N + 1] + controls.g * wt - controls.m * slope_rate
    gains = gains if gains is not None else ControllerGains()
    current = r["v"][N + 1] + bstar_integral(state, gains, grid)
    if state.tag.family == "MT":
        return -controls.V * current + controls.m * r["psi"][N + 1] + controls.g * wt
    return -controls.V * current - controls.m * slope_rate + controls.g * wt


def dissipation_rate(
    controls: ControlInput,
    tip: dict[str, float],
    simpson_term: float,
    gains: ControllerGains,
    tag: ModelTag | str = ModelTag.EB_NL,
) -> float:
    """Predicted dE/dt from the feedback laws, as a sum of negative squares.

    ``tip`` holds the collocated measurements (see
    :func:`~piezobeam.controllers.tip_observations`); ``simpson_term`` is the
    slope-coupling integral I in the voltage law. Channels whose input is
    identically zero contribute nothing.
    """
    tag = ModelTag(tag)
    kV, km, kg = gains.channel_gains(tag)
    rate = 0.0
    if tag is ModelTag.EB_FD_LIN:
        rate -= kV * tip.get("pdot", 0.0) ** 2
    elif kV:
        rate -= kV * (tip.get("vdot", 0.0) + simpson_term) ** 2
    if tag.family == "MT":
        rate -= km * tip.get("psidot", 0.0) ** 2
    else:
        rate -= km * tip.get("slope_rate", 0.0) ** 2
    rate -= kg * tip.get("wdot", 0.0) ** 2
    return float(rate)


def _simpson_pairing(force: np.ndarray, vel: np.ndarray, grid: GridSpec) -> float:
    """Simpson approximation of int force * vel over nodes 0..N.

    ``force`` lives on nodes 1..N-1; the clamp contributes nothing (vel = 0) and
    the tip value is extrapolated cubically from nodes N-1..N-4.
    """
    N = grid.N
    full = np.zeros(N + 1)
    full[1:N] = force
    full[N] = 4.0 * force[-1] - 6.0 * force[-2] + 4.0 * force[-3] - force[-4]
    return float(np.dot(grid.simpson_weights, full * vel[1 : N + 2]))


def viscous_power(
    state: BeamState, params: MaterialParams | Coefficients, grid: GridSpec, options: ModelOptions
) -> float:
    """Power of the filter and Kelvin-Voigt terms (nonpositive up to quadrature error)."""
    c = _coeffs(params)
    N, dx = grid.N, grid.dx
    r = state.rates
    nu = options.wave_filter(dx)
    kv = c.kv if (options.kv_damping and c.kv > 0) else 0.0
    wvisc = 0.5 * c.rot if options.viscosity else 0.0
    if state.tag is ModelTag.EB_FD_LIN:
        G, C, omega = difference_matrices(N, dx)
        vel = {n: np.asarray(r[n][2 : N + 2]) for n in ("v", "w", "p")}
        cw = np.r_[0.5, np.ones(N - 1)]
        p = -(nu + kv) * dx * np.sum((G @ vel["v"]) ** 2) - nu * dx * np.sum((G @ vel["p"]) ** 2)
        p -= wvisc * dx * np.sum((G @ vel["w"]) ** 2) + kv * c.rot * dx * np.dot(cw, (C @ vel["w"]) ** 2)
        return float(p)

    def lap(z):
        return (z[3 : N + 2] - 2.0 * z[2 : N + 1] + z[1:N]) / dx**2

    total = 0.0
    if nu or kv:
        total += _simpson_pairing((nu + kv) * lap(r["v"]), r["v"], grid)
    if state.tag.family == "EB":
        if wvisc:
            total += _simpson_pairing(wvisc * lap(r["w"]), r["w"], grid)
        if kv:
            wt = r["w"]
            bih = (wt[4 : N + 3] - 4 * wt[3 : N + 2] + 6 * wt[2 : N + 1] - 4 * wt[1:N] + wt[0 : N - 1]) / dx**4
            total += _simpson_pairing(-kv * c.rot * bih, wt, grid)
    else:
        filt = c.kappa * nu + kv
        if filt:
            total += c.rot * _simpson_pairing(filt * lap(r["psi"]), r["psi"], grid)
        if nu:
            total += _simpson_pairing(c.shear * nu * lap(r["w"]), r["w"], grid)
    return float(total)
