"""Collocated (B*-type) boundary feedback: voltage, tip moment and tip shear.

Sign conventions are those that make the discrete energy non-increasing with
nonnegative gains (see ``docs/model_reference.md``):

    EB   V = c1 (vdot_N + I),   m = +c2 d/dt(w_x)_N,   g = -c3 wdot_N
    MT   V = c4 (vdot_N + I),   m = -c5 psidot_N,       g = -c6 wdot_N
    FD   V = c1 pdot_N,         m = +c2 d/dt(w_x)_N,   g = -c3 wdot_N

where I approximates the integral of w_x * wdot_x over the beam (zero for the
linear models, whose energy has no slope coupling).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import BeamState, GridSpec, ModelTag

__all__ = [
    "ControlMode",
    "ControllerGains",
    "ControlInput",
    "node_slopes",
    "simpson_slope_rate",
    "bstar_integral",
    "tip_observations",
    "compute_controls",
]


class ControlMode(str, enum.Enum):
    FULL = "Full"
    PARTIAL = "Partial"
    UNCONTROLLED = "Uncontrolled"


@dataclass(frozen=True)
class ControllerGains:
    """Nonnegative feedback gains; c1-c3 act on EB models, c4-c6 on MT.

    ``continuous_law`` halves the Simpson slope-rate term so the voltage law
    uses the integral of w_x * wdot_x (the B* observation) rather than its
    double; set it False to use the undivided Simpson sum.
    """

    c1: float = 1.0
    c2: float = 1.0
    c3: float = 0.1
    c4: float = 1.0
    c5: float = 0.1
    c6: float = 0.1
    mode: ControlMode = ControlMode.FULL
    continuous_law: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", ControlMode(self.mode))
        for name in ("c1", "c2", "c3", "c4", "c5", "c6"):
            if getattr(self, name) < 0:
                raise ValueError(f"gain {name} must be nonnegative")

    def channel_gains(self, tag: ModelTag | str) -> tuple[float, float, float]:
        """Effective (voltage, moment, shear) gains after applying the mode."""
        tag = ModelTag(tag)
        raw = (self.c4, self.c5, self.c6) if tag.family == "MT" else (self.c1, self.c2, self.c3)
        if self.mode is ControlMode.UNCONTROLLED:
            return (0.0, 0.0, 0.0)
        if self.mode is ControlMode.PARTIAL:
            return (0.0, raw[1], raw[2])
        return raw

    @classmethod
    def uncontrolled(cls) -> "ControllerGains":
        return cls(mode=ControlMode.UNCONTROLLED)


@dataclass(frozen=True)
class ControlInput:
    """Nondimensional boundary inputs: voltage, tip moment, tip shear, axial traction."""

    V: float = 0.0
    m: float = 0.0
    g: float = 0.0
    g1: float = 0.0


def node_slopes(z: np.ndarray, grid: GridSpec, ghost_left: bool) -> np.ndarray:
    """Second-order slopes at nodes 0..N: centred inside, one-sided at the tip.

    At x = 0 the slope is centred through the ghost when ``ghost_left`` (EB
    clamp, where it vanishes) and one-sided forward otherwise.
    """
    N, dx = grid.N, grid.dx
    s = np.empty(N + 1)
    s[1:N] = (z[3 : N + 2] - z[1:N]) / (2 * dx)
    s[N] = (3 * z[N + 1] - 4 * z[N] + z[N - 1]) / (2 * dx)
    if ghost_left:
        s[0] = (z[2] - z[0]) / (2 * dx)
    else:
        s[0] = (-3 * z[1] + 4 * z[2] - z[3]) / (2 * dx)
    return s


def simpson_slope_rate(w: np.ndarray, wdot: np.ndarray, grid: GridSpec, ghost_left: bool = True) -> float:
    """d/dt of the Simpson sum of squared slopes, i.e. ~ 2 * int w_x wdot_x dx."""
    s = node_slopes(w, grid, ghost_left)
    sd = node_slopes(wdot, grid, ghost_left)
    return float(np.dot(grid.simpson_weights, 2.0 * s * sd))


def bstar_integral(state: BeamState, gains: ControllerGains, grid: GridSpec) -> float:
    """Slope-coupling term I entering the voltage law and the dissipation identity."""
    if state.tag.linear:
        return 0.0
    rate = simpson_slope_rate(state.fields["w"], state.rates["w"], grid, state.tag.family == "EB")
    return 0.5 * rate if gains.continuous_law else rate


def tip_observations(state: BeamState, grid: GridSpec) -> dict[str, float]:
    """Collocated tip measurements used by the feedback laws."""
    N, dx = grid.N, grid.dx
    wd = state.rates["w"]
    obs = {
        "vdot": float(state.rates["v"][N + 1]),
        "wdot": float(wd[N + 1]),
        "slope_rate": float((3 * wd[N + 1] - 4 * wd[N] + wd[N - 1]) / (2 * dx)),
    }
    if "psi" in state.rates:
        obs["psidot"] = float(state.rates["psi"][N + 1])
    if "p" in state.rates:
        obs["pdot"] = float(state.rates["p"][N + 1])
    return obs


def compute_controls(state: BeamState, gains: ControllerGains, grid: GridSpec) -> ControlInput:
    """Evaluate the feedback laws on a ghost-consistent state."""
    kV, km, kg = gains.channel_gains(state.tag)
    if kV == km == kg == 0.0:
        return ControlInput()
    obs = tip_observations(state, grid)
    if state.tag is ModelTag.EB_FD_LIN:
        return ControlInput(V=kV * obs["pdot"], m=km * obs["slope_rate"], g=-kg * obs["wdot"])
    V = kV * (obs["vdot"] + bstar_integral(state, gains, grid)) if kV else 0.0
    if state.tag.family == "MT":
        return ControlInput(V=V, m=-km * obs["psidot"], g=-kg * obs["wdot"])
    return ControlInput(V=V, m=km * obs["slope_rate"], g=-kg * obs["wdot"])
