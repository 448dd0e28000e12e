"""Common machinery for the semi-discrete beam systems.

A system owns a reduced first-order state vector

    y = [q (second-order nodal unknowns), qdot, z (first-order boundary unknowns)]

and reconstructs the full ghost-padded :class:`BeamState` from it through the
model's boundary closure. Tip nodes that carry a velocity-feedback law with a
positive gain become first-order unknowns (their boundary condition is solved
for the tip velocity); with a zero gain the condition is algebraic and the node
is eliminated outright.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from ..controllers import ControlInput, ControllerGains
from ..core import BeamState, Coefficients, GridSpec, ModelTag

__all__ = ["ModelOptions", "ForcingFields", "Evaluation", "SemiDiscreteSystem", "extrapolate_ghost"]

VISCOSITY_SCALINGS = ("dx_squared", "as_printed")


@dataclass(frozen=True)
class ModelOptions:
    """Filtering and damping switches.

    viscosity_scaling "dx_squared" multiplies the wave-type filter terms by dx**2
    so they vanish under refinement; "as_printed" drops that factor.
    """

    viscosity: bool = True
    viscosity_scaling: str = "dx_squared"
    kv_damping: bool = False

    def __post_init__(self):
        if self.viscosity_scaling not in VISCOSITY_SCALINGS:
            raise ValueError(f"viscosity_scaling must be one of {VISCOSITY_SCALINGS}")

    def wave_filter(self, dx: float) -> float:
        """Coefficient of the filter on second-order (wave-type) fields."""
        if not self.viscosity:
            return 0.0
        return dx * dx if self.viscosity_scaling == "dx_squared" else 1.0


def _no_interior(t: float) -> Mapping[str, np.ndarray]:
    return {}


def _no_boundary(t: float) -> Mapping[str, tuple[float, float]]:
    return {}


@dataclass(frozen=True)
class ForcingFields:
    """Optional source terms for manufactured-solution runs.

    ``interior(t)`` maps a field name to a ghost-padded array of sources added to
    that field's equation. ``boundary(t)`` maps a boundary-condition name
    ("traction", "moment", "shear") to ``(value, time derivative)``; the value is
    added to the homogeneous side of that condition.
    """

    interior: Callable[[float], Mapping[str, np.ndarray]] = _no_interior
    boundary: Callable[[float], Mapping[str, tuple[float, float]]] = _no_boundary

    @property
    def is_zero(self) -> bool:
        return self.interior is _no_interior and self.boundary is _no_boundary


@dataclass(frozen=True)
class Evaluation:
    """Everything the closure and the equations produce for one reduced state."""

    state: BeamState
    controls: ControlInput
    accelerations: Mapping[str, np.ndarray]


def extrapolate_ghost(z: np.ndarray, N: int) -> None:
    """Fill the tip ghost by quadratic extrapolation (for ghosts no stencil reads)."""
    z[N + 2] = 3.0 * z[N + 1] - 3.0 * z[N] + z[N - 1]


class SemiDiscreteSystem:
    """Base class; subclasses supply the layout, closure and interior equations."""

    tag: ModelTag

    def __init__(
        self,
        coeffs: Coefficients,
        grid: GridSpec,
        gains: ControllerGains | None = None,
        options: ModelOptions | None = None,
        forcing: ForcingFields | None = None,
    ):
        self.coeffs = coeffs
        self.grid = grid
        self.gains = gains if gains is not None else ControllerGains.uncontrolled()
        self.options = options if options is not None else ModelOptions()
        self.forcing = forcing if forcing is not None else ForcingFields()
        self.kV, self.km, self.kg = self.gains.channel_gains(self.tag)
        self.second_order: dict[str, tuple[int, int]] = self._second_order_ranges()
        self.first_order: tuple[tuple[str, int], ...] = self._first_order_nodes()
        self._slices = {}
        pos = 0
        for name, (lo, hi) in self.second_order.items():
            self._slices[name] = slice(pos, pos + hi - lo + 1)
            pos += hi - lo + 1
        self.n2 = pos
        self.size = 2 * pos + len(self.first_order)

    # -- hooks ---------------------------------------------------------------
    def _second_order_ranges(self) -> dict[str, tuple[int, int]]:
        raise NotImplementedError

    def _first_order_nodes(self) -> tuple[tuple[str, int], ...]:
        return ()

    def _close(self, t, q, qd, z, fb) -> tuple[ControlInput, np.ndarray]:
        """Complete q, qd in place; return controls and first-order rates."""
        raise NotImplementedError

    def _accelerations(self, t, q, qd, controls, fi, fb) -> dict[str, np.ndarray]:
        raise NotImplementedError

    @property
    def viscosity_enabled(self) -> bool:
        return self.options.viscosity

    @property
    def kv_damping_enabled(self) -> bool:
        return self.options.kv_damping and self.coeffs.kv > 0

    # -- packing -------------------------------------------------------------
    def pack(self, state: BeamState) -> np.ndarray:
        if state.tag is not self.tag:
            raise ValueError(f"state is {state.tag.value}, system is {self.tag.value}")
        if state.N != self.grid.N:
            raise ValueError("state and grid disagree on N")
        y = np.empty(self.size)
        for name, (lo, hi) in self.second_order.items():
            s = self._slices[name]
            y[s] = state.fields[name][lo + 1 : hi + 2]
            y[self.n2 + s.start : self.n2 + s.stop] = state.rates[name][lo + 1 : hi + 2]
        for k, (name, node) in enumerate(self.first_order):
            y[2 * self.n2 + k] = state.fields[name][node + 1]
        return y

    def _unpack(self, y: np.ndarray):
        size = self.grid.size
        q = {name: np.zeros(size) for name in self.tag.fields}
        qd = {name: np.zeros(size) for name in self.tag.fields}
        for name, (lo, hi) in self.second_order.items():
            s = self._slices[name]
            q[name][lo + 1 : hi + 2] = y[s]
            qd[name][lo + 1 : hi + 2] = y[self.n2 + s.start : self.n2 + s.stop]
        z = y[2 * self.n2 :]
        for k, (name, node) in enumerate(self.first_order):
            q[name][node + 1] = z[k]
        return q, qd, z

    def _forcing(self, t: float):
        if self.forcing.is_zero:
            return {}, {}
        return self.forcing.interior(t), self.forcing.boundary(t)

    # -- evaluation ------------------------------------------------------------
    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        q, qd, z = self._unpack(y)
        fi, fb = self._forcing(t)
        controls, zdot = self._close(t, q, qd, z, fb)
        acc = self._accelerations(t, q, qd, controls, fi, fb)
        out = np.empty(self.size)
        out[: self.n2] = y[self.n2 : 2 * self.n2]
        for name, s in self._slices.items():
            out[self.n2 + s.start : self.n2 + s.stop] = acc[name]
        out[2 * self.n2 :] = zdot
        return out

    def evaluate(self, t: float, y: np.ndarray) -> Evaluation:
        q, qd, z = self._unpack(y)
        fi, fb = self._forcing(t)
        controls, _ = self._close(t, q, qd, z, fb)
        acc = self._accelerations(t, q, qd, controls, fi, fb)
        state = BeamState(tag=self.tag, t=float(t), fields=q, rates=qd)
        return Evaluation(state=state, controls=controls, accelerations=acc)

    def state_from(self, t: float, y: np.ndarray) -> BeamState:
        q, qd, z = self._unpack(y)
        self._close(t, q, qd, z, self._forcing(t)[1])
        return BeamState(tag=self.tag, t=float(t), fields=q, rates=qd)

    def close_state(self, state: BeamState) -> BeamState:
        """Re-impose the boundary closure on an arbitrary state (ghost solve)."""
        return self.state_from(state.t, self.pack(state))

    def controls(self, state: BeamState) -> ControlInput:
        return self.evaluate(state.t, self.pack(state)).controls

    def accelerations(self, state: BeamState) -> dict[str, np.ndarray]:
        """Accelerations of the second-order unknowns (after the closure)."""
        return dict(self.evaluate(state.t, self.pack(state)).accelerations)
