"""Domain types shared by every model: material constants, scaling, grid, state.

All simulation work happens in nondimensional variables

    x* = x / L,   t* = t / A1,   (v*, w*) = (v, w) / L,   A1 = L * sqrt(rho / alpha11)

so the beam always occupies [0, 1]. The derivation of every coefficient used by
the schemes is written out in ``docs/nondimensionalization.md``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from functools import cached_property
from types import MappingProxyType
from typing import Mapping

import numpy as np

__all__ = [
    "ModelTag",
    "MaterialParams",
    "NondimScales",
    "Coefficients",
    "GridSpec",
    "InitialCondition",
    "BeamState",
    "derive_nondim",
    "make_initial_state",
    "check_state",
    "nondimensionalize_state",
    "dimensionalize_state",
    "StateError",
]

VACUUM_PERMEABILITY = 4e-7 * math.pi


class StateError(ValueError):
    """A state violates a clamped-end or layout invariant."""


class ModelTag(str, enum.Enum):
    EB_NL = "EB_NL"
    MT_NL = "MT_NL"
    EB_LIN = "EB_LIN"
    MT_LIN = "MT_LIN"
    EB_FD_LIN = "EB_FD_LIN"

    @property
    def family(self) -> str:
        return "MT" if self in (ModelTag.MT_NL, ModelTag.MT_LIN) else "EB"

    @property
    def linear(self) -> bool:
        return self in (ModelTag.EB_LIN, ModelTag.MT_LIN, ModelTag.EB_FD_LIN)

    @property
    def fields(self) -> tuple[str, ...]:
        if self.family == "MT":
            return ("v", "w", "psi")
        if self is ModelTag.EB_FD_LIN:
            return ("v", "w", "p")
        return ("v", "w")


@dataclass(frozen=True)
class MaterialParams:
    """Physical constants of one single-layer piezoelectric beam (SI units).

    ``alpha1`` is derived: alpha11 + gamma3**2 * beta3. ``kv_alpha_tilde`` is the
    Kelvin-Voigt damping coefficient (0 disables it); ``mu`` is only used by the
    fully dynamic model.
    """

    rho: float = 7600.0
    h: float = 0.01
    L: float = 1.0
    alpha11: float = 1.4e7 - 1.0
    gamma3: float = 1e-3
    beta3: float = 1e6
    alpha3: float = 4.5e5
    mu: float = VACUUM_PERMEABILITY
    kv_alpha_tilde: float = 0.0

    def __post_init__(self):
        for name in ("rho", "h", "L", "alpha11", "beta3"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)!r}")
        if self.gamma3 < 0:
            raise ValueError("gamma3 must be nonnegative")
        if self.kv_alpha_tilde < 0:
            raise ValueError("kv_alpha_tilde must be nonnegative")
        if not self.h / self.L < 1:
            raise ValueError("thin-beam regime requires h/L < 1")

    @property
    def alpha1(self) -> float:
        return self.alpha11 + self.gamma3**2 * self.beta3

    @classmethod
    def sample(cls, **overrides) -> "MaterialParams":
        """Constants of the sample beam: alpha1 = 1.4e7 exactly."""
        gamma3 = overrides.get("gamma3", 1e-3)
        beta3 = overrides.get("beta3", 1e6)
        base = dict(alpha11=1.4e7 - gamma3**2 * beta3)
        base.update(overrides)
        return cls(**base)

    def validate_for(self, tag: ModelTag) -> None:
        if tag.family == "MT" and not self.alpha3 > 0:
            raise ValueError("alpha3 must be positive for Mindlin-Timoshenko models")
        if tag is ModelTag.EB_FD_LIN and not self.mu > 0:
            raise ValueError("mu must be positive for the fully dynamic model")


@dataclass(frozen=True)
class NondimScales:
    """Maps between SI and nondimensional quantities."""

    A1: float  # time scale (s)
    length: float  # length scale (m); also the displacement scale
    stress: float  # alpha11 (N/m^2)
    voltage: float  # V_si = voltage * V_nondim
    charge: float  # p_si = charge * p_nondim (C/m)
    energy: float  # E_si = energy * E_nondim (J/m width)

    def time(self, t_nondim):
        return np.asarray(t_nondim) * self.A1


def derive_nondim(params: MaterialParams) -> NondimScales:
    A1 = params.L * math.sqrt(params.rho / params.alpha11)
    return NondimScales(
        A1=A1,
        length=params.L,
        stress=params.alpha11,
        voltage=params.alpha11 * params.h / params.gamma3 if params.gamma3 > 0 else math.inf,
        charge=params.L * math.sqrt(params.alpha11 / params.beta3),
        energy=params.alpha11 * params.h * params.L**2,
    )


@dataclass(frozen=True)
class Coefficients:
    """Dimensionless groups entering the semi-discrete equations.

    rot   rotational inertia  (h/L)^2 / 12
    bend  bending stiffness   (alpha1/alpha11) * rot
    kappa alpha1 / alpha11
    shear alpha3 / alpha11
    couple gamma3 * sqrt(beta3 / alpha11)   (kappa - 1 == couple**2)
    magnetic mu * alpha11 / (beta3 * rho)
    kv    Kelvin-Voigt coefficient divided by alpha11 * A1
    """

    eta: float
    kappa: float
    rot: float
    bend: float
    shear: float
    couple: float
    magnetic: float
    kv: float

    @classmethod
    def from_params(cls, params: MaterialParams) -> "Coefficients":
        scales = derive_nondim(params)
        eta = params.h / params.L
        kappa = params.alpha1 / params.alpha11
        rot = eta**2 / 12.0
        return cls(
            eta=eta,
            kappa=kappa,
            rot=rot,
            bend=kappa * rot,
            shear=params.alpha3 / params.alpha11,
            couple=params.gamma3 * math.sqrt(params.beta3 / params.alpha11),
            magnetic=params.mu * params.alpha11 / (params.beta3 * params.rho),
            kv=params.kv_alpha_tilde / (params.alpha11 * scales.A1),
        )


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid x_i = i*dx on [0, length] with one ghost node at each end.

    The tip sits on node N (x_N = length), so dx = length / N; arrays are stored
    with offset 1 so that node -1 lives at index 0 and node N+1 at index N+2.
    """

    N: int
    length: float = 1.0

    def __post_init__(self):
        if not isinstance(self.N, (int, np.integer)) or self.N < 8:
            raise ValueError(f"N must be an integer >= 8, got {self.N!r}")
        if self.N % 2:
            raise ValueError(f"N must be even for Simpson quadrature, got {self.N}")

    @property
    def dx(self) -> float:
        return self.length / self.N

    @property
    def size(self) -> int:
        return self.N + 3

    def idx(self, i: int) -> int:
        return i + 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(-1, self.N + 2) * self.dx

    @cached_property
    def simpson_weights(self) -> np.ndarray:
        """Composite Simpson weights over nodes 0..N (already multiplied by dx)."""
        wts = np.ones(self.N + 1)
        wts[1:-1:2] = 4.0
        wts[2:-1:2] = 2.0
        wts *= self.dx / 3.0
        wts.setflags(write=False)
        return wts


@dataclass(frozen=True)
class InitialCondition:
    """amplitude * exp(sign * ((x - center) / width)**2) on the selected fields.

    ``center`` and ``width`` are fractions of the beam length. Entries of
    ``fields`` are field names ("v", "w", "psi", "p") for displacements and
    "<name>dot" for velocities.
    """

    amplitude: float = 1e-3
    center: float = 0.5
    width: float = 0.1
    sign: int = -1
    fields: tuple[str, ...] = ("w", "v", "vdot")
    clamp_tol: float = 1e-10

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "fields", tuple(self.fields))

    def profile(self, x: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.amplitude * np.exp(self.sign * ((x - self.center) / self.width) ** 2)


def _frozen(arrays: Mapping[str, np.ndarray]) -> Mapping[str, np.ndarray]:
    out = {}
    for name, arr in arrays.items():
        a = np.array(arr, dtype=float, copy=True)
        a.setflags(write=False)
        out[name] = a
    return MappingProxyType(out)


@dataclass(frozen=True)
class BeamState:
    """Field values and velocities at one nondimensional time.

    Every array covers nodes -1..N+1 (see :class:`GridSpec`).
    """

    tag: ModelTag
    t: float
    fields: Mapping[str, np.ndarray]
    rates: Mapping[str, np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "tag", ModelTag(self.tag))
        object.__setattr__(self, "fields", _frozen(self.fields))
        object.__setattr__(self, "rates", _frozen(self.rates))
        if set(self.fields) != set(self.tag.fields) or set(self.rates) != set(self.tag.fields):
            raise StateError(f"{self.tag.value} expects fields {self.tag.fields}")

    @property
    def N(self) -> int:
        return len(self.fields["v"]) - 3

    def __getitem__(self, name: str) -> np.ndarray:
        if name.endswith("dot"):
            return self.rates[name[:-3]]
        return self.fields[name]

    def replace(self, **changes) -> "BeamState":
        return replace(self, **changes)


def check_state(state: BeamState, atol: float = 0.0) -> None:
    """Raise :class:`StateError` unless the clamped-end invariants hold."""
    i0 = 1
    for name in state.tag.fields:
        for label, arr in (("", state.fields[name]), ("dot", state.rates[name])):
            if abs(arr[i0]) > atol:
                raise StateError(f"{name}{label}(0) = {arr[i0]!r} violates the clamp")
    if state.tag.family == "EB":
        for label, arr in (("w", state.fields["w"]), ("wdot", state.rates["w"])):
            if abs(arr[0] - arr[2]) > atol:
                raise StateError(f"{label} ghost at x_-1 does not mirror x_1")
    for arr in list(state.fields.values()) + list(state.rates.values()):
        if not np.all(np.isfinite(arr)):
            raise StateError("state contains non-finite values")


def make_initial_state(grid: GridSpec, ic: InitialCondition, tag: ModelTag | str) -> BeamState:
    """Evaluate the initial profile on the grid and enforce the clamp at x = 0.

    Boundary nodes and ghosts at the tip are left as sampled; the model's
    closure overwrites whatever the boundary conditions determine.
    """
    tag = ModelTag(tag)
    x = grid.x / grid.length
    prof = ic.profile(x)
    at_clamp = abs(float(ic.profile(np.array([0.0]))[0]))
    fields = {name: np.zeros(grid.size) for name in tag.fields}
    rates = {name: np.zeros(grid.size) for name in tag.fields}
    for entry in ic.fields:
        name, is_rate = (entry[:-3], True) if entry.endswith("dot") else (entry, False)
        if name not in fields:
            continue
        if at_clamp > ic.clamp_tol:
            raise StateError(
                f"initial profile is {at_clamp:.3e} at the clamped end (tolerance {ic.clamp_tol:.1e})"
            )
        (rates if is_rate else fields)[name][:] = prof
    for name in tag.fields:
        for arr in (fields[name], rates[name]):
            arr[1] = 0.0
            # only the EB slope clamp uses the left ghost (mirror image)
            arr[0] = arr[2] if (name == "w" and tag.family == "EB") else 0.0
    return BeamState(tag=tag, t=0.0, fields=fields, rates=rates)


def nondimensionalize_state(
    t_si: float,
    fields_si: Mapping[str, np.ndarray],
    rates_si: Mapping[str, np.ndarray],
    params: MaterialParams,
    tag: ModelTag | str,
) -> BeamState:
    s = derive_nondim(params)
    fields, rates = {}, {}
    for name in ModelTag(tag).fields:
        scale = _field_scale(name, s)
        fields[name] = np.asarray(fields_si[name]) / scale
        rates[name] = np.asarray(rates_si[name]) * s.A1 / scale
    return BeamState(tag=tag, t=t_si / s.A1, fields=fields, rates=rates)


def dimensionalize_state(state: BeamState, params: MaterialParams):
    """Return (t, fields, rates) in SI units."""
    s = derive_nondim(params)
    fields, rates = {}, {}
    for name in state.tag.fields:
        scale = _field_scale(name, s)
        fields[name] = np.asarray(state.fields[name]) * scale
        rates[name] = np.asarray(state.rates[name]) * scale / s.A1
    return state.t * s.A1, fields, rates


def _field_scale(name: str, s: NondimScales) -> float:
    if name in ("v", "w"):
        return s.length
    if name == "psi":
        return 1.0
    if name == "p":
        return s.charge
    raise KeyError(name)
