"""Filtered finite-difference simulation of piezoelectric beams under boundary feedback."""

from .controllers import ControlInput, ControllerGains, ControlMode, compute_controls
from .core import (
    BeamState,
    Coefficients,
    GridSpec,
    InitialCondition,
    MaterialParams,
    ModelTag,
    derive_nondim,
    make_initial_state,
)
from .energy import EnergyBreakdown, compute_energy
from .integrator import IntegratorConfig, IntegratorError, integrate, step
from .models import ModelOptions, assemble

__version__ = "0.1.0"

__all__ = [
    "BeamState",
    "Coefficients",
    "ControlInput",
    "ControlMode",
    "ControllerGains",
    "EnergyBreakdown",
    "GridSpec",
    "InitialCondition",
    "IntegratorConfig",
    "IntegratorError",
    "MaterialParams",
    "ModelOptions",
    "ModelTag",
    "assemble",
    "compute_controls",
    "compute_energy",
    "derive_nondim",
    "integrate",
    "make_initial_state",
    "step",
]
