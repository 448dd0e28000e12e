"""Semi-discrete model assemblies."""

from __future__ import annotations

from ..core import GridSpec, MaterialParams, ModelTag
from .base import Evaluation, ForcingFields, ModelOptions, SemiDiscreteSystem
from .electrostatic import (
    EBElectrostatic,
    MTElectrostatic,
    assemble_eb_electrostatic,
    assemble_linearized,
    assemble_mt_electrostatic,
)
from .fully_dynamic import EBFullyDynamicLinear, assemble_eb_fully_dynamic_linear

__all__ = [
    "Evaluation",
    "ForcingFields",
    "ModelOptions",
    "SemiDiscreteSystem",
    "EBElectrostatic",
    "MTElectrostatic",
    "EBFullyDynamicLinear",
    "assemble",
    "assemble_eb_electrostatic",
    "assemble_mt_electrostatic",
    "assemble_linearized",
    "assemble_eb_fully_dynamic_linear",
]


def assemble(tag, params, grid: GridSpec, options=None, gains=None, forcing=None) -> SemiDiscreteSystem:
    """Dispatch on the model tag."""
    tag = ModelTag(tag)
    if isinstance(params, MaterialParams):
        params.validate_for(tag)
    if tag is ModelTag.EB_NL:
        return assemble_eb_electrostatic(params, grid, options, gains, forcing)
    if tag is ModelTag.MT_NL:
        return assemble_mt_electrostatic(params, grid, options, gains, forcing)
    if tag is ModelTag.EB_FD_LIN:
        return assemble_eb_fully_dynamic_linear(params, grid, options, gains, forcing)
    return assemble_linearized(params, grid, tag.family, options, gains, forcing)
