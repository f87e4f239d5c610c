"""Planar MHD with temperature-dependent conductivity: solver and vanishing shear viscosity experiments."""

from .constitutive import ConductivityLaw
from .core import BoundaryData, InitialData, Mesh, PhysParams, State, make_state, validate_state, weight_omega
from .experiments import SweepPlan, bl_profile, rate_fit, run_sweep
from .mms import mms_verify
from .solver import RunRecord, SolverControls, SolverFailure, solve, step

__all__ = [
    "BoundaryData", "ConductivityLaw", "InitialData", "Mesh", "PhysParams", "RunRecord",
    "SolverControls", "SolverFailure", "State", "SweepPlan", "bl_profile", "make_state",
    "mms_verify", "rate_fit", "run_sweep", "solve", "step", "validate_state", "weight_omega",
]

__version__ = "0.1.0"
