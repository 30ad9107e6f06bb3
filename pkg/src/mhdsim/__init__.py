"""Spectral simulator for the incompressible plasma-vacuum interface problem in a periodic slab."""

from . import errors
from .errors import MHDSimError
from .scenarios import ScenarioConfig, build_scenario
from .state import Model, ModelConfig, PlasmaVacuumState, SurfaceCurrent, recover

__all__ = [
    "errors",
    "MHDSimError",
    "Model",
    "ModelConfig",
    "PlasmaVacuumState",
    "SurfaceCurrent",
    "ScenarioConfig",
    "build_scenario",
    "recover",
]

__version__ = "0.1.0"
