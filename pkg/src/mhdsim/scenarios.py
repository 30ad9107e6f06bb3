"""Named initial-data presets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .divcurl import PlasmaDivCurlData, solve_plasma
from .state import Model, ModelConfig, PlasmaVacuumState, SurfaceCurrent, init_state

__all__ = ["ScenarioConfig", "Scenario", "SCENARIOS", "build_scenario"]

SCENARIOS = ("equilibrium", "perturbed", "sheared", "collinear")


@dataclass(frozen=True)
class ScenarioConfig:
    """Preset name and its parameters.

    ``eps`` and ``k`` set the interface perturbation ``eps cos(k . x')``;
    ``shear`` scales the depth-dependent profiles of the sheared preset;
    ``current`` overrides the preset wall current.
    """

    name: str = "equilibrium"
    eps: float = 1e-4
    k: tuple[int, int] = (1, 0)
    shear: float = 0.2
    current: SurfaceCurrent | None = None

    def __post_init__(self):
        if self.name not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.name!r}; choose from {SCENARIOS}")


@dataclass
class Scenario:
    model: Model
    state: PlasmaVacuumState
    u0: np.ndarray = field(repr=False)
    h0: np.ndarray = field(repr=False)


def _tangent_field(model: Model, f0: np.ndarray) -> np.ndarray:
    """Curl-free, divergence-free field tangent to ``f0`` with wall mean ``(1, 0)``."""
    g = model.maps(f0)[0].geom
    n = model.n
    alpha = np.array([(2.0 * np.pi) ** 2, 0.0])
    data = PlasmaDivCurlData(np.zeros(g.shape), np.zeros((3,) + g.shape), np.zeros((n, n)), alpha)
    return solve_plasma(data, g, tol=model.config.tol)


def build_scenario(cfg: ScenarioConfig, model_cfg: ModelConfig) -> Scenario:
    """Build the model and the initial state of a preset.

    Raises
    ------
    StabilityError
        The preset violates the stability condition (the collinear control).
    GapViolation, CompatibilityError
    """
    n = model_cfg.n
    x1, x2 = spectral.grid_points(n)
    default_current = SurfaceCurrent((0.0, -2.0)) if cfg.name == "collinear" else SurfaceCurrent((1.0, 0.0))
    current = cfg.current or default_current
    if cfg.name == "perturbed":
        f0 = cfg.eps * np.cos(cfg.k[0] * x1 + cfg.k[1] * x2)
    else:
        f0 = np.zeros((n, n))
    model = Model(model_cfg, f0, current)
    g = model.maps(f0)[0].geom
    u0 = np.zeros((3,) + g.shape)
    if cfg.name == "perturbed":
        h0 = _tangent_field(model, f0)
    else:
        h0 = np.zeros_like(u0)
        h0[0] = 1.0
    if cfg.name == "sheared":
        z = g.z
        u0[0] = cfg.shear * np.cos(0.5 * np.pi * z)
        h0[1] = cfg.shear * np.sin(0.5 * np.pi * (z + 1.0))
    state = init_state(f0, u0, h0, model)
    return Scenario(model, state, u0, h0)
