"""Evolution state and recovery of the physical fields from it.

The evolved quantities are the interface height ``f``, the normal velocity
``theta``, the vorticity and current density of the plasma, and the wall
means ``beta`` of the velocity and ``gamma`` of the magnetic field.

Bulk fields are stored as values at the nodes of the mapped plasma layer,
that is composed with the current coordinate map. Pushing a field forward
or pulling it back is therefore the identity on arrays; only the geometry
attached to the array changes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import spectral
from .divcurl import (
    PlasmaDivCurlData,
    VacuumDivCurlData,
    div_free_project,
    solve_plasma,
    solve_vacuum,
    wall_means,
)
from .elliptic import (
    DEFAULT_TOL,
    EllipticProblem,
    harmonic_extension,
    quadratic_source,
    solve,
)
from .errors import CompatibilityError, GapViolation, StabilityError
from .geometry import CoordinateMap, Side, Strip, build_interface, harmonic_coordinate_map, sigma_strip

__all__ = [
    "CurrentMode",
    "SurfaceCurrent",
    "ModelConfig",
    "Model",
    "PlasmaVacuumState",
    "RecoveredFields",
    "recover",
    "recover_velocity",
    "recover_magnetic",
    "solve_vacuum_field",
    "solve_vacuum_field_dt",
    "assemble_pressure",
    "compute_theta",
    "stability_margin",
    "init_state",
]


@dataclass(frozen=True)
class CurrentMode:
    """Divergence-free wall current ``(d_2 psi, -d_1 psi)`` with ``psi = a cos(k . x)``."""

    k1: int
    k2: int
    amplitude: float

    def values(self, n: int) -> np.ndarray:
        x1, x2 = spectral.grid_points(n)
        s = np.sin(self.k1 * x1 + self.k2 * x2)
        return np.stack([-self.amplitude * self.k2 * s, self.amplitude * self.k1 * s])


@dataclass(frozen=True)
class SurfaceCurrent:
    """Tangential wall trace ``J(t, x') = a(t) (mean + sum of modes)``.

    ``profile`` selects ``a(t)``: ``"constant"`` (1), ``"ramp"`` (1 + rate t)
    or ``"oscillating"`` (1 + rate sin t).
    """

    mean: tuple[float, float] = (1.0, 0.0)
    modes: tuple[CurrentMode, ...] = ()
    profile: str = "constant"
    rate: float = 0.0

    def __post_init__(self):
        if self.profile not in ("constant", "ramp", "oscillating"):
            raise ValueError(f"unknown current profile {self.profile!r}")

    def _amp(self, t: float) -> tuple[float, float]:
        if self.profile == "constant":
            return 1.0, 0.0
        if self.profile == "ramp":
            return 1.0 + self.rate * t, self.rate
        return 1.0 + self.rate * math.sin(t), self.rate * math.cos(t)

    def _shape(self, n: int) -> np.ndarray:
        base = np.zeros((2, n, n))
        base[0] += self.mean[0]
        base[1] += self.mean[1]
        for mode in self.modes:
            base += mode.values(n)
        return base

    def __call__(self, t: float, n: int) -> np.ndarray:
        return self._amp(t)[0] * self._shape(n)

    def dt(self, t: float, n: int) -> np.ndarray:
        return self._amp(t)[1] * self._shape(n)

    @property
    def is_steady(self) -> bool:
        return self.profile == "constant" or self.rate == 0.0


@dataclass(frozen=True)
class ModelConfig:
    """Discretisation and admissibility parameters."""

    n: int = 32
    m: int = 32
    s: int = 3
    c0: float = 0.1
    c1: float = 0.1
    tol: float = DEFAULT_TOL
    jac_floor: float = 0.1
    dealias_fraction: float = 2.0 / 3.0
    monitor_stability: bool = True


class Model:
    """Fixed context of a run: grid, reference layers, wall current.

    The reference layers are built from ``f_star`` (normally the initial
    interface), so the coordinate maps at ``t = 0`` are the identity.
    """

    def __init__(self, config: ModelConfig, f_star: np.ndarray, current: SurfaceCurrent):
        self.config = config
        self.f_star = spectral.check_interface_field(f_star, config.n)
        self.current = current
        self.ref_plasma = sigma_strip(self.f_star, Side.PLASMA, config.m)
        self.ref_vacuum = sigma_strip(self.f_star, Side.VACUUM, config.m)
        self.f_mean0 = spectral.mean(self.f_star)

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def m(self) -> int:
        return self.config.m

    def dealias(self, a: np.ndarray) -> np.ndarray:
        """2/3-rule truncation; vector bulk fields are filtered per component."""
        if a.ndim == 4:
            return np.stack([spectral.dealias(c, self.config.dealias_fraction) for c in a])
        return spectral.dealias(a, self.config.dealias_fraction)

    def maps(self, f: np.ndarray) -> tuple[CoordinateMap, CoordinateMap]:
        cfg = self.config
        build_interface(f, cfg.c0)
        mp = harmonic_coordinate_map(f, self.ref_plasma, cfg.jac_floor, cfg.tol)
        mv = harmonic_coordinate_map(f, self.ref_vacuum, cfg.jac_floor, cfg.tol)
        return mp, mv


@dataclass
class PlasmaVacuumState:
    """Evolved variables at time ``t``."""

    t: float
    f: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    j: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    FIELDS = ("f", "theta", "omega", "j", "beta", "gamma")

    def copy(self) -> "PlasmaVacuumState":
        return PlasmaVacuumState(self.t, *(np.array(getattr(self, k)) for k in self.FIELDS))

    def axpy(self, a: float, other: "StateLike", dt_time: float = 0.0) -> "PlasmaVacuumState":
        """``self + a * other`` fieldwise; time advances by ``dt_time``."""
        return PlasmaVacuumState(
            self.t + dt_time, *(getattr(self, k) + a * getattr(other, k) for k in self.FIELDS)
        )


StateLike = PlasmaVacuumState


def stability_margin(h1, h2, hh1, hh2) -> np.ndarray:
    """Pointwise smallest eigenvalue of ``h h^T + hh hh^T`` (horizontal parts).

    Computed as ``det / lambda_max``, which avoids cancellation when the two
    vectors are nearly collinear.
    """
    a = h1 * h1 + hh1 * hh1
    b = h1 * h2 + hh1 * hh2
    d = h2 * h2 + hh2 * hh2
    lam_max = 0.5 * (a + d + np.hypot(a - d, 2.0 * b))
    det = (h1 * hh2 - h2 * hh1) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_min = np.where(lam_max > 0.0, det / lam_max, 0.0)
    return lam_min


@dataclass
class RecoveredFields:
    """Physical fields recovered from a state, plus cached derived pieces."""

    state: PlasmaVacuumState
    model: Model
    plasma: CoordinateMap
    vacuum: CoordinateMap
    u: np.ndarray
    h: np.ndarray
    h_hat: np.ndarray
    cache: dict = field(default_factory=dict, repr=False)

    @property
    def gp(self) -> Strip:
        return self.plasma.geom

    @property
    def gv(self) -> Strip:
        return self.vacuum.geom

    @cached_property
    def traces(self) -> dict[str, np.ndarray]:
        gp, gv = self.gp, self.gv
        return {
            "u": np.stack([gp.trace(self.u[i]) for i in range(3)]),
            "h": np.stack([gp.trace(self.h[i]) for i in range(3)]),
            "h_hat": np.stack([gv.trace(self.h_hat[i]) for i in range(3)]),
        }

    @cached_property
    def margin(self) -> np.ndarray:
        tr = self.traces
        return stability_margin(tr["h"][0], tr["h"][1], tr["h_hat"][0], tr["h_hat"][1])

    @cached_property
    def f_dot(self) -> np.ndarray:
        return spectral.mean_project(self.state.theta)

    @cached_property
    def mesh_velocity(self) -> np.ndarray:
        """Vertical node velocity of the plasma layer, ``d Z / dt``."""
        ref = self.plasma.ref
        zero = np.zeros((ref.n, ref.n))
        prob = EllipticProblem(ref, np.zeros(ref.shape), "dirichlet", self.f_dot, "dirichlet", zero)
        out = solve(prob, tol=self.model.config.tol).field
        out[..., ref.iface] = self.f_dot
        out[..., ref.wall] = 0.0
        return out

    @cached_property
    def pressure_dynamic(self) -> np.ndarray:
        """``p_uu - p_hh``: one solve with the combined quadratic source."""
        gp = self.gp
        rhs = quadratic_source(gp, self.u, self.u) - quadratic_source(gp, self.h, self.h)
        zero = np.zeros((gp.n, gp.n))
        return solve(EllipticProblem(gp, rhs, "dirichlet", zero, "neumann", zero), tol=self.model.config.tol).field

    @cached_property
    def h_hat_sq(self) -> np.ndarray:
        return np.sum(self.h_hat**2, axis=0)

    @cached_property
    def pressure(self) -> np.ndarray:
        return assemble_pressure(self)


def compute_theta(u: np.ndarray, strip: Strip) -> np.ndarray:
    """``u . N`` on the interface."""
    return strip.normal_component(u)


def recover_velocity(omega, theta, beta, cmap: CoordinateMap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Velocity from the (projected) vorticity, normal trace and wall means."""
    g = cmap.geom
    omega_t = div_free_project(omega, g, tol)
    data = PlasmaDivCurlData(np.zeros(g.shape), omega_t, spectral.mean_project(theta), beta)
    return solve_plasma(data, g, tol, validate=False)


def recover_magnetic(j, gamma, cmap: CoordinateMap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Magnetic field with ``h . N = 0`` from current density and wall means."""
    g = cmap.geom
    j_t = div_free_project(j, g, tol)
    data = PlasmaDivCurlData(np.zeros(g.shape), j_t, np.zeros((g.n, g.n)), gamma)
    return solve_plasma(data, g, tol, validate=False)


def solve_vacuum_field(current: np.ndarray, cmap: CoordinateMap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Curl- and divergence-free vacuum field tangent to the interface with wall trace ``J``."""
    g = cmap.geom
    zero = np.zeros((g.n, g.n))
    data = VacuumDivCurlData(np.zeros(g.shape), np.zeros((3,) + g.shape), zero, current)
    return solve_vacuum(data, g, tol, validate=False)


def solve_vacuum_field_dt(f_dt, h_hat, current_dt, cmap: CoordinateMap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Time derivative of the vacuum field for a moving interface.

    Its normal trace is ``-f_t d_3 h.N + h_1 d_1 f_t + h_2 d_2 f_t``, obtained
    by differentiating ``h . N = 0`` along the motion.
    """
    g = cmap.geom
    f_dt = spectral.check_interface_field(f_dt, g.n)
    d3 = np.stack([g.partials(h_hat[i])[2][..., g.iface] for i in range(3)])
    d3n = np.einsum("i...,i...->...", d3, g.normal)
    fd1, fd2 = spectral.gradient(f_dt)
    theta = -f_dt * d3n + g.trace(h_hat[0]) * fd1 + g.trace(h_hat[1]) * fd2
    data = VacuumDivCurlData(np.zeros(g.shape), np.zeros((3,) + g.shape), theta, current_dt)
    return solve_vacuum(data, g, tol, validate=False)


def assemble_pressure(rec: RecoveredFields) -> np.ndarray:
    """Total plasma pressure ``H(|h_hat|^2 / 2) + p_uu - p_hh``.

    Its interface trace equals the magnetic pressure ``|h_hat|^2 / 2`` of
    the vacuum field.
    """
    half = 0.5 * rec.gv.trace(rec.h_hat_sq)
    return harmonic_extension(half, rec.plasma, rec.model.config.tol) + rec.pressure_dynamic


def recover(state: PlasmaVacuumState, model: Model) -> RecoveredFields:
    """Recover ``(u, h, h_hat)`` and the coordinate maps from a state.

    Raises
    ------
    GapViolation, DegenerateMap, EllipticDivergence
    """
    tol = model.config.tol
    mp, mv = model.maps(state.f)
    h_hat = solve_vacuum_field(model.current(state.t, model.n), mv, tol)
    u = recover_velocity(state.omega, state.theta, state.beta, mp, tol)
    h = recover_magnetic(state.j, state.gamma, mp, tol)
    return RecoveredFields(state, model, mp, mv, u, h, h_hat)


def init_state(f0, u0, h0, model: Model, compat_tol: float = 1e-8) -> PlasmaVacuumState:
    """Build the evolution state from initial interface, velocity and magnetic field.

    ``u0`` and ``h0`` are given at the nodes of the plasma layer bounded by
    ``f0``. Checks ``div = 0``, ``h . N = 0`` on the interface, vanishing normal
    components on the wall, the ``2 c0`` gap and the ``2 c1`` stability margin.

    Raises
    ------
    CompatibilityError, GapViolation, StabilityError
    """
    cfg = model.config
    f0 = spectral.check_interface_field(f0, cfg.n)
    if np.max(np.abs(f0)) > 1.0 - 2.0 * cfg.c0:
        raise GapViolation(f"initial max|f| = {np.max(np.abs(f0)):.4g} exceeds 1 - 2 c0")
    mp, mv = model.maps(f0)
    g = mp.geom
    u0 = g.check(u0, vector=True)
    h0 = g.check(h0, vector=True)
    scale = 1.0 + max(np.max(np.abs(u0)), np.max(np.abs(h0)))
    for name, v in (("u0", u0), ("h0", h0)):
        d = g.div(v)
        d[..., [g.iface, g.wall]] = 0.0
        if g.l2_norm(d) > compat_tol * scale * g.n:
            raise CompatibilityError(f"{name} is not divergence free")
        if np.max(np.abs(g.wall_trace(v[2]))) > compat_tol * scale:
            raise CompatibilityError(f"{name} has a normal component on the wall")
    if np.max(np.abs(g.normal_component(h0))) > compat_tol * scale:
        raise CompatibilityError("h0 is not tangent to the interface")
    state = PlasmaVacuumState(
        0.0,
        f0.copy(),
        g.normal_component(u0),
        g.curl(u0),
        g.curl(h0),
        wall_means(u0, g),
        wall_means(h0, g),
    )
    h_hat = solve_vacuum_field(model.current(0.0, cfg.n), mv, cfg.tol)
    lam = stability_margin(g.trace(h0[0]), g.trace(h0[1]), mv.geom.trace(h_hat[0]), mv.geom.trace(h_hat[1]))
    if np.min(lam) < 2.0 * cfg.c1:
        raise StabilityError(f"initial stability margin {np.min(lam):.4g} below 2 c1 = {2 * cfg.c1:.4g}")
    return state
