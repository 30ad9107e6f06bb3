"""Div-curl systems on the plasma and vacuum layers.

Plasma-type problem: find ``v`` with ``div v = g``, ``curl v = omega``,
``v . N = theta`` on the interface, ``v_3 = 0`` on the wall and prescribed
wall means ``int_wall v_i = alpha_i``. The solution is assembled as

    v = w + c + grad phi,

where ``w`` is an explicit curl lift with ``w_3 = 0`` built by vertical
integration from the wall, ``c = alpha / (2 pi)^2`` is constant, and ``phi``
solves one pure Neumann problem.

Vacuum problem: the wall condition is the tangential trace ``h x e3 = J``
instead of ``h_3 = 0``. It is reduced to a plasma-type problem plus a scalar
potential that carries the wall data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .elliptic import DEFAULT_TOL, EllipticProblem, solve
from .errors import CompatibilityError, GridMismatch
from .geometry import Side, Strip

__all__ = [
    "PlasmaDivCurlData",
    "VacuumDivCurlData",
    "curl_lift",
    "validate_plasma_data",
    "validate_vacuum_data",
    "solve_plasma",
    "solve_vacuum",
    "div_free_project",
    "wall_means",
    "smooth_cutoff",
]

TWO_PI_SQ = (2.0 * np.pi) ** 2


@dataclass
class PlasmaDivCurlData:
    g: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    alpha: np.ndarray


@dataclass
class VacuumDivCurlData:
    g: np.ndarray
    omega: np.ndarray
    theta: np.ndarray
    current: np.ndarray  # shape (2, N, N), tangential trace on the wall


def _check(strip: Strip, g, omega, theta):
    g = strip.check(g)
    omega = strip.check(omega, vector=True)
    theta = spectral.check_interface_field(theta, strip.n)
    return g, omega, theta


def _integrate_from_wall(strip: Strip, u: np.ndarray) -> np.ndarray:
    """``int_{wall}^{x3} u dx3`` along each column."""
    integrand = u * strip.z_r
    if strip.side is Side.PLASMA:
        return strip.cheb.integrate_from_bottom(integrand)
    return strip.cheb.integrate_from_top(integrand)


def curl_lift(omega: np.ndarray, strip: Strip) -> np.ndarray:
    """Vector ``w`` with ``w_3 = 0`` and ``curl w = omega`` for divergence-free ``omega``.

    ``w_1 = -d_2 psi + int omega_2``, ``w_2 = d_1 psi - int omega_1``, with the
    integrals taken from the wall and ``Delta' psi = omega_3`` on the wall.
    """
    omega = strip.check(omega, vector=True)
    psi = spectral.inverse_laplacian(strip.wall_trace(omega[2]))
    p1, p2 = spectral.gradient(psi)
    w = np.zeros_like(omega)
    w[0] = -p2[..., None] + _integrate_from_wall(strip, omega[1])
    w[1] = p1[..., None] - _integrate_from_wall(strip, omega[0])
    return w


def wall_means(v: np.ndarray, strip: Strip) -> np.ndarray:
    """``(int_wall v_1, int_wall v_2)``."""
    return np.array([strip.surface_integral(strip.wall_trace(v[i])) for i in (0, 1)])


def _div_defect(strip: Strip, omega: np.ndarray) -> float:
    d = strip.div(omega)[..., 1:-1]
    return float(np.max(np.abs(d))) if d.size else 0.0


def validate_plasma_data(data: PlasmaDivCurlData, strip: Strip, tol: float = 1e-6) -> None:
    """Check the solvability conditions of a plasma-type problem.

    Requires ``div omega = 0``, zero wall flux of ``omega_3`` and
    ``int g = +-int theta`` (sign from the outward normal of the layer).

    Raises
    ------
    CompatibilityError
    """
    g, omega, theta = _check(strip, data.g, data.omega, data.theta)
    scale = 1.0 + float(np.max(np.abs(omega)))
    if _div_defect(strip, omega) > tol * scale * max(strip.n, strip.m):
        raise CompatibilityError("vorticity datum is not divergence free")
    flux = strip.surface_integral(strip.wall_trace(omega[2]))
    if abs(flux) > tol * scale * TWO_PI_SQ:
        raise CompatibilityError(f"wall flux of omega_3 is {flux:.3e}, expected 0")
    vol = strip.integrate(g)
    surf = strip.side.outward * strip.surface_integral(theta)
    if abs(vol - surf) > tol * (1.0 + strip.integrate(np.abs(g)) + strip.surface_integral(np.abs(theta))):
        raise CompatibilityError(f"int g = {vol:.6e} does not match boundary flux {surf:.6e}")


def solve_plasma(data: PlasmaDivCurlData, strip: Strip, tol: float = DEFAULT_TOL, validate: bool = True) -> np.ndarray:
    """Solve a plasma-type div-curl problem on ``strip``.

    Works on either layer; on the vacuum layer it gives the field with
    ``h_3 = 0`` on the wall and the requested wall means.
    """
    g, omega, theta = _check(strip, data.g, data.omega, data.theta)
    alpha = np.asarray(data.alpha, dtype=float)
    if alpha.shape != (2,):
        raise GridMismatch("alpha must have two components")
    if validate:
        validate_plasma_data(data, strip)
    c = np.array([alpha[0], alpha[1], 0.0]) / TWO_PI_SQ
    w = curl_lift(omega, strip)
    w_plus_c = w + c[:, None, None, None]
    rhs = g - strip.div(w)
    iface = theta - strip.normal_component(w_plus_c)
    zero = np.zeros((strip.n, strip.n))
    sol = solve(EllipticProblem(strip, rhs, "neumann", iface, "neumann", zero), tol=tol)
    return w_plus_c + strip.grad(sol.field)


def smooth_cutoff(x3: np.ndarray, lower: float, upper: float) -> np.ndarray:
    """C^2 step: 0 below ``lower``, 1 at ``upper`` and above."""
    t = np.clip((x3 - lower) / (upper - lower), 0.0, 1.0)
    return t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def validate_vacuum_data(data: VacuumDivCurlData, strip: Strip, tol: float = 1e-6) -> None:
    """Check ``div omega = 0`` and ``omega_3 = div' J`` on the wall.

    Raises
    ------
    CompatibilityError
    """
    g, omega, theta = _check(strip, data.g, data.omega, data.theta)
    cur = np.asarray(data.current, dtype=float)
    if cur.shape != (2, strip.n, strip.n):
        raise GridMismatch(f"current must have shape (2, {strip.n}, {strip.n})")
    scale = 1.0 + float(np.max(np.abs(omega))) + float(np.max(np.abs(cur)))
    if _div_defect(strip, omega) > tol * scale * max(strip.n, strip.m):
        raise CompatibilityError("vorticity datum is not divergence free")
    divj = spectral.derivative(cur[0], 0) + spectral.derivative(cur[1], 1)
    if np.max(np.abs(strip.wall_trace(omega[2]) - divj)) > tol * scale * strip.n:
        raise CompatibilityError("wall normal vorticity does not match the surface divergence of the current")


def solve_vacuum(data: VacuumDivCurlData, strip: Strip, tol: float = DEFAULT_TOL, validate: bool = True) -> np.ndarray:
    """Solve the vacuum div-curl problem with tangential wall data ``J``.

    Steps: a plasma-type field ``h~`` whose wall means make the wall defect
    ``J - h~ x e3`` a tangential gradient ``grad' j``; a cutoff extension of
    ``j`` supported near the wall; a mixed Neumann/Dirichlet correction.
    """
    if strip.side is not Side.VACUUM:
        raise ValueError("vacuum problem needs a vacuum layer")
    g, omega, theta = _check(strip, data.g, data.omega, data.theta)
    cur = np.asarray(data.current, dtype=float)
    if validate:
        validate_vacuum_data(data, strip)
    j1_int = strip.surface_integral(cur[0])
    j2_int = strip.surface_integral(cur[1])
    zero = np.zeros((strip.n, strip.n))
    h_tilde = solve_plasma(
        PlasmaDivCurlData(np.zeros(strip.shape), omega, zero, np.array([-j2_int, j1_int])),
        strip,
        tol=tol,
        validate=False,
    )
    # grad' j = (-(J_2 + h~_1), J_1 - h~_2) on the wall
    b1 = -(cur[1] + strip.wall_trace(h_tilde[0]))
    b2 = cur[0] - strip.wall_trace(h_tilde[1])
    j_hat = spectral.inverse_laplacian(spectral.derivative(b1, 0) + spectral.derivative(b2, 1))
    lower = 0.5 * (1.0 + float(np.max(strip.f)))
    chi = smooth_cutoff(strip.z, lower, 1.0)
    j_ext = spectral.remove_nyquist(chi * j_hat[..., None])
    rhs = strip.laplacian(j_ext) - g
    iface = strip.conormal(j_ext) - theta
    sol = solve(EllipticProblem(strip, rhs, "neumann", iface, "dirichlet", zero), tol=tol)
    return h_tilde + strip.grad(j_ext - sol.field)


def div_free_project(w: np.ndarray, strip: Strip, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``w - grad phi`` with ``Delta phi = div w``, ``phi = 0`` on the interface, ``d_3 phi = 0`` on the wall."""
    w = strip.check(w, vector=True)
    zero = np.zeros((strip.n, strip.n))
    sol = solve(EllipticProblem(strip, strip.div(w), "dirichlet", zero, "neumann", zero), tol=tol)
    return w - strip.grad(sol.field)
