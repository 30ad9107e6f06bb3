"""Interfaces, layer geometries and harmonic coordinate maps.

Each fluid layer is discretised on a box ``T^2 x [-1, 1]`` in ``(xi', r)``.
A layer geometry stores the physical height ``Z(xi', r)`` of every node, so
the map to physical space is ``(xi', r) -> (xi', Z)``. The horizontal part is
the identity, which keeps the metric cheap: with ``b = 1/Z_r`` and
``a_i = -Z_i / Z_r``,

    d/dx_i = d/dxi_i + a_i d/dr,    d/dx_3 = b d/dr.

All differential operators below are built from these partials, so the
discrete Laplacian is exactly ``div(grad(.))``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import spectral
from .errors import DegenerateMap, GapViolation, GridMismatch, InvalidField
from .vertical import Chebyshev, chebyshev

__all__ = [
    "Side",
    "Strip",
    "Interface",
    "CoordinateMap",
    "build_interface",
    "sigma_strip",
    "harmonic_coordinate_map",
    "identity_map",
    "transform_gradient",
    "trace_on_interface",
    "push_forward",
    "pull_back",
]


class Side(enum.Enum):
    """Which layer a geometry describes.

    The plasma sits below the interface with its wall at ``x3 = -1``; the
    vacuum sits above with its wall at ``x3 = +1``. In both cases ``Z``
    increases with ``r``.
    """

    PLASMA = "plasma"
    VACUUM = "vacuum"

    def iface_row(self, m: int) -> int:
        return 0 if self is Side.PLASMA else m

    def wall_row(self, m: int) -> int:
        return m if self is Side.PLASMA else 0

    @property
    def wall_height(self) -> float:
        return -1.0 if self is Side.PLASMA else 1.0

    @property
    def outward(self) -> float:
        """Sign of ``N`` relative to the outward normal at the interface."""
        return 1.0 if self is Side.PLASMA else -1.0


class Strip:
    """Discrete geometry of one layer, given node heights ``z``.

    Parameters
    ----------
    z : ndarray, shape (N, N, M + 1)
        Physical height of each node; must increase strictly with ``r``.
    side : Side
    """

    def __init__(self, z: np.ndarray, side: Side):
        z = np.asarray(z, dtype=float)
        if z.ndim != 3 or z.shape[0] != z.shape[1]:
            raise InvalidField(f"layer heights must have shape (N, N, M+1), got {z.shape}")
        if not np.all(np.isfinite(z)):
            raise InvalidField("layer heights contain non-finite values")
        self.z = z
        self.side = side
        self.n = z.shape[0]
        self.m = z.shape[2] - 1
        self.cheb: Chebyshev = chebyshev(self.m)
        self.iface = side.iface_row(self.m)
        self.wall = side.wall_row(self.m)
        # derivatives of heights are taken in the direction of increasing r
        self.z_r = self.cheb.diff(z)
        if np.min(self.z_r) <= 0.0:
            raise DegenerateMap("layer heights are not monotone in r")
        z1, z2 = spectral.gradient(z)
        self.b = 1.0 / self.z_r
        self.a1 = -z1 * self.b
        self.a2 = -z2 * self.b
        self.f = z[..., self.iface]
        self.f1 = z1[..., self.iface]
        self.f2 = z2[..., self.iface]
        self.cell = (2.0 * np.pi / self.n) ** 2

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.z.shape

    def check(self, u: np.ndarray, vector: bool = False) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        want = ((3,) if vector else ()) + self.shape
        if u.shape != want:
            raise GridMismatch(f"expected shape {want}, got {u.shape}")
        return u

    # basic partials -----------------------------------------------------
    def dr(self, u: np.ndarray) -> np.ndarray:
        return self.cheb.diff(u)

    def partials(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical derivatives ``(d1 u, d2 u, d3 u)`` of a scalar field."""
        ur = self.dr(u)
        u1, u2 = spectral.gradient(u)
        return u1 + self.a1 * ur, u2 + self.a2 * ur, self.b * ur

    def grad(self, u: np.ndarray) -> np.ndarray:
        return np.stack(self.partials(u))

    def div(self, v: np.ndarray) -> np.ndarray:
        d1 = spectral.derivative(v[0], 0)
        d2 = spectral.derivative(v[1], 1)
        vert = self.a1 * self.dr(v[0]) + self.a2 * self.dr(v[1]) + self.b * self.dr(v[2])
        return d1 + d2 + vert

    def curl(self, v: np.ndarray) -> np.ndarray:
        p = [self.partials(v[i]) for i in range(3)]  # p[i][j] = d_j v_i
        return np.stack([p[2][1] - p[1][2], p[0][2] - p[2][0], p[1][0] - p[0][1]])

    def jacobian_matrix(self, v: np.ndarray) -> np.ndarray:
        """``J[i, j] = d_j v_i`` with shape ``(3, 3, N, N, M + 1)``."""
        return np.stack([np.stack(self.partials(v[i])) for i in range(3)])

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return self.div(self.grad(u))

    def advect(self, v: np.ndarray, u: np.ndarray) -> np.ndarray:
        """``(v . grad) u`` for a vector field ``u``."""
        out = np.empty_like(u)
        for i in range(3):
            p = self.partials(u[i])
            out[i] = v[0] * p[0] + v[1] * p[1] + v[2] * p[2]
        return out

    # boundary quantities ------------------------------------------------
    def trace(self, u: np.ndarray) -> np.ndarray:
        return u[..., self.iface]

    def wall_trace(self, u: np.ndarray) -> np.ndarray:
        return u[..., self.wall]

    @cached_property
    def normal(self) -> np.ndarray:
        """Upward non-unit normal ``(-f_1, -f_2, 1)`` on the interface."""
        return np.stack([-self.f1, -self.f2, np.ones_like(self.f1)])

    def normal_component(self, v: np.ndarray) -> np.ndarray:
        """``v . N`` on the interface for a bulk vector ``v``."""
        return np.einsum("i...,i...->...", v[..., self.iface], self.normal)

    def conormal(self, u: np.ndarray) -> np.ndarray:
        """``N . grad u`` on the interface."""
        p1, p2, p3 = self.partials(u)
        k = self.iface
        return p3[..., k] - self.f1 * p1[..., k] - self.f2 * p2[..., k]

    def wall_derivative(self, u: np.ndarray) -> np.ndarray:
        """``d_3 u`` on the flat wall."""
        row = self.cheb.D[self.wall]
        return self.b[..., self.wall] * (u @ row)

    # quadrature -----------------------------------------------------------
    @cached_property
    def volume_weights(self) -> np.ndarray:
        return self.cell * self.z_r * self.cheb.weights

    def integrate(self, u: np.ndarray) -> float:
        return float(np.sum(self.volume_weights * u))

    def surface_integral(self, g: np.ndarray) -> float:
        """``int_{T^2} g dx'`` for an interface or wall field."""
        return float(np.sum(g) * self.cell)

    def l2_norm(self, u: np.ndarray) -> float:
        u = np.asarray(u)
        sq = u * u if u.ndim == 3 else np.sum(u * u, axis=0)
        return float(np.sqrt(np.sum(self.volume_weights * sq)))

    # coefficients of the non-divergence form, for preconditioning --------
    @cached_property
    def g_rr(self) -> np.ndarray:
        return self.a1**2 + self.a2**2 + self.b**2

    @cached_property
    def h_r(self) -> np.ndarray:
        """``Delta r``: coefficient of ``u_r`` in the Laplacian."""
        return self.div(np.stack([self.a1, self.a2, self.b]))


@dataclass(frozen=True)
class Interface:
    """Interface graph ``x3 = f(x')`` with its upward normal ``(-df, 1)``."""

    f: np.ndarray
    c0: float
    normal: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.f.shape[0]


def build_interface(f, c0: float) -> Interface:
    """Validate the height function and check the wall gap.

    Raises
    ------
    GapViolation
        If ``max |f| > 1 - c0``.
    """
    f = spectral.check_interface_field(f)
    if not 0.0 < c0 < 1.0:
        raise ValueError("gap constant must lie in (0, 1)")
    if np.max(np.abs(f)) > 1.0 - c0:
        raise GapViolation(f"max|f| = {np.max(np.abs(f)):.6g} exceeds 1 - c0 = {1.0 - c0:.6g}")
    f1, f2 = spectral.gradient(f)
    return Interface(f, float(c0), np.stack([-f1, -f2, np.ones_like(f)]))


def _blend(side: Side, m: int) -> np.ndarray:
    """Weight equal to 1 at the interface row and 0 at the wall row."""
    r = chebyshev(m).r
    return (r + 1.0) / 2.0 if side is Side.PLASMA else (1.0 - r) / 2.0


def sigma_strip(f: np.ndarray, side: Side, m: int) -> Strip:
    """Layer geometry with heights interpolated linearly in ``r``."""
    f = spectral.check_interface_field(f)
    ell = _blend(side, m)
    z = side.wall_height + (f[..., None] - side.wall_height) * ell
    return Strip(z, side)


@dataclass(frozen=True, eq=False)
class CoordinateMap:
    """Map from the reference layer onto the layer bounded by ``f``.

    ``ref`` is the reference geometry (heights ``S``), ``geom`` the physical
    geometry (heights ``Z``), both on the same box grid. Since the horizontal
    components are the identity, the Jacobian determinant is ``Z_r / S_r``.
    """

    side: Side
    ref: Strip
    geom: Strip
    jac_det: np.ndarray = field(repr=False)
    iterations: int = 0

    @property
    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.geom.n
        x1, x2 = spectral.grid_points(n)
        shape = self.geom.shape
        return (
            np.broadcast_to(x1[..., None], shape),
            np.broadcast_to(x2[..., None], shape),
            self.geom.z,
        )

    @property
    def inv_metric(self) -> dict[str, np.ndarray]:
        """Entries of ``g^{ab} = grad(coordinate_a) . grad(coordinate_b)``."""
        g = self.geom
        one = np.ones(g.shape)
        return {"11": one, "22": one, "12": 0.0 * one, "1r": g.a1, "2r": g.a2, "rr": g.g_rr}


def identity_map(ref: Strip) -> CoordinateMap:
    return CoordinateMap(ref.side, ref, ref, np.ones(ref.shape))


def harmonic_coordinate_map(
    f,
    ref: Strip,
    jac_floor: float = 0.1,
    tol: float = 1e-10,
) -> CoordinateMap:
    """Harmonic map from the reference layer ``ref`` onto the layer bounded by ``f``.

    The vertical component solves the Laplace equation in the reference
    geometry with value ``f`` on the interface and the wall height on the
    wall. The linear-in-``r`` blend of the heights is the initial guess.

    Raises
    ------
    DegenerateMap
        If ``Z_r / S_r`` drops below ``jac_floor`` anywhere.
    """
    from .elliptic import EllipticProblem, solve

    f = spectral.check_interface_field(f, ref.n)
    side = ref.side
    guess = ref.z + (f - ref.f)[..., None] * _blend(side, ref.m)
    wall = np.full_like(f, side.wall_height)
    prob = EllipticProblem(ref, np.zeros(ref.shape), "dirichlet", f, "dirichlet", wall)
    sol = solve(prob, tol=tol, x0=guess)
    z = sol.field
    # pin boundary rows exactly
    z[..., ref.iface] = f
    z[..., ref.wall] = side.wall_height
    z_r = ref.cheb.diff(z)
    jac = z_r / ref.z_r
    if np.min(jac) < jac_floor:
        raise DegenerateMap(f"min Jacobian {np.min(jac):.4g} below floor {jac_floor}")
    return CoordinateMap(side, ref, Strip(z, side), jac, sol.iterations)


def transform_gradient(cmap: CoordinateMap, grad_ref: np.ndarray) -> np.ndarray:
    """Physical gradient of ``u o Phi^{-1}`` from the reference gradient of ``u``.

    With ``Phi(y', y3) = (y', Phi3)``, the chain rule gives
    ``d_{x3} = d_{y3} / Phi3_{y3}`` and ``d_{xi} = d_{yi} - Phi3_{yi} d_{x3}``.
    """
    ref, geom = cmap.ref, cmap.geom
    # reference partials of Phi3
    z1r, z2r, z3r = ref.partials(geom.z)
    g1, g2, g3 = grad_ref
    d3 = g3 / z3r
    return np.stack([g1 - z1r * d3, g2 - z2r * d3, d3])


def trace_on_interface(u: np.ndarray, strip: Strip) -> np.ndarray:
    return strip.trace(u)


def pull_back(func, cmap: CoordinateMap) -> np.ndarray:
    """Sample a physical-space callable ``func(x1, x2, x3)`` at the mapped nodes."""
    x1, x2, x3 = cmap.components
    return np.asarray(func(x1, x2, x3), dtype=float)


def push_forward(u: np.ndarray, cmap: CoordinateMap, points, tol: float = 1e-10, max_iter: int = 50) -> np.ndarray:
    """Evaluate the physical field represented by ``u`` at physical ``points``.

    ``points`` has shape ``(P, 3)``. The vertical coordinate is inverted by
    Newton iteration on the Chebyshev interpolant of each column.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    geom = cmap.geom
    cheb = geom.cheb
    zcol = spectral.evaluate_at(geom.z, pts[:, 0], pts[:, 1])  # (P, M+1)
    ucol = spectral.evaluate_at(u, pts[:, 0], pts[:, 1])
    zr_col = zcol @ cheb.D.T
    top, bot = zcol[:, 0], zcol[:, -1]
    r = -1.0 + 2.0 * (pts[:, 2] - bot) / (top - bot)
    for _ in range(max_iter):
        zr = np.einsum("pj,pj->p", zcol, _bary_rows(cheb, r))
        dz = np.einsum("pj,pj->p", zr_col, _bary_rows(cheb, r))
        step = (zr - pts[:, 2]) / dz
        r = np.clip(r - step, -1.0, 1.0)
        if np.max(np.abs(step)) < tol:
            break
    else:
        raise DegenerateMap("vertical inversion did not converge")
    return np.einsum("pj,pj->p", ucol, _bary_rows(cheb, r))


def _bary_rows(cheb: Chebyshev, r: np.ndarray) -> np.ndarray:
    return cheb.interpolate(np.eye(cheb.m + 1), r).T
