"""Variable-coefficient Poisson solver on a mapped layer.

The discrete operator is collocation of ``div(grad u)`` at interior nodes,
with the interface and wall rows replaced by boundary conditions:

* ``"dirichlet"``: ``u = data``;
* ``"neumann"`` on the interface: ``N . grad u = data`` with ``N = (-df, 1)``;
* ``"neumann"`` on the wall: ``d_3 u = data``.

Systems are solved by right-preconditioned restarted GMRES. The
preconditioner is an exact solve of the operator with horizontally averaged
vertical coefficients, diagonal in horizontal Fourier modes, so it is exact
on flat layers. Pure Neumann problems are bordered with a mean constraint on
the wall and a constant Lagrange multiplier in the interior equation.

Solutions carry no horizontal Nyquist content: the Nyquist modes are
projected out of data and residuals, since odd spectral derivatives vanish
there and the operator would be singular on them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import spectral
from .errors import EllipticDivergence, IncompatibleData
from .geometry import CoordinateMap, Side, Strip

__all__ = [
    "EllipticProblem",
    "EllipticSolution",
    "solve",
    "gmres",
    "harmonic_extension",
    "harmonic_extension_hat",
    "dn_operator",
    "dn_hat",
    "dn_bar",
    "solve_pressure_pair",
    "quadratic_source",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 500
_KINDS = ("dirichlet", "neumann")


@dataclass
class EllipticProblem:
    """Poisson problem ``Delta u = rhs`` on ``strip`` with one condition per face.

    ``rhs`` lives on the full node grid; its boundary rows only enter the
    solvability check of pure Neumann problems.
    """

    strip: Strip
    rhs: np.ndarray
    iface_kind: str
    iface_data: np.ndarray
    wall_kind: str
    wall_data: np.ndarray

    def __post_init__(self):
        for kind in (self.iface_kind, self.wall_kind):
            if kind not in _KINDS:
                raise ValueError(f"unknown boundary condition {kind!r}")
        s = self.strip
        self.rhs = s.check(self.rhs)
        self.iface_data = spectral.check_interface_field(np.broadcast_to(self.iface_data, (s.n, s.n)), s.n)
        self.wall_data = spectral.check_interface_field(np.broadcast_to(self.wall_data, (s.n, s.n)), s.n)

    @property
    def pure_neumann(self) -> bool:
        return self.iface_kind == "neumann" and self.wall_kind == "neumann"

    def compatibility_defect(self) -> tuple[float, float]:
        """Return ``(defect, scale)`` for the Neumann solvability condition.

        The divergence theorem gives ``int rhs = flux out``. With ``N`` upward,
        the interface flux is ``+data`` for the plasma and ``-data`` for the
        vacuum, and the wall flux has the opposite sign.
        """
        s = self.strip
        vol = s.integrate(self.rhs)
        sign = s.side.outward
        fi = s.surface_integral(self.iface_data)
        fw = s.surface_integral(self.wall_data)
        flux = sign * (fi - fw)
        scale = s.integrate(np.abs(self.rhs)) + s.surface_integral(np.abs(self.iface_data)) + s.surface_integral(
            np.abs(self.wall_data)
        )
        return vol - flux, scale


@dataclass
class EllipticSolution:
    field: np.ndarray
    residual_norm: float
    iterations: int
    multiplier: float = 0.0


class _ModeSolver:
    """Exact inverse of the horizontally averaged operator, mode by mode.

    For a horizontal mode with ``kappa = |k|^2`` the 1-D operator is
    ``Gbar(r) D^2 + Hbar(r) D - kappa`` with averaged boundary rows.
    Boundary unknowns are eliminated, the reduced interior matrix is
    diagonalised once, and every mode is then a diagonal solve.
    """

    def __init__(self, strip: Strip, iface_kind: str, wall_kind: str, bordered: bool):
        self.strip = strip
        self.bordered = bordered
        m = strip.m
        cheb = strip.cheb
        n = strip.n
        gbar = np.mean(strip.g_rr, axis=(0, 1))
        hbar = np.mean(strip.h_r, axis=(0, 1))
        a0 = gbar[:, None] * cheb.D2 + hbar[:, None] * cheb.D
        bidx = np.array([strip.iface, strip.wall])
        iidx = np.arange(1, m)
        rows = np.zeros((2, m + 1))
        if iface_kind == "dirichlet":
            rows[0, strip.iface] = 1.0
        else:
            coef = np.mean(strip.trace(strip.b) * (1.0 + strip.f1**2 + strip.f2**2))
            rows[0] = coef * cheb.D[strip.iface]
        if wall_kind == "dirichlet":
            rows[1, strip.wall] = 1.0
        else:
            rows[1] = np.mean(strip.wall_trace(strip.b)) * cheb.D[strip.wall]
        b_bb = rows[:, bidx]
        b_bi = rows[:, iidx]
        bb_inv = np.linalg.inv(b_bb)
        a_ib = a0[np.ix_(iidx, bidx)]
        a_ii = a0[np.ix_(iidx, iidx)]
        self.k_mat = a_ib @ bb_inv  # (m-1, 2)
        reduced = a_ii - self.k_mat @ b_bi
        lam, vec = np.linalg.eig(reduced)
        if np.max(np.abs(lam.imag)) <= 1e-12 * np.max(np.abs(lam)):
            lam, vec = lam.real, vec.real
        self.lam = lam
        self.vec = vec
        self.vec_inv = np.linalg.inv(vec)
        self.b_bi = b_bi
        self.bb_inv = bb_inv
        self.bidx = bidx
        self.iidx = iidx
        wk = spectral.wavenumbers(n)
        denom = lam[None, None, :] - wk.ksq[..., None]
        if bordered:
            denom[0, 0, :] = 1.0
        self.inv_denom = 1.0 / denom
        self.keep = wk.odd_mask
        if bordered:
            full = np.zeros((m + 2, m + 2))
            full[iidx, : m + 1] = a0[iidx]
            full[iidx, m + 1] = 1.0
            full[strip.iface, : m + 1] = rows[0]
            full[strip.wall, : m + 1] = rows[1]
            full[m + 1, strip.wall] = 1.0
            self.mean_lu = sla.lu_factor(full)

    def apply(self, res: np.ndarray, res_lam: float = 0.0) -> tuple[np.ndarray, float]:
        n = self.strip.n
        rhat = spectral.to_modes(res)
        rb = rhat[..., self.bidx]
        ri = rhat[..., self.iidx] - rb @ self.k_mat.T
        y = (ri @ self.vec_inv.T) * self.inv_denom
        ui = y @ self.vec.T
        ub = (rb - ui @ self.b_bi.T) @ self.bb_inv.T
        uhat = np.empty_like(rhat)
        uhat[..., self.iidx] = ui
        uhat[..., self.bidx] = ub
        uhat *= self.keep[..., None]
        lam = 0.0
        if self.bordered:
            col = np.concatenate([rhat[0, 0].real / (n * n), [res_lam]])
            sol = sla.lu_solve(self.mean_lu, col)
            uhat[0, 0] = sol[:-1] * (n * n)
            lam = float(sol[-1])
        return spectral.from_modes(uhat, n), lam


class _Operator:
    """Matrix-free collocation operator with row scaling for an L^2-type norm."""

    def __init__(self, strip: Strip, iface_kind: str, wall_kind: str):
        self.strip = strip
        self.iface_kind = iface_kind
        self.wall_kind = wall_kind
        self.bordered = iface_kind == "neumann" and wall_kind == "neumann"
        self.shape = strip.shape
        self.size = int(np.prod(self.shape))
        self.total = self.size + (1 if self.bordered else 0)
        w = np.broadcast_to(strip.cell * strip.cheb.weights, self.shape).copy()
        w[..., strip.iface] = strip.cell
        w[..., strip.wall] = strip.cell
        scale = np.sqrt(w).ravel()
        if self.bordered:
            scale = np.concatenate([scale, [1.0]])
        self.scale = scale
        self.interior = np.ones(self.shape)
        self.interior[..., [strip.iface, strip.wall]] = 0.0

    def pack(self, u: np.ndarray, lam: float = 0.0) -> np.ndarray:
        flat = u.ravel()
        return np.concatenate([flat, [lam]]) if self.bordered else flat.copy()

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        u = x[: self.size].reshape(self.shape)
        lam = float(x[self.size]) if self.bordered else 0.0
        return u, lam

    def apply(self, x: np.ndarray) -> np.ndarray:
        s = self.strip
        n = s.n
        wk = spectral.wavenumbers(n)
        m1 = (1j * wk.k1 * wk.odd_mask)[..., None]
        m2 = (1j * wk.k2 * wk.odd_mask)[..., None]
        u, lam = self.unpack(x)
        ur = s.dr(u)
        uhat = spectral.to_modes(u)
        p1 = spectral.from_modes(m1 * uhat, n) + s.a1 * ur
        p2 = spectral.from_modes(m2 * uhat, n) + s.a2 * ur
        p3 = s.b * ur
        vert = s.a1 * s.dr(p1) + s.a2 * s.dr(p2) + s.b * s.dr(p3)
        k, w = s.iface, s.wall
        if self.iface_kind == "dirichlet":
            vert[..., k] = u[..., k]
        else:
            vert[..., k] = p3[..., k] - s.f1 * p1[..., k] - s.f2 * p2[..., k]
        vert[..., w] = u[..., w] if self.wall_kind == "dirichlet" else p3[..., w]
        if self.bordered:
            vert += lam * self.interior
        # horizontal divergence terms only on interior rows
        horiz = m1 * spectral.to_modes(p1) + m2 * spectral.to_modes(p2)
        horiz[..., [k, w]] = 0.0
        out_hat = (spectral.to_modes(vert) + horiz) * wk.odd_mask[..., None]
        out = spectral.from_modes(out_hat, n)
        if self.bordered:
            return np.concatenate([out.ravel(), [np.mean(u[..., w])]])
        return out.ravel()

    def rhs(self, prob: EllipticProblem) -> np.ndarray:
        s = self.strip
        b = prob.rhs.copy()
        b[..., s.iface] = prob.iface_data
        b[..., s.wall] = prob.wall_data
        b = spectral.remove_nyquist(b)
        return self.pack(b, 0.0)


def gmres(matvec, psolve, b, x0=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, restart=40):
    """Right-preconditioned restarted GMRES.

    Solves ``A x = b`` by running GMRES on ``A P^{-1} y = b`` and returning
    ``x = P^{-1} y``, so the monitored residual is the true residual of the
    original system.

    Returns
    -------
    x, relative_residual, iterations
    """
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0.0, 0
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - matvec(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    its = 0
    while True:
        rel = beta / bnorm
        if rel <= tol:
            return x, rel, its
        if its >= max_iter:
            raise EllipticDivergence(f"GMRES stalled at relative residual {rel:.3e} after {its} iterations")
        q = np.zeros((restart + 1, b.size))
        h = np.zeros((restart + 1, restart))
        cs = np.zeros(restart)
        sn = np.zeros(restart)
        g = np.zeros(restart + 1)
        g[0] = beta
        q[0] = r / beta
        k = 0
        for j in range(restart):
            w = matvec(psolve(q[j]))
            its += 1
            # classical Gram-Schmidt, applied twice
            for _ in range(2):
                coef = q[: j + 1] @ w
                w = w - coef @ q[: j + 1]
                h[: j + 1, j] += coef
            h[j + 1, j] = np.linalg.norm(w)
            breakdown = h[j + 1, j] == 0.0
            if not breakdown:
                q[j + 1] = w / h[j + 1, j]
            for i in range(j):
                t = cs[i] * h[i, j] + sn[i] * h[i + 1, j]
                h[i + 1, j] = -sn[i] * h[i, j] + cs[i] * h[i + 1, j]
                h[i, j] = t
            denom = np.hypot(h[j, j], h[j + 1, j])
            cs[j], sn[j] = h[j, j] / denom, h[j + 1, j] / denom
            h[j, j] = denom
            h[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            k = j + 1
            if abs(g[j + 1]) <= 0.5 * tol * bnorm or its >= max_iter or breakdown:
                break
        y = sla.solve_triangular(h[:k, :k], g[:k])
        x = x + psolve(y @ q[:k])
        r = b - matvec(x)
        new_beta = np.linalg.norm(r)
        if new_beta > 0.999 * beta and new_beta / bnorm > tol:
            raise EllipticDivergence(f"GMRES stagnated at relative residual {new_beta / bnorm:.3e}")
        beta = new_beta


_SOLVER_CACHE_ATTR = "_mode_solvers"


def _mode_solver(strip: Strip, iface_kind: str, wall_kind: str) -> _ModeSolver:
    cache = strip.__dict__.setdefault(_SOLVER_CACHE_ATTR, {})
    key = (iface_kind, wall_kind)
    if key not in cache:
        cache[key] = _ModeSolver(strip, iface_kind, wall_kind, iface_kind == wall_kind == "neumann")
    return cache[key]


def solve(
    prob: EllipticProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    x0: np.ndarray | None = None,
    compat_tol: float = 1e-6,
) -> EllipticSolution:
    """Solve an elliptic problem to relative residual ``tol``.

    The residual is measured in a discrete L^2 norm: interior rows weighted by
    the Clenshaw-Curtis volume quadrature, boundary rows by the surface cell.

    Raises
    ------
    IncompatibleData
        Pure Neumann data whose solvability defect exceeds ``compat_tol``
        relative to the data scale.
    EllipticDivergence
        GMRES failed to reach ``tol`` within ``max_iter`` iterations.
    """
    strip = prob.strip
    op = _Operator(strip, prob.iface_kind, prob.wall_kind)
    if op.bordered:
        defect, scale = prob.compatibility_defect()
        if abs(defect) > compat_tol * max(scale, 1.0):
            raise IncompatibleData(f"Neumann solvability defect {defect:.3e} (scale {scale:.3e})")
    b = op.rhs(prob)
    if not np.any(b):
        return EllipticSolution(np.zeros(strip.shape), 0.0, 0, 0.0)
    pre = _mode_solver(strip, prob.iface_kind, prob.wall_kind)
    scale = op.scale

    def matvec(x):
        return op.apply(x) * scale

    def psolve(y):
        y = y / scale
        u, lam = op.unpack(y)
        v, mu = pre.apply(u, lam)
        return op.pack(v, mu)

    guess = None
    if x0 is not None:
        guess = op.pack(spectral.remove_nyquist(strip.check(x0)), 0.0)
    x, rel, its = gmres(matvec, psolve, b * scale, guess, tol=tol, max_iter=max_iter)
    u, lam = op.unpack(x)
    return EllipticSolution(u.copy(), float(rel), its, lam)


# ---------------------------------------------------------------------------
# derived operators


def _geom(obj) -> Strip:
    return obj.geom if isinstance(obj, CoordinateMap) else obj


def harmonic_extension(psi, cmap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Harmonic ``u`` with ``u = psi`` on the interface and ``d_3 u = 0`` on the wall."""
    s = _geom(cmap)
    prob = EllipticProblem(s, np.zeros(s.shape), "dirichlet", psi, "neumann", np.zeros((s.n, s.n)))
    return solve(prob, tol=tol).field


def harmonic_extension_hat(g: np.ndarray, cmap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Harmonic ``u`` matching a bulk field ``g`` on the interface and ``d_3 g`` on the wall."""
    s = _geom(cmap)
    g = s.check(g)
    prob = EllipticProblem(s, np.zeros(s.shape), "dirichlet", s.trace(g), "neumann", s.wall_derivative(g))
    return solve(prob, tol=tol).field


def _dn_sign(s: Strip) -> float:
    # both Dirichlet-to-Neumann maps are made non-negative
    return 1.0 if s.side is Side.PLASMA else -1.0


def dn_operator(psi, cmap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Dirichlet-to-Neumann map: ``+N.grad H psi`` below, ``-N.grad H psi`` above."""
    s = _geom(cmap)
    return _dn_sign(s) * s.conormal(harmonic_extension(psi, s, tol))


def dn_hat(g: np.ndarray, cmap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Normal derivative of the extension that keeps ``d_3 g`` on the wall."""
    s = _geom(cmap)
    return _dn_sign(s) * s.conormal(harmonic_extension_hat(g, s, tol))


def dn_bar(g: np.ndarray, cmap_plus, cmap_minus, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``dn_hat`` above minus ``dn_operator`` below, applied to a vacuum field ``g``."""
    sp = _geom(cmap_plus)
    return dn_hat(g, sp, tol) - dn_operator(sp.trace(g), cmap_minus, tol)


def quadratic_source(strip: Strip, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """``-sum_ij d_i v1_j d_j v2_i``."""
    j1 = strip.jacobian_matrix(v1)  # j1[a, b] = d_b v1_a
    j2 = j1 if v2 is v1 else strip.jacobian_matrix(v2)
    return -np.einsum("ji...,ij...->...", j1, j2)


def solve_pressure_pair(v1: np.ndarray, v2: np.ndarray, cmap, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Pressure ``p`` with ``Delta p = -tr(grad v1 grad v2)``, ``p = 0`` on the interface, ``d_3 p = 0`` on the wall."""
    s = _geom(cmap)
    rhs = quadratic_source(s, v1, v2)
    zero = np.zeros((s.n, s.n))
    return solve(EllipticProblem(s, rhs, "dirichlet", zero, "neumann", zero), tol=tol).field
