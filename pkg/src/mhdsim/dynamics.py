"""Right-hand sides and time stepping.

Every time derivative is taken at fixed grid nodes. Since the nodes move with
the plasma layer, bulk equations pick up the term ``X3_t d_3 q``, where
``X3_t`` is the node velocity; it equals the harmonic extension of ``f_t``
in the reference layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spectral
from .elliptic import harmonic_extension, harmonic_extension_hat
from .errors import CFLViolation, StabilityError
from .state import Model, PlasmaVacuumState, RecoveredFields, recover

__all__ = [
    "StateDerivative",
    "CoefficientFreeze",
    "TimeStepConfig",
    "g_source",
    "theta_rhs",
    "vorticity_rhs",
    "transport_rhs",
    "beta_gamma_rhs",
    "state_rhs",
    "freeze_coefficients",
    "linearized_rhs",
    "linear_rk4_step",
    "cfl_dt",
    "rk4_step",
    "postprocess",
]


@dataclass
class StateDerivative:
    f: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    j: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


@dataclass(frozen=True)
class TimeStepConfig:
    cfl: float = 0.4
    dt_max: float = 0.05
    dt: float | None = None  # fixed step; must respect the CFL bound


@dataclass
class CoefficientFreeze:
    """Interface traces and source frozen for the linearised interface equation."""

    u: np.ndarray  # (2, N, N)
    h: np.ndarray
    h_hat: np.ndarray
    g: np.ndarray

    def blend(self, weights, others) -> "CoefficientFreeze":
        """Weighted combination ``sum w_i others_i`` (for time interpolation)."""
        return CoefficientFreeze(
            *(sum(w * getattr(o, k) for w, o in zip(weights, others)) for k in ("u", "h", "h_hat", "g"))
        )


def g_source(rec: RecoveredFields) -> np.ndarray:
    """Pressure-driven source of the normal-velocity equation.

    ``-N.grad(p_uu - p_hh) - (1/2) N.grad(q - H^+ q) + (1/2) Nbar q`` with
    ``q = |h_hat|^2``, where ``Nbar q`` is the vacuum extension flux minus the
    plasma Dirichlet-to-Neumann map of the trace of ``q``.
    """
    if "g" in rec.cache:
        return rec.cache["g"]
    tol = rec.model.config.tol
    gp, gv = rec.gp, rec.gv
    q = rec.h_hat_sq
    hq = harmonic_extension_hat(q, gv, tol)
    n_hq = gv.conormal(hq)
    term_p = -gp.conormal(rec.pressure_dynamic)
    term_vac = -0.5 * (gv.conormal(q) - n_hq)
    # dn_hat above is -N.grad(H^+ q); dn below is +N.grad(H^- trace q)
    dn_plus = -n_hq
    dn_minus = gp.conormal(harmonic_extension(gv.trace(q), gp, tol))
    out = term_p + term_vac + 0.5 * (dn_plus - dn_minus)
    rec.cache["g"] = out
    return out


def _second_derivatives(f: np.ndarray):
    n = f.shape[0]
    wk = spectral.wavenumbers(n)
    fh = spectral.to_modes(f)
    f11 = spectral.from_modes(-(wk.k1**2) * fh, n)
    f22 = spectral.from_modes(-(wk.k2**2) * fh, n)
    f12 = spectral.from_modes(-(wk.k1 * wk.k2 * wk.odd_mask) * fh, n)
    return f11, f12, f22


def _interface_operator(theta, f, u, h, hh, dealias) -> np.ndarray:
    """``-2 u . grad theta - sum_ij (u_i u_j - h_i h_j - hh_i hh_j) d_i d_j f``."""
    t1, t2 = spectral.gradient(theta)
    f11, f12, f22 = _second_derivatives(f)
    u1, u2, h1, h2, k1, k2 = (dealias(a) for a in (u[0], u[1], h[0], h[1], hh[0], hh[1]))
    a11 = u1 * u1 - h1 * h1 - k1 * k1
    a12 = u1 * u2 - h1 * h2 - k1 * k2
    a22 = u2 * u2 - h2 * h2 - k2 * k2
    out = -2.0 * (u1 * dealias(t1) + u2 * dealias(t2))
    out -= a11 * dealias(f11) + 2.0 * a12 * dealias(f12) + a22 * dealias(f22)
    return dealias(out)


def _check_margin(rec: RecoveredFields) -> None:
    cfg = rec.model.config
    if cfg.monitor_stability:
        lam = float(np.min(rec.margin))
        if lam < cfg.c1:
            raise StabilityError(f"stability margin {lam:.4g} dropped below c1 = {cfg.c1:.4g} at t = {rec.state.t:.4g}")


def theta_rhs(rec: RecoveredFields) -> np.ndarray:
    """Time derivative of the normal velocity ``theta``."""
    _check_margin(rec)
    tr = rec.traces
    st = rec.state
    out = _interface_operator(st.theta, st.f, tr["u"], tr["h"], tr["h_hat"], rec.model.dealias)
    return out + rec.model.dealias(g_source(rec))


def _dealias_bulk(model: Model, v: np.ndarray) -> np.ndarray:
    return model.dealias(v)


def transport_rhs(g, u, h, xdot, om, jj, ju=None, jh=None) -> tuple[np.ndarray, np.ndarray]:
    """Grid-frame transport of ``(om, jj)`` by background fields ``u``, ``h`` on layer ``g``.

    ``om_t = -u.grad om + h.grad jj + om.grad u - jj.grad h``
    ``jj_t = -u.grad jj + h.grad om + jj.grad u - om.grad h - 2 sum_i grad u_i x grad h_i``
    plus the node-motion term ``xdot d_3 (.)``.
    """
    ju = g.jacobian_matrix(u) if ju is None else ju  # ju[i, k] = d_k u_i
    jh = g.jacobian_matrix(h) if jh is None else jh
    jom = g.jacobian_matrix(om)
    jjj = g.jacobian_matrix(jj)

    def dot(vec, jac):  # (vec . grad) field
        return np.einsum("k...,ik...->i...", vec, jac)

    d_om = -dot(u, jom) + dot(h, jjj) + dot(om, ju) - dot(jj, jh)
    cross = np.zeros_like(u)
    for i in range(3):
        cross += np.cross(ju[i], jh[i], axis=0)
    d_j = -dot(u, jjj) + dot(h, jom) + dot(jj, ju) - dot(om, jh) - 2.0 * cross
    d_om += xdot * jom[:, 2]
    d_j += xdot * jjj[:, 2]
    return d_om, d_j


def vorticity_rhs(rec: RecoveredFields) -> tuple[np.ndarray, np.ndarray]:
    """Grid-frame time derivatives of vorticity and current density."""
    st = rec.state
    d_om, d_j = transport_rhs(rec.gp, rec.u, rec.h, rec.mesh_velocity, st.omega, st.j)
    return _dealias_bulk(rec.model, d_om), _dealias_bulk(rec.model, d_j)


def beta_gamma_rhs(rec: RecoveredFields) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives of the wall means of ``u`` and ``h``.

    ``beta_i' = -int (u_j d_j u_i - h_j d_j h_i)``,
    ``gamma_i' = -int (u_j d_j h_i - h_j d_j u_i)``; pressure gradients
    integrate to zero on the periodic wall.
    """
    g = rec.gp
    uw = [g.wall_trace(rec.u[i]) for i in (0, 1)]
    hw = [g.wall_trace(rec.h[i]) for i in (0, 1)]
    du = [spectral.gradient(c) for c in uw]  # du[i][j] = d_j u_i
    dh = [spectral.gradient(c) for c in hw]
    beta = np.zeros(2)
    gamma = np.zeros(2)
    for i in range(2):
        beta[i] = -g.surface_integral(sum(uw[k] * du[i][k] - hw[k] * dh[i][k] for k in range(2)))
        gamma[i] = -g.surface_integral(sum(uw[k] * dh[i][k] - hw[k] * du[i][k] for k in range(2)))
    return beta, gamma


def state_rhs(rec: RecoveredFields) -> StateDerivative:
    d_theta = theta_rhs(rec)
    d_om, d_j = vorticity_rhs(rec)
    d_beta, d_gamma = beta_gamma_rhs(rec)
    return StateDerivative(rec.f_dot.copy(), d_theta, d_om, d_j, d_beta, d_gamma)


def cfl_dt(rec: RecoveredFields, cfg: TimeStepConfig) -> float:
    """Advective CFL step ``cfl * dx / c_max``, capped at ``dt_max``.

    ``c_max`` adds the interface speed ``2|u| + sqrt(lambda_max(h h^T + hh hh^T))``
    to the largest bulk speed ``|u| + |h|``.
    """
    tr = rec.traces
    u, h, hh = tr["u"], tr["h"], tr["h_hat"]
    a = h[0] ** 2 + hh[0] ** 2
    b = h[0] * h[1] + hh[0] * hh[1]
    d = h[1] ** 2 + hh[1] ** 2
    lam_max = 0.5 * (a + d + np.hypot(a - d, 2.0 * b))
    c_iface = np.max(2.0 * np.hypot(u[0], u[1]) + np.sqrt(lam_max))
    c_bulk = np.max(np.sqrt(np.sum(rec.u**2, axis=0)) + np.sqrt(np.sum(rec.h**2, axis=0)))
    c_max = float(c_iface + c_bulk)
    dx = 2.0 * np.pi / rec.model.n
    if c_max <= 0.0:
        return cfg.dt_max
    return min(cfg.dt_max, cfg.cfl * dx / c_max)


def postprocess(state: PlasmaVacuumState, model: Model) -> PlasmaVacuumState:
    """Re-centre ``theta``, restore the mean of ``f`` and dealias."""
    st = state.copy()
    st.theta = model.dealias(spectral.mean_project(st.theta))
    st.f = model.dealias(spectral.mean_project(st.f) + model.f_mean0)
    st.omega = model.dealias(st.omega)
    st.j = model.dealias(st.j)
    return st


def rk4_step(
    state: PlasmaVacuumState,
    dt: float,
    model: Model,
    rec: RecoveredFields | None = None,
    cfg: TimeStepConfig | None = None,
) -> tuple[PlasmaVacuumState, RecoveredFields]:
    """Classical RK4 step with a full recovery at every stage.

    Returns the new state and the recovered fields at the old state.

    Raises
    ------
    CFLViolation
        If ``dt`` exceeds the CFL bound of ``state``.
    """
    cfg = cfg or TimeStepConfig()
    rec = rec if rec is not None else recover(state, model)
    bound = cfl_dt(rec, TimeStepConfig(cfg.cfl, np.inf))
    if dt > bound * (1.0 + 1e-12):
        raise CFLViolation(f"dt = {dt:.4g} exceeds CFL bound {bound:.4g}")
    k1 = state_rhs(rec)
    s2 = state.axpy(0.5 * dt, k1, 0.5 * dt)
    k2 = state_rhs(recover(s2, model))
    s3 = state.axpy(0.5 * dt, k2, 0.5 * dt)
    k3 = state_rhs(recover(s3, model))
    s4 = state.axpy(dt, k3, dt)
    k4 = state_rhs(recover(s4, model))
    new = state.copy()
    new.t = state.t + dt
    for key in PlasmaVacuumState.FIELDS:
        incr = (getattr(k1, key) + 2.0 * getattr(k2, key) + 2.0 * getattr(k3, key) + getattr(k4, key)) / 6.0
        setattr(new, key, getattr(state, key) + dt * incr)
    return postprocess(new, model), rec


# ---------------------------------------------------------------------------
# frozen-coefficient linear interface system


def freeze_coefficients(rec: RecoveredFields) -> CoefficientFreeze:
    tr = rec.traces
    return CoefficientFreeze(tr["u"][:2].copy(), tr["h"][:2].copy(), tr["h_hat"][:2].copy(), g_source(rec).copy())


def linearized_rhs(fbar, thetabar, frozen: CoefficientFreeze, dealias=None):
    """``(fbar, thetabar)' = (thetabar, -2 u.grad thetabar + sum (h h + hh hh - u u) dd fbar + g)``."""
    dealias = dealias or (lambda a: a)
    rhs = _interface_operator(thetabar, fbar, frozen.u, frozen.h, frozen.h_hat, dealias)
    return thetabar.copy(), rhs + dealias(frozen.g)


def linear_rk4_step(fbar, thetabar, dt, frozen_at, dealias=None):
    """RK4 step of the linear system; ``frozen_at(c)`` gives coefficients at stage fraction ``c``."""
    c0, ch, c1 = frozen_at(0.0), frozen_at(0.5), frozen_at(1.0)
    a1, b1 = linearized_rhs(fbar, thetabar, c0, dealias)
    a2, b2 = linearized_rhs(fbar + 0.5 * dt * a1, thetabar + 0.5 * dt * b1, ch, dealias)
    a3, b3 = linearized_rhs(fbar + 0.5 * dt * a2, thetabar + 0.5 * dt * b2, ch, dealias)
    a4, b4 = linearized_rhs(fbar + dt * a3, thetabar + dt * b3, c1, dealias)
    return (
        fbar + dt * (a1 + 2 * a2 + 2 * a3 + a4) / 6.0,
        thetabar + dt * (b1 + 2 * b2 + 2 * b3 + b4) / 6.0,
    )
