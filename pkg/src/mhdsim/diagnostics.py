"""Stability margin, energies, conservation monitors and limit-system residuals."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import spectral
from .errors import InsufficientHistory
from .geometry import Strip
from .state import RecoveredFields, stability_margin

__all__ = [
    "stability_lambda",
    "brute_force_lambda",
    "energy_Es",
    "energy_cal_Es",
    "bulk_hs_norm",
    "LimitResiduals",
    "limit_residuals",
    "interface_residuals",
    "divergence_persistence",
    "DiagnosticsRecord",
]


def stability_lambda(h_trace, hh_trace) -> tuple[np.ndarray, float]:
    """Pointwise ``lambda_min(h h^T + hh hh^T)`` and its grid minimum.

    ``h_trace`` and ``hh_trace`` hold at least the two horizontal components.
    """
    lam = stability_margin(h_trace[0], h_trace[1], hh_trace[0], hh_trace[1])
    return lam, float(np.min(lam))


def brute_force_lambda(h, hh, n_angles: int = 10_000, polish: bool = True) -> float:
    """Minimise ``(h.phi)^2 + (hh.phi)^2`` over unit vectors by angle sampling.

    Independent oracle for :func:`stability_lambda` at a single point. The
    best sampled angle is refined by a bounded scalar search on the
    neighbouring bracket.
    """
    phi = np.linspace(0.0, np.pi, n_angles, endpoint=False)
    c, s = np.cos(phi), np.sin(phi)
    q = (h[0] * c + h[1] * s) ** 2 + (hh[0] * c + hh[1] * s) ** 2
    i = int(np.argmin(q))
    best = float(q[i])
    if not polish:
        return best
    from scipy.optimize import minimize_scalar

    def quad(a):
        return (h[0] * math.cos(a) + h[1] * math.sin(a)) ** 2 + (hh[0] * math.cos(a) + hh[1] * math.sin(a)) ** 2

    step = np.pi / n_angles
    res = minimize_scalar(quad, bounds=(phi[i] - step, phi[i] + step), method="bounded", options={"xatol": 1e-12})
    return min(best, float(res.fun))


def _l2_sq(a: np.ndarray) -> float:
    n = a.shape[-1]
    return float(np.sum(a * a)) * (2.0 * np.pi / n) ** 2


def energy_Es(fbar, fbar_t, u, h, hh, s: float) -> float:
    """Hyperbolic energy of the linearised interface equation.

    ``|(d_t + u.grad) D fbar|^2 + 1/2 |h.grad D fbar|^2 + 1/2 |hh.grad D fbar|^2``
    with ``D = <grad>^(s - 1/2)`` and horizontal traces ``u, h, hh``.
    """
    sigma = s - 0.5
    df = spectral.bessel_potential(np.asarray(fbar, dtype=float), sigma)
    dft = spectral.bessel_potential(np.asarray(fbar_t, dtype=float), sigma)
    d1, d2 = spectral.gradient(df)
    transported = dft + u[0] * d1 + u[1] * d2
    hterm = h[0] * d1 + h[1] * d2
    kterm = hh[0] * d1 + hh[1] * d2
    return _l2_sq(transported) + 0.5 * _l2_sq(hterm) + 0.5 * _l2_sq(kterm)


def energy_cal_Es(fbar, fbar_t, s: float) -> float:
    """Standard energy ``|fbar|^2_{H^(s+1/2)} + |fbar_t|^2_{H^(s-1/2)}``."""
    return spectral.hs_norm(fbar, s + 0.5) ** 2 + spectral.hs_norm(fbar_t, s - 0.5) ** 2


def bulk_hs_norm(v: np.ndarray, strip: Strip, sigma: float) -> float:
    """Sobolev proxy on a layer: ``sum_m |<grad'>^(sigma - m) d_3^m v|^2`` for ``m <= ceil(sigma)``.

    Vector fields (leading axis 3) add their components.
    """
    v = np.asarray(v, dtype=float)
    comps = v if v.ndim == 4 else v[None]
    top = max(0, math.ceil(sigma))
    total = 0.0
    for c in comps:
        cur = c
        for m in range(top + 1):
            weighted = spectral.bessel_potential(cur, sigma - m)
            total += float(np.sum(strip.volume_weights * weighted * weighted))
            if m < top:
                cur = strip.b * strip.dr(cur)
    return math.sqrt(total)


@dataclass
class LimitResiduals:
    w_norm: float
    b_norm: float
    w_normal_iface: float
    w3_wall: float
    w_wall_means: float
    b_normal_iface: float
    b3_wall: float
    b_wall_means: float
    kinematic: float

    def as_dict(self) -> dict:
        return asdict(self)


def _time_derivative(values, dt: float, index: int):
    k = len(values)
    if k < 3:
        raise InsufficientHistory("need at least three samples for a time difference")
    if 0 < index < k - 1:
        return (values[index + 1] - values[index - 1]) / (2.0 * dt)
    if index == 0:
        return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt)
    return (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dt)


def limit_residuals(history: list[RecoveredFields], dt: float, index: int | None = None) -> LimitResiduals:
    """Residuals of the momentum and induction equations at one sample.

    ``w = u_t + u.grad u - h.grad h + grad p`` and ``b = h_t - h.grad u + u.grad h``
    with time derivatives from 3-point differences of the node values,
    corrected for node motion: ``u_t = d(u_node)/dt - X3_t d_3 u``. The
    kinematic residual compares the differenced ``f_t`` with ``u.N``.

    Raises
    ------
    InsufficientHistory
        Fewer than three samples.
    """
    if len(history) < 3:
        raise InsufficientHistory("need at least three samples for a time difference")
    index = len(history) // 2 if index is None else index
    rec = history[index]
    g = rec.gp
    u, h = rec.u, rec.h
    xdot = rec.mesh_velocity
    du_node = _time_derivative([r.u for r in history], dt, index)
    dh_node = _time_derivative([r.h for r in history], dt, index)
    df = _time_derivative([r.state.f for r in history], dt, index)
    ju = g.jacobian_matrix(u)
    jh = g.jacobian_matrix(h)
    u_t = du_node - xdot * ju[:, 2]
    h_t = dh_node - xdot * jh[:, 2]

    def dot(vec, jac):
        return np.einsum("k...,ik...->i...", vec, jac)

    w = u_t + dot(u, ju) - dot(h, jh) + g.grad(rec.pressure)
    b = h_t - dot(h, ju) + dot(u, jh)

    def bc(v):
        means = np.abs([g.surface_integral(g.wall_trace(v[i])) for i in (0, 1)])
        return (
            float(np.max(np.abs(g.normal_component(v)))),
            float(np.max(np.abs(g.wall_trace(v[2])))),
            float(np.max(means)),
        )

    wn, w3, wm = bc(w)
    bn, b3, bm = bc(b)
    kin = float(np.max(np.abs(df - g.normal_component(u))))
    return LimitResiduals(g.l2_norm(w), g.l2_norm(b), wn, w3, wm, bn, b3, bm, kin)


def interface_residuals(rec: RecoveredFields) -> dict[str, float]:
    """Trace residuals: pressure balance, ``h.N``, ``hh.N`` and ``theta - u.N``."""
    gp, gv = rec.gp, rec.gv
    p_tr = gp.trace(rec.pressure)
    pb = p_tr - 0.5 * gv.trace(rec.h_hat_sq)
    return {
        "pressure_balance": float(np.max(np.abs(pb))),
        "hN": float(np.max(np.abs(gp.normal_component(rec.h)))),
        "hhatN": float(np.max(np.abs(gv.normal_component(rec.h_hat)))),
        "kinematic": float(np.max(np.abs(rec.state.theta - gp.normal_component(rec.u)))),
    }


def _interior_div_norm(strip: Strip, v: np.ndarray) -> float:
    d = strip.div(v)
    d[..., [strip.iface, strip.wall]] = 0.0
    return strip.l2_norm(d)


def divergence_persistence(rec: RecoveredFields) -> dict[str, float]:
    """Divergence of the evolved vorticity and current, and the curl mismatch of ``u``, ``h``.

    Divergences are discrete L^2 norms over interior nodes.
    """
    g = rec.gp
    st = rec.state
    return {
        "div_omega": _interior_div_norm(g, st.omega),
        "div_j": _interior_div_norm(g, st.j),
        "div_u": _interior_div_norm(g, rec.u),
        "div_h": _interior_div_norm(g, rec.h),
        "curl_u_mismatch": g.l2_norm(g.curl(rec.u) - st.omega),
        "curl_h_mismatch": g.l2_norm(g.curl(rec.h) - st.j),
    }


@dataclass
class DiagnosticsRecord:
    """One line of the diagnostics stream. ``None`` marks a quantity not available at this sample."""

    step: int
    t: float
    lambda_min: float
    E_s: float
    cal_E_s: float
    mean_f_drift: float
    mean_theta: float
    hN_residual: float
    hhatN_residual: float
    pressure_balance_residual: float
    kinematic_residual: float
    w_norm: float | None
    b_norm: float | None
    div_residuals: dict

    def as_dict(self) -> dict:
        return asdict(self)


def make_record(step: int, rec: RecoveredFields, f_mean0: float, s: int, limit: LimitResiduals | None = None) -> DiagnosticsRecord:
    """Assemble a record from recovered fields at one step."""
    st = rec.state
    tr = rec.traces
    _, lam = stability_lambda(tr["h"], tr["h_hat"])
    fbar = st.f - rec.model.f_star
    es = energy_Es(fbar, rec.f_dot, tr["u"], tr["h"], tr["h_hat"], s)
    ces = energy_cal_Es(fbar, rec.f_dot, s)
    ires = interface_residuals(rec)
    return DiagnosticsRecord(
        step=step,
        t=float(st.t),
        lambda_min=lam,
        E_s=es,
        cal_E_s=ces,
        mean_f_drift=abs(spectral.mean(st.f) - f_mean0),
        mean_theta=abs(spectral.mean(st.theta)),
        hN_residual=ires["hN"],
        hhatN_residual=ires["hhatN"],
        pressure_balance_residual=ires["pressure_balance"],
        kinematic_residual=ires["kinematic"],
        w_norm=None if limit is None else limit.w_norm,
        b_norm=None if limit is None else limit.b_norm,
        div_residuals=divergence_persistence(rec),
    )
