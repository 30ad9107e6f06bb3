"""Picard iteration on time-sampled trajectories.

A trajectory stores the evolved variables at uniformly spaced sample times
on ``[0, T]``. One application of the iteration map recovers the physical
fields along a background trajectory and then integrates the equations with
every coefficient taken from the background: a linear wave equation for the
interface, linear transport for vorticity and current, and quadratures for
the wall means. Coefficients between samples come from cubic Lagrange
interpolation in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .diagnostics import bulk_hs_norm
from .dynamics import (
    CoefficientFreeze,
    beta_gamma_rhs,
    freeze_coefficients,
    linearized_rhs,
    transport_rhs,
)
from .errors import InvalidField, MembershipViolation, NoContraction, StabilityError
from .geometry import Side, Strip
from .state import Model, PlasmaVacuumState, recover

__all__ = [
    "IterationConfig",
    "Trajectory",
    "MembershipReport",
    "PicardResult",
    "trajectory_size",
    "membership_check",
    "iterate_once",
    "iterate_distance",
    "picard_solve",
    "bisect_horizon",
]


@dataclass
class IterationConfig:
    """Horizon, sampling and admissibility bounds of the Picard iteration.

    ``M1`` and ``M2`` default to twice the larger of the initial size and
    the size of the first iterate. Membership is reported for every iterate;
    with ``enforce_membership`` the iteration stops at the first violation.
    """

    T: float = 0.05
    n_steps: int = 8
    M1: float | None = None
    M2: float | None = None
    delta0: float = 0.5
    max_iters: int = 12
    contraction_tol: float = 1e-12
    divergence_run: int = 3
    enforce_membership: bool = False

    def __post_init__(self):
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise InvalidField(f"horizon must be positive, got {self.T}")
        if self.n_steps < 1:
            raise InvalidField("n_steps must be at least 1")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps


@dataclass
class Trajectory:
    """Evolved variables at sample times ``times``; leading axis indexes samples."""

    times: np.ndarray
    f: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    j: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray

    FIELDS = PlasmaVacuumState.FIELDS

    def __len__(self) -> int:
        return len(self.times)

    def state(self, n: int) -> PlasmaVacuumState:
        return PlasmaVacuumState(float(self.times[n]), *(np.array(getattr(self, k)[n]) for k in self.FIELDS))

    @classmethod
    def from_states(cls, states: list[PlasmaVacuumState]) -> "Trajectory":
        return cls(np.array([s.t for s in states]), *(np.stack([getattr(s, k) for s in states]) for k in cls.FIELDS))

    @classmethod
    def constant(cls, state: PlasmaVacuumState, T: float, n_steps: int) -> "Trajectory":
        """The initial data held fixed on ``[0, T]``; the usual starting iterate."""
        times = np.linspace(0.0, T, n_steps + 1)
        arrays = [np.broadcast_to(getattr(state, k), (n_steps + 1,) + np.shape(getattr(state, k))).copy() for k in cls.FIELDS]
        return cls(times, *arrays)


def _sizes(traj: Trajectory, ref: Strip, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample first-order and second-order sizes of a trajectory."""
    k = len(traj)
    first = np.array(
        [
            spectral.hs_norm(traj.f[n], s + 0.5)
            + spectral.hs_norm(traj.theta[n], s - 0.5)
            + bulk_hs_norm(traj.omega[n], ref, s - 1)
            + bulk_hs_norm(traj.j[n], ref, s - 1)
            + float(np.linalg.norm(traj.beta[n]))
            + float(np.linalg.norm(traj.gamma[n]))
            for n in range(k)
        ]
    )
    if k < 3:
        return first, np.zeros(0)
    dt = float(traj.times[1] - traj.times[0])
    second = []
    for n in range(k):
        c = min(max(n, 1), k - 2)
        ftt = (traj.theta[c + 1] - traj.theta[c - 1]) / (2.0 * dt)
        dom = (traj.omega[c + 1] - traj.omega[c - 1]) / (2.0 * dt)
        dj = (traj.j[c + 1] - traj.j[c - 1]) / (2.0 * dt)
        db = (traj.beta[c + 1] - traj.beta[c - 1]) / (2.0 * dt)
        dg = (traj.gamma[c + 1] - traj.gamma[c - 1]) / (2.0 * dt)
        second.append(
            spectral.hs_norm(ftt, s - 1.5)
            + bulk_hs_norm(dom, ref, s - 2)
            + bulk_hs_norm(dj, ref, s - 2)
            + float(np.linalg.norm(db))
            + float(np.linalg.norm(dg))
        )
    return first, np.array(second)


def trajectory_size(traj: Trajectory, model: Model) -> tuple[float, float]:
    """``(sup first-order size, sup second-order size)`` of a trajectory."""
    first, second = _sizes(traj, model.ref_plasma, model.config.s)
    return float(np.max(first)), float(np.max(second)) if second.size else 0.0


@dataclass
class MembershipReport:
    """Outcome of each admissibility condition: ``name -> (value, bound, ok)``."""

    conditions: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for _, _, ok in self.conditions.values())

    def failures(self) -> list[str]:
        return [k for k, (_, _, ok) in self.conditions.items() if not ok]

    def as_dict(self) -> dict:
        return {k: {"value": v, "bound": b, "ok": ok} for k, (v, b, ok) in self.conditions.items()}


def membership_check(
    traj: Trajectory, initial: PlasmaVacuumState, model: Model, cfg: IterationConfig, comp_tol: float = 1e-8
) -> MembershipReport:
    """Check a candidate trajectory against the admissible set. Report only; never raises."""
    s = model.config.s
    ref = model.ref_plasma
    rep = MembershipReport()
    init_err = max(float(np.max(np.abs(getattr(traj, k)[0] - getattr(initial, k)))) for k in Trajectory.FIELDS)
    rep.conditions["initial_data"] = (init_err, 0.0, init_err <= 1e-12)
    drift = max(spectral.hs_norm(traj.f[n] - model.f_star, s - 0.5) for n in range(len(traj)))
    rep.conditions["interface_drift"] = (drift, cfg.delta0, drift <= cfg.delta0)
    gap = float(np.max(np.abs(traj.f)))
    rep.conditions["gap"] = (gap, 1.0 - model.config.c0, gap <= 1.0 - model.config.c0)
    m1, m2 = trajectory_size(traj, model)
    if cfg.M1 is not None:
        rep.conditions["first_order_size"] = (m1, cfg.M1, m1 <= cfg.M1)
    if cfg.M2 is not None and len(traj) >= 3:
        rep.conditions["second_order_size"] = (m2, cfg.M2, m2 <= cfg.M2)
    comp = 0.0
    for n in range(len(traj)):
        comp = max(
            comp,
            abs(spectral.mean(traj.theta[n])),
            abs(ref.surface_integral(ref.wall_trace(traj.omega[n][2]))),
            abs(ref.surface_integral(ref.wall_trace(traj.j[n][2]))),
        )
    rep.conditions["compatibility"] = (comp, comp_tol, comp <= comp_tol)
    return rep


@dataclass
class _Coefficients:
    """Background quantities needed by one linear step, at one time."""

    z: np.ndarray
    u: np.ndarray
    h: np.ndarray
    xdot: np.ndarray
    frozen: CoefficientFreeze
    dbeta: np.ndarray
    dgamma: np.ndarray

    ARRAYS = ("z", "u", "h", "xdot", "dbeta", "dgamma")

    @classmethod
    def blend(cls, weights, items: list["_Coefficients"]) -> "_Coefficients":
        arrays = {k: sum(w * getattr(c, k) for w, c in zip(weights, items)) for k in cls.ARRAYS}
        return cls(frozen=items[0].frozen.blend(weights, [c.frozen for c in items]), **arrays)


def _sample_coefficients(state: PlasmaVacuumState, model: Model) -> _Coefficients:
    rec = recover(state, model)
    frozen = freeze_coefficients(rec)
    lam = float(np.min(rec.margin))
    cfg = model.config
    if cfg.monitor_stability and lam < cfg.c1:
        raise StabilityError(f"background stability margin {lam:.4g} below c1 at t = {state.t:.4g}")
    dbeta, dgamma = beta_gamma_rhs(rec)
    return _Coefficients(rec.gp.z.copy(), rec.u, rec.h, rec.mesh_velocity, frozen, dbeta, dgamma)


def _lagrange_weights(times: np.ndarray, n: int, t: float) -> tuple[list[int], np.ndarray]:
    """Cubic (or lower, for short trajectories) Lagrange weights around interval ``n``."""
    k = len(times)
    width = min(4, k)
    lo = min(max(n - 1, 0), k - width)
    idx = list(range(lo, lo + width))
    nodes = times[idx]
    w = np.ones(width)
    for a in range(width):
        for b in range(width):
            if a != b:
                w[a] *= (t - nodes[b]) / (nodes[a] - nodes[b])
    return idx, w


def iterate_once(background: Trajectory, model: Model, cfg: IterationConfig, initial: PlasmaVacuumState | None = None) -> Trajectory:
    """Apply the iteration map to ``background``.

    Raises
    ------
    MembershipViolation
        ``background`` fails an admissibility condition and
        ``cfg.enforce_membership`` is set.
    GapViolation, DegenerateMap, StabilityError, EllipticDivergence
        Recovery along the background fails.
    """
    initial = initial or background.state(0)
    if cfg.enforce_membership:
        rep = membership_check(background, initial, model, cfg)
        if not rep.passed:
            raise MembershipViolation(f"background violates {', '.join(rep.failures())}")
    times = background.times
    coeffs = [_sample_coefficients(background.state(n), model) for n in range(len(times))]

    def at(n: int, t: float) -> _Coefficients:
        idx, w = _lagrange_weights(times, n, t)
        return _Coefficients.blend(w, [coeffs[i] for i in idx])

    dealias = model.dealias

    def bulk_rhs(c: _Coefficients, om, jj):
        g = Strip(c.z, Side.PLASMA)
        d_om, d_j = transport_rhs(g, c.u, c.h, c.xdot, om, jj)
        return dealias(d_om), dealias(d_j)

    f1 = initial.f.copy()
    th = initial.theta.copy()
    om = initial.omega.copy()
    jj = initial.j.copy()
    beta = np.array(initial.beta, dtype=float)
    gamma = np.array(initial.gamma, dtype=float)
    f_mean0 = spectral.mean(initial.f)
    out = [initial.copy()]
    for n in range(len(times) - 1):
        t0, t1 = times[n], times[n + 1]
        dt = t1 - t0
        c0, c1 = coeffs[n], coeffs[n + 1]
        ch = at(n, 0.5 * (t0 + t1))
        stages = (c0, ch, ch, c1)
        frac = (0.0, 0.5, 0.5, 1.0)
        ks = []
        y = (f1, th, om, jj)
        for c, a in zip(stages, frac):
            if ks:
                y = tuple(base + a * dt * k for base, k in zip((f1, th, om, jj), ks[-1]))
            df, dth = linearized_rhs(y[0], y[1], c.frozen, dealias)
            d_om, d_j = bulk_rhs(c, y[2], y[3])
            ks.append((df, dth, d_om, d_j))
        f1, th, om, jj = (
            base + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
            for base, k1, k2, k3, k4 in zip((f1, th, om, jj), *ks)
        )
        f1, th, om, jj = dealias(f1), dealias(th), dealias(om), dealias(jj)
        # Simpson quadrature of the wall-mean rates
        beta = beta + dt * (c0.dbeta + 4.0 * ch.dbeta + c1.dbeta) / 6.0
        gamma = gamma + dt * (c0.dgamma + 4.0 * ch.dgamma + c1.dgamma) / 6.0
        f_out = spectral.mean_project(f1) + f_mean0
        out.append(PlasmaVacuumState(float(t1), f_out, spectral.mean_project(th), om.copy(), jj.copy(), beta.copy(), gamma.copy()))
    return Trajectory.from_states(out)


def iterate_distance(a: Trajectory, b: Trajectory, model: Model) -> float:
    """Sup over samples of the iteration distance between two trajectories."""
    if len(a) != len(b) or not np.allclose(a.times, b.times):
        raise InvalidField("trajectories are sampled at different times")
    s = model.config.s
    ref = model.ref_plasma
    best = 0.0
    for n in range(len(a)):
        d = (
            spectral.hs_norm(a.f[n] - b.f[n], s - 0.5)
            + spectral.hs_norm(a.theta[n] - b.theta[n], s - 1.5)
            + bulk_hs_norm(a.omega[n] - b.omega[n], ref, s - 2)
            + bulk_hs_norm(a.j[n] - b.j[n], ref, s - 2)
            + float(np.linalg.norm(a.beta[n] - b.beta[n]))
            + float(np.linalg.norm(a.gamma[n] - b.gamma[n]))
        )
        best = max(best, d)
    return best


@dataclass
class PicardResult:
    trajectory: Trajectory
    distances: list[float]
    ratios: list[float]
    converged: bool
    memberships: list[MembershipReport]
    M1: float | None = None
    M2: float | None = None

    def contracted(self, threshold: float = 0.5, run: int = 3) -> bool:
        """True if ``run`` consecutive ratios are at most ``threshold``, or the iteration converged with all ratios below it."""
        streak = 0
        for r in self.ratios:
            streak = streak + 1 if r <= threshold else 0
            if streak >= run:
                return True
        return self.converged and all(r <= threshold for r in self.ratios)


def picard_solve(
    initial: PlasmaVacuumState,
    model: Model,
    cfg: IterationConfig,
    callback=None,
) -> PicardResult:
    """Iterate from the constant trajectory until the distance drops below ``cfg.contraction_tol``.

    ``callback(k, distance, ratio)`` is called after each iterate.

    Raises
    ------
    NoContraction
        Ratios of successive distances exceed 1 for ``cfg.divergence_run``
        consecutive iterations. The partial result is attached as ``.result``.
    MembershipViolation
        A background leaves the admissible set and ``cfg.enforce_membership`` is set.
    """
    current = Trajectory.constant(initial, cfg.T, cfg.n_steps)
    m0, m0b = trajectory_size(current, model)
    run_cfg = IterationConfig(**{**cfg.__dict__, "enforce_membership": False})
    distances: list[float] = []
    ratios: list[float] = []
    reports: list[MembershipReport] = []
    streak = 0
    result = PicardResult(current, distances, ratios, False, reports)
    for k in range(cfg.max_iters):
        new = iterate_once(current, model, run_cfg, initial)
        if k == 0:
            m1, m2 = trajectory_size(new, model)
            run_cfg.M1 = cfg.M1 if cfg.M1 is not None else 2.0 * max(m0, m1)
            run_cfg.M2 = cfg.M2 if cfg.M2 is not None else 2.0 * max(m0b, m2)
            result.M1, result.M2 = run_cfg.M1, run_cfg.M2
        rep = membership_check(new, initial, model, run_cfg)
        reports.append(rep)
        d = iterate_distance(new, current, model)
        ratio = d / distances[-1] if distances and distances[-1] > 0.0 else float("nan")
        distances.append(d)
        if distances[:-1]:
            ratios.append(ratio)
        if callback is not None:
            callback(k, d, ratio)
        current = new
        result.trajectory = current
        if d <= cfg.contraction_tol:
            result.converged = True
            return result
        streak = streak + 1 if (len(distances) > 1 and ratio > 1.0) else 0
        if streak >= cfg.divergence_run:
            exc = NoContraction(f"distance ratios exceeded 1 for {streak} consecutive iterations at T = {cfg.T:.4g}")
            exc.result = result
            raise exc
        if cfg.enforce_membership and not rep.passed:
            raise MembershipViolation(f"iterate {k + 1} violates {', '.join(rep.failures())}")
    return result


def bisect_horizon(
    initial: PlasmaVacuumState,
    model: Model,
    cfg: IterationConfig,
    threshold: float = 0.5,
    max_halvings: int = 8,
) -> tuple[float, PicardResult]:
    """Halve ``cfg.T`` (keeping the step size) until the iteration contracts.

    Contraction means ``run`` consecutive distance ratios at most
    ``threshold``. Returns the accepted horizon and its result.

    Raises
    ------
    NoContraction
        No horizon within ``max_halvings`` halvings contracts.
    """
    dt = cfg.dt
    T = cfg.T
    for _ in range(max_halvings + 1):
        steps = max(1, int(round(T / dt)))
        trial = IterationConfig(**{**cfg.__dict__, "T": T, "n_steps": steps})
        try:
            res = picard_solve(initial, model, trial)
            if res.contracted(threshold, cfg.divergence_run):
                return T, res
        except (NoContraction, MembershipViolation):
            pass
        T *= 0.5
    raise NoContraction(f"no contracting horizon found down to T = {2.0 * T:.4g}")
