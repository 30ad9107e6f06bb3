import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhdsim import spectral
from mhdsim.dynamics import (
    TimeStepConfig,
    cfl_dt,
    freeze_coefficients,
    g_source,
    linearized_rhs,
    postprocess,
    rk4_step,
    state_rhs,
    theta_rhs,
)
from mhdsim.errors import CFLViolation, CompatibilityError, GapViolation, StabilityError
from mhdsim.scenarios import ScenarioConfig, build_scenario
from mhdsim.state import (
    CurrentMode,
    Model,
    ModelConfig,
    SurfaceCurrent,
    init_state,
    recover,
    stability_margin,
)

N, M = 16, 16


@pytest.fixture(scope="module")
def equilibrium():
    return build_scenario(ScenarioConfig("equilibrium"), ModelConfig(n=N, m=M))


def test_equilibrium_recovery(equilibrium):
    rec = recover(equilibrium.state, equilibrium.model)
    assert np.allclose(rec.u, 0.0, atol=1e-12)
    assert np.allclose(rec.h[0], 1.0, atol=1e-12) and np.allclose(rec.h[1:], 0.0, atol=1e-12)
    assert np.allclose(rec.h_hat[1], 1.0, atol=1e-12)
    assert np.allclose(rec.margin, 1.0, atol=1e-12)
    assert np.allclose(rec.traces["h_hat"][:2], [[[0.0]], [[1.0]]], atol=1e-12)


def test_equilibrium_is_stationary(equilibrium):
    rec = recover(equilibrium.state, equilibrium.model)
    assert np.max(np.abs(g_source(rec))) < 1e-12
    d = state_rhs(rec)
    for k in ("f", "theta", "omega", "j", "beta", "gamma"):
        assert np.max(np.abs(getattr(d, k))) < 1e-10
    new, _ = rk4_step(equilibrium.state, 0.05, equilibrium.model, rec)
    for k in ("f", "theta", "omega", "j", "beta", "gamma"):
        assert np.max(np.abs(getattr(new, k) - getattr(equilibrium.state, k))) < 1e-10


def test_equilibrium_cfl_step():
    sc = build_scenario(ScenarioConfig("equilibrium"), ModelConfig(n=32, m=8))
    rec = recover(sc.state, sc.model)
    dt = cfl_dt(rec, TimeStepConfig(cfl=0.4, dt_max=1.0))
    assert dt == pytest.approx(0.4 * (2 * np.pi / 32) / 2.0)
    with pytest.raises(CFLViolation):
        rk4_step(sc.state, 10 * dt, sc.model, rec, TimeStepConfig(cfl=0.4, dt_max=1.0))


def test_sheared_recovery_round_trip():
    sc = build_scenario(ScenarioConfig("sheared", shear=0.3), ModelConfig(n=N, m=M))
    rec = recover(sc.state, sc.model)
    assert np.max(np.abs(rec.u - sc.u0)) < 1e-8
    assert np.max(np.abs(rec.h - sc.h0)) < 1e-8


def test_perturbed_recovery_round_trip():
    sc = build_scenario(ScenarioConfig("perturbed", eps=0.05, k=(1, 1)), ModelConfig(n=N, m=M))
    rec = recover(sc.state, sc.model)
    assert np.max(np.abs(rec.h - sc.h0)) < 1e-8
    assert np.max(np.abs(rec.gp.normal_component(rec.h))) < 1e-8


def test_collinear_rejected():
    with pytest.raises(StabilityError):
        build_scenario(ScenarioConfig("collinear"), ModelConfig(n=8, m=8))


def test_init_state_checks():
    cfg = ModelConfig(n=8, m=8)
    x1, _ = spectral.grid_points(8)
    f0 = np.zeros((8, 8))
    model = Model(cfg, f0, SurfaceCurrent())
    g = model.maps(f0)[0].geom
    h0 = np.zeros((3,) + g.shape)
    h0[0] = 1.0
    bad = h0.copy()
    bad[2] = g.z  # div = 1 and a wall normal component
    with pytest.raises(CompatibilityError):
        init_state(f0, np.zeros_like(h0), bad, model)
    with pytest.raises(GapViolation):
        init_state(np.full((8, 8), 0.85), np.zeros_like(h0), h0, model)


def test_linear_symbol_of_theta_equation():
    # f = eps cos x1 about h = e1, hh = e2 oscillates with unit frequency
    eps = 1e-5
    sc = build_scenario(ScenarioConfig("perturbed", eps=eps, k=(1, 0)), ModelConfig(n=N, m=M))
    rec = recover(sc.state, sc.model)
    x1, _ = spectral.grid_points(N)
    dth = theta_rhs(rec)
    assert np.max(np.abs(dth + eps * np.cos(x1))) < 1e-3 * eps


def test_linearized_rhs_matches_full_rhs_to_second_order():
    eps = 1e-4
    sc = build_scenario(ScenarioConfig("perturbed", eps=eps, k=(1, 1)), ModelConfig(n=N, m=M))
    rec = recover(sc.state, sc.model)
    frozen = freeze_coefficients(rec)
    df, dth = linearized_rhs(sc.state.f, sc.state.theta, frozen, sc.model.dealias)
    assert np.max(np.abs(dth - theta_rhs(rec))) < 1e-12
    assert np.max(np.abs(df - sc.state.theta)) == 0.0


def test_postprocess_restores_means(equilibrium):
    st_ = equilibrium.state.copy()
    st_.f = st_.f + 1e-3
    st_.theta = st_.theta + 2e-3
    out = postprocess(st_, equilibrium.model)
    assert abs(spectral.mean(out.f) - equilibrium.model.f_mean0) < 1e-15
    assert abs(spectral.mean(out.theta)) < 1e-15


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_stability_margin_is_smallest_eigenvalue(a, b, c, d):
    lam = stability_margin(np.array(a), np.array(b), np.array(c), np.array(d))
    mat = np.outer([a, b], [a, b]) + np.outer([c, d], [c, d])
    assert float(lam) == pytest.approx(np.linalg.eigvalsh(mat)[0], abs=1e-12)


@pytest.mark.parametrize("profile", ["constant", "ramp", "oscillating"])
def test_surface_current_time_derivative(profile):
    cur = SurfaceCurrent((1.0, 0.5), (CurrentMode(1, 2, 0.1),), profile, 0.3)
    t, h = 0.7, 1e-6
    fd = (cur(t + h, 8) - cur(t - h, 8)) / (2 * h)
    assert np.allclose(cur.dt(t, 8), fd, atol=1e-8)
    assert cur.is_steady == (profile == "constant")


def test_mode_current_is_divergence_free():
    vals = CurrentMode(2, 1, 0.5).values(16)
    div = spectral.derivative(vals[0], 0) + spectral.derivative(vals[1], 1)
    assert np.max(np.abs(div)) < 1e-12
