import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhdsim import iteration
from mhdsim.dynamics import rk4_step
from mhdsim.errors import InvalidField, NoContraction
from mhdsim.iteration import (
    IterationConfig,
    Trajectory,
    _lagrange_weights,
    iterate_distance,
    iterate_once,
    membership_check,
    picard_solve,
)
from mhdsim.scenarios import ScenarioConfig, build_scenario
from mhdsim.state import ModelConfig


@pytest.fixture(scope="module")
def equilibrium():
    return build_scenario(ScenarioConfig("equilibrium"), ModelConfig(n=8, m=8))


@pytest.fixture(scope="module")
def perturbed():
    return build_scenario(ScenarioConfig("perturbed", eps=1e-2, k=(1, 1)), ModelConfig(n=8, m=8))


@given(st.integers(3, 12), st.integers(0, 10_000))
def test_lagrange_weights_reproduce_cubics(k, seed):
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, 1.0, k + 1)
    coef = rng.standard_normal(4)
    n = int(rng.integers(0, k))
    t = times[n] + rng.uniform() * (times[n + 1] - times[n])
    idx, w = _lagrange_weights(times, n, t)
    assert np.dot(w, np.polyval(coef, times[idx])) == pytest.approx(np.polyval(coef, t), abs=1e-12)


def test_config_validation():
    with pytest.raises(InvalidField):
        IterationConfig(T=-1.0)
    with pytest.raises(InvalidField):
        IterationConfig(n_steps=0)


def test_equilibrium_is_a_fixed_point(equilibrium):
    cfg = IterationConfig(T=0.2, n_steps=4)
    res = picard_solve(equilibrium.state, equilibrium.model, cfg)
    assert res.converged and len(res.distances) == 1
    assert res.distances[0] < 1e-12


def test_constant_trajectory_is_admissible(equilibrium):
    traj = Trajectory.constant(equilibrium.state, 0.2, 4)
    rep = membership_check(traj, equilibrium.state, equilibrium.model, IterationConfig(M1=1e3, M2=1e3))
    assert rep.passed, rep.as_dict()


def test_membership_reports_violations(perturbed):
    traj = Trajectory.constant(perturbed.state, 0.2, 4)
    traj.f[2] += 0.5
    rep = membership_check(traj, perturbed.state, perturbed.model, IterationConfig(M1=1.0, delta0=0.1))
    assert not rep.passed
    assert {"first_order_size", "interface_drift"} <= set(rep.failures())


def test_iterate_keeps_initial_data(perturbed):
    bg = Trajectory.constant(perturbed.state, 0.2, 4)
    out = iterate_once(bg, perturbed.model, IterationConfig(T=0.2, n_steps=4))
    assert iterate_distance(Trajectory.from_states([out.state(0)]), Trajectory.from_states([perturbed.state]), perturbed.model) == 0.0
    assert abs(out.f.mean(axis=(1, 2)) - perturbed.state.f.mean()).max() < 1e-15


def test_fixed_point_agrees_with_direct_integration(perturbed):
    T, k = 0.2, 4
    res = picard_solve(perturbed.state, perturbed.model, IterationConfig(T=T, n_steps=k, contraction_tol=1e-11))
    assert res.converged
    assert all(r < 0.5 for r in res.ratios)
    st_ = perturbed.state
    for _ in range(k):
        st_, _ = rk4_step(st_, T / k, perturbed.model)
    traj = res.trajectory
    assert np.max(np.abs(traj.f[-1] - st_.f)) < 1e-8
    assert np.max(np.abs(traj.theta[-1] - st_.theta)) < 1e-7


def test_distance_requires_matching_samples(perturbed):
    a = Trajectory.constant(perturbed.state, 0.2, 4)
    b = Trajectory.constant(perturbed.state, 0.2, 2)
    with pytest.raises(InvalidField):
        iterate_distance(a, b, perturbed.model)


def test_growing_distances_raise_no_contraction(perturbed, monkeypatch):
    bg = Trajectory.constant(perturbed.state, 0.2, 2)
    dists = iter([1.0, 2.0, 4.0, 8.0, 16.0])
    monkeypatch.setattr(iteration, "iterate_once", lambda b, m, c, i=None: bg)
    monkeypatch.setattr(iteration, "iterate_distance", lambda a, b, m: next(dists))
    with pytest.raises(NoContraction) as info:
        picard_solve(perturbed.state, perturbed.model, IterationConfig(T=0.2, n_steps=2))
    assert info.value.result.ratios == [2.0, 2.0, 2.0]
