import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhdsim import spectral
from mhdsim.diagnostics import (
    brute_force_lambda,
    bulk_hs_norm,
    divergence_persistence,
    energy_cal_Es,
    energy_Es,
    interface_residuals,
    limit_residuals,
    make_record,
    stability_lambda,
)
from mhdsim.dynamics import rk4_step
from mhdsim.errors import InsufficientHistory
from mhdsim.geometry import Side, sigma_strip
from mhdsim.scenarios import ScenarioConfig, build_scenario
from mhdsim.state import ModelConfig, recover

N = 16
X1, X2 = spectral.grid_points(N)
S = 3


def zeros2():
    return np.zeros((2, N, N))


def test_energy_of_pure_time_derivative():
    e = energy_Es(np.zeros((N, N)), np.cos(X1), zeros2(), zeros2(), zeros2(), S)
    assert e == pytest.approx(2 ** (S - 0.5) * 2 * np.pi**2, rel=1e-12)


def test_energy_of_displacement_at_equilibrium():
    h = zeros2()
    h[0] = 1.0
    hh = zeros2()
    hh[1] = 1.0
    e = energy_Es(np.cos(X1), np.zeros((N, N)), zeros2(), h, hh, S)
    assert e == pytest.approx(0.5 * 2 ** (S - 0.5) * 2 * np.pi**2, rel=1e-12)


def test_standard_energy():
    e = energy_cal_Es(np.cos(X1), np.cos(X2), S)
    assert e == pytest.approx(2 * np.pi**2 * (2 ** (S + 0.5) + 2 ** (S - 0.5)), rel=1e-12)


def test_collinear_margin_is_zero():
    h = zeros2()
    h[0] = 1.0
    lam, lmin = stability_lambda(h, 2 * h)
    assert lmin == 0.0


@given(st.integers(0, 100_000))
def test_lambda_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    h, hh = rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2)
    _, lam = stability_lambda(h[:, None, None], hh[:, None, None])
    assert lam == pytest.approx(brute_force_lambda(h, hh), abs=1e-8)


def test_bulk_norm_of_constant_and_vertical_profile():
    s = sigma_strip(np.zeros((N, N)), Side.PLASMA, 12)
    assert bulk_hs_norm(np.ones(s.shape), s, 2.0) == pytest.approx(2 * np.pi, rel=1e-12)
    # x3 on (-1, 0): |x3|^2 = 4 pi^2 / 3, |d3 x3|^2 = 4 pi^2
    got = bulk_hs_norm(s.z, s, 1.0)
    assert got == pytest.approx(np.sqrt(4 * np.pi**2 / 3 + 4 * np.pi**2), rel=1e-10)


@pytest.fixture(scope="module")
def equilibrium_history():
    sc = build_scenario(ScenarioConfig("equilibrium"), ModelConfig(n=8, m=8))
    st_, recs = sc.state, [recover(sc.state, sc.model)]
    for _ in range(2):
        st_, _ = rk4_step(st_, 0.05, sc.model, recs[-1])
        recs.append(recover(st_, sc.model))
    return recs


def test_equilibrium_residuals_vanish(equilibrium_history):
    res = limit_residuals(equilibrium_history, 0.05)
    assert max(res.as_dict().values()) < 1e-10
    assert max(interface_residuals(equilibrium_history[0]).values()) < 1e-12
    assert max(divergence_persistence(equilibrium_history[-1]).values()) < 1e-10


def test_limit_residuals_need_three_samples(equilibrium_history):
    with pytest.raises(InsufficientHistory):
        limit_residuals(equilibrium_history[:2], 0.05)


def test_record_serialises_missing_values_as_null(equilibrium_history):
    rec = equilibrium_history[0]
    r = make_record(0, rec, 0.0, S, None)
    d = json.loads(json.dumps(r.as_dict()))
    assert d["w_norm"] is None and d["b_norm"] is None
    assert d["lambda_min"] == pytest.approx(1.0, abs=1e-12)
