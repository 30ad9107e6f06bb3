import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import curved_strip, node_coords
from mhdsim import spectral
from mhdsim.divcurl import (
    PlasmaDivCurlData,
    VacuumDivCurlData,
    curl_lift,
    div_free_project,
    smooth_cutoff,
    solve_plasma,
    solve_vacuum,
    wall_means,
)
from mhdsim.errors import CompatibilityError
from mhdsim.geometry import Side

N, M = 16, 16


def smooth_field(s, c=0.0, shift=0.3):
    x1, x2, x3 = node_coords(s)
    return np.stack(
        [
            np.sin(x2) * np.cos(x3) + shift,
            np.cos(x1) * np.exp(x3) - 0.2,
            (x3 - s.side.wall_height) * np.sin(x1 + x2) + c * np.cos(x1),
        ]
    )


def plasma_data(s, v):
    return PlasmaDivCurlData(s.div(v), s.curl(v), s.normal_component(v), wall_means(v, s))


def vacuum_data(s, v):
    current = np.stack([s.wall_trace(v[1]), -s.wall_trace(v[0])])
    return VacuumDivCurlData(s.div(v), s.curl(v), s.normal_component(v), current)


def test_plasma_round_trip(side):
    s = curved_strip(N, M, side)
    v = smooth_field(s)
    out = solve_plasma(plasma_data(s, v), s)
    assert np.max(np.abs(out - v)) < 1e-7


def test_vacuum_round_trip():
    s = curved_strip(N, M, Side.VACUUM)
    v = smooth_field(s, c=0.2)
    out = solve_vacuum(vacuum_data(s, v), s)
    assert np.max(np.abs(out - v)) < 1e-7


def test_zero_data_give_zero_fields():
    s = curved_strip(N, M, Side.PLASMA)
    zero = np.zeros(s.shape)
    out = solve_plasma(PlasmaDivCurlData(zero, np.zeros((3,) + s.shape), np.zeros((N, N)), np.zeros(2)), s)
    assert np.max(np.abs(out)) == 0.0
    sv = curved_strip(N, M, Side.VACUUM)
    out = solve_vacuum(VacuumDivCurlData(np.zeros(sv.shape), np.zeros((3,) + sv.shape), np.zeros((N, N)), np.zeros((2, N, N))), sv)
    assert np.max(np.abs(out)) == 0.0


def test_curl_lift(side):
    s = curved_strip(N, M, side)
    om = s.curl(smooth_field(s))
    w = curl_lift(om, s)
    assert np.max(np.abs(w[2])) == 0.0
    assert np.max(np.abs(s.curl(w) - om)) < 1e-7


def test_non_solenoidal_vorticity_rejected():
    s = curved_strip(N, M, Side.PLASMA)
    v = smooth_field(s)
    data = plasma_data(s, v)
    x1, x2, x3 = node_coords(s)
    data.omega[2] += x3**2
    with pytest.raises(CompatibilityError):
        solve_plasma(data, s)


def test_flux_mismatch_rejected():
    s = curved_strip(N, M, Side.PLASMA)
    data = plasma_data(s, smooth_field(s))
    data.theta += 0.1
    with pytest.raises(CompatibilityError):
        solve_plasma(data, s)


def test_vacuum_current_mismatch_rejected():
    s = curved_strip(N, M, Side.VACUUM)
    data = vacuum_data(s, smooth_field(s, c=0.2))
    x1, _ = spectral.grid_points(N)
    data.current[0] += np.sin(x1)
    with pytest.raises(CompatibilityError):
        solve_vacuum(data, s)


@settings(max_examples=5)
@given(st.integers(0, 10_000))
def test_projection_is_idempotent_and_solenoidal(seed):
    rng = np.random.default_rng(seed)
    s = curved_strip(N, M, Side.PLASMA)
    x1, x2, x3 = node_coords(s)
    a, b = rng.uniform(-1, 1, 2)
    w = np.stack([a * np.sin(x2 + x3), b * np.cos(x1) * x3, np.sin(x1 - x2) * x3**2])
    p = div_free_project(w, s)
    d = s.div(p)[..., 1:-1]
    assert np.max(np.abs(d)) < 1e-6
    assert np.max(np.abs(div_free_project(p, s) - p)) < 1e-7


def test_smooth_cutoff_profile():
    x = np.linspace(-1, 2, 31)
    c = smooth_cutoff(x, 0.0, 1.0)
    assert np.all(c[x <= 0] == 0) and np.all(c[x >= 1] == 1)
    assert np.all(np.diff(c) >= 0)
