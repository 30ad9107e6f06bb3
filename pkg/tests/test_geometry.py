import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import curved_strip, node_coords
from mhdsim import spectral
from mhdsim.errors import DegenerateMap, GapViolation, GridMismatch
from mhdsim.geometry import (
    Side,
    build_interface,
    harmonic_coordinate_map,
    identity_map,
    pull_back,
    push_forward,
    sigma_strip,
)

N, M = 16, 16


def test_side_rows_and_walls():
    assert Side.PLASMA.iface_row(8) == 0 and Side.PLASMA.wall_row(8) == 8
    assert Side.VACUUM.iface_row(8) == 8 and Side.VACUUM.wall_row(8) == 0
    assert Side.PLASMA.wall_height == -1.0 and Side.VACUUM.wall_height == 1.0


def test_boundary_rows_hold_interface_and_wall(side):
    s = curved_strip(N, M, side)
    assert np.allclose(s.wall_trace(s.z), side.wall_height)
    assert np.allclose(s.trace(s.z), s.f)


def test_derivatives_exact_on_smooth_field(side):
    s = curved_strip(N, M, side)
    x1, x2, x3 = node_coords(s)
    u = np.sin(x1 + x2) * np.exp(0.5 * x3)
    d1, d2, d3 = s.partials(u)
    assert np.allclose(d1, np.cos(x1 + x2) * np.exp(0.5 * x3), atol=1e-7)
    assert np.allclose(d2, np.cos(x1 + x2) * np.exp(0.5 * x3), atol=1e-7)
    assert np.allclose(d3, 0.5 * u, atol=1e-7)


def test_laplacian_of_harmonic_function_vanishes(side):
    s = curved_strip(N, M, side)
    x1, x2, x3 = node_coords(s)
    u = np.cos(x1) * np.cosh(x3)
    lap = s.laplacian(u)
    assert np.max(np.abs(lap)) < 1e-6


def test_curl_of_gradient_and_div_of_curl(side):
    s = curved_strip(N, M, side)
    x1, x2, x3 = node_coords(s)
    phi = np.sin(x1 - x2) * x3**2
    assert np.max(np.abs(s.curl(s.grad(phi)))) < 1e-7
    v = np.stack([np.cos(x2) * x3, np.sin(x1) * x3**2, np.cos(x1 + x2)])
    assert np.max(np.abs(s.div(s.curl(v)))) < 1e-7


def test_conormal_matches_normal_dot_gradient(side):
    s = curved_strip(N, M, side)
    x1, x2, x3 = node_coords(s)
    u = np.sin(x1) * x3
    g = s.grad(u)
    assert np.allclose(s.conormal(u), s.normal_component(g), atol=1e-12)


def test_volume_of_layer():
    s = curved_strip(N, M, Side.PLASMA)
    # plasma volume is the integral of f + 1 over the torus
    expected = s.surface_integral(s.f + 1.0)
    assert s.integrate(np.ones(s.shape)) == pytest.approx(expected, rel=1e-12)


def test_gap_violation():
    f = np.full((N, N), 0.95)
    with pytest.raises(GapViolation):
        build_interface(f, 0.1)
    build_interface(np.full((N, N), 0.85), 0.1)


def test_non_monotone_heights_rejected():
    s = sigma_strip(np.zeros((N, N)), Side.PLASMA, M)
    with pytest.raises(DegenerateMap):
        type(s)(s.z[..., ::-1].copy(), Side.PLASMA)


def test_bad_shape_rejected():
    with pytest.raises(GridMismatch):
        sigma_strip(np.zeros((N, N)), Side.PLASMA, M).check(np.zeros((N, N, M)))


def test_harmonic_map_is_identity_on_reference():
    x1, x2 = spectral.grid_points(N)
    f = 0.1 * np.cos(x1 + x2)
    ref = sigma_strip(f, Side.PLASMA, M)
    cmap = harmonic_coordinate_map(f, ref)
    assert np.max(np.abs(cmap.jac_det - 1.0)) < 1e-12 or np.allclose(cmap.geom.z, ref.z, atol=1e-9)


def test_harmonic_map_heights_are_harmonic_in_reference():
    x1, x2 = spectral.grid_points(N)
    f = 0.1 * np.cos(x1)
    ref = sigma_strip(np.zeros((N, N)), Side.VACUUM, M)
    cmap = harmonic_coordinate_map(f, ref)
    lap = ref.laplacian(cmap.geom.z)
    lap[..., [ref.iface, ref.wall]] = 0.0
    assert np.max(np.abs(lap)) < 1e-8
    # exact solution y3 + f(x1) sinh(1 - y3) / sinh(1)
    y3 = ref.z
    exact = y3 + 0.1 * np.cos(x1)[..., None] * np.sinh(1.0 - y3) / np.sinh(1.0)
    assert np.allclose(cmap.geom.z, exact, atol=1e-9)


def test_degenerate_map_on_large_steep_interface():
    x1, _ = spectral.grid_points(N)
    f = 0.85 * np.cos(4 * x1)
    ref = sigma_strip(np.zeros((N, N)), Side.PLASMA, M)
    with pytest.raises(DegenerateMap):
        harmonic_coordinate_map(f, ref, jac_floor=0.5)


def test_identity_map():
    ref = sigma_strip(np.zeros((N, N)), Side.PLASMA, M)
    cmap = identity_map(ref)
    assert np.allclose(cmap.jac_det, 1.0)


@given(st.integers(0, 10_000))
def test_push_forward_of_pull_back(seed):
    rng = np.random.default_rng(seed)
    x1, x2 = spectral.grid_points(N)
    f = 0.1 * np.cos(x1 - x2)
    ref = sigma_strip(np.zeros((N, N)), Side.PLASMA, M)
    cmap = harmonic_coordinate_map(f, ref)

    def func(a, b, c):
        return np.sin(a) * np.cos(b) * np.exp(0.3 * c)

    u = pull_back(func, cmap)
    p1, p2 = rng.uniform(0, 2 * np.pi, 2)
    top = 0.1 * np.cos(p1 - p2)
    p3 = rng.uniform(-1.0, top)
    val = push_forward(u, cmap, [[p1, p2, p3]])[0]
    assert val == pytest.approx(func(p1, p2, p3), abs=1e-8)
