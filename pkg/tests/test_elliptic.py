import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import curved_strip, node_coords
from mhdsim import spectral
from mhdsim.elliptic import (
    EllipticProblem,
    dn_bar,
    dn_operator,
    gmres,
    harmonic_extension,
    harmonic_extension_hat,
    quadratic_source,
    solve,
)
from mhdsim.errors import EllipticDivergence, IncompatibleData
from mhdsim.geometry import Side, sigma_strip

N, M = 16, 16


def exact(x1, x2, x3):
    return np.cos(x1) * np.cosh(x3) + np.sin(2 * x3) * np.cos(x2)


def exact_grad3(x1, x2, x3):
    return np.cos(x1) * np.sinh(x3) + 2 * np.cos(2 * x3) * np.cos(x2)


def exact_lap(x1, x2, x3):
    return -5 * np.sin(2 * x3) * np.cos(x2)


@pytest.mark.parametrize("kinds", [("dirichlet", "dirichlet"), ("dirichlet", "neumann"), ("neumann", "dirichlet")])
def test_manufactured_solution(side, kinds):
    s = curved_strip(N, M, side)
    x1, x2, x3 = node_coords(s)
    u = exact(x1, x2, x3)
    ik, wk = kinds
    idata = s.trace(u) if ik == "dirichlet" else s.conormal(u)
    wdata = s.wall_trace(u) if wk == "dirichlet" else s.wall_trace(exact_grad3(x1, x2, x3))
    sol = solve(EllipticProblem(s, exact_lap(x1, x2, x3), ik, idata, wk, wdata))
    assert np.max(np.abs(sol.field - u)) < 1e-7


def test_pure_neumann_fixes_wall_mean():
    s = curved_strip(N, M, Side.PLASMA)
    x1, x2, x3 = node_coords(s)
    u = exact(x1, x2, x3)
    wdata = s.wall_trace(exact_grad3(x1, x2, x3))
    sol = solve(EllipticProblem(s, exact_lap(x1, x2, x3), "neumann", s.conormal(u), "neumann", wdata))
    shift = spectral.mean(s.wall_trace(u)) - spectral.mean(s.wall_trace(sol.field))
    assert np.max(np.abs(sol.field + shift - u)) < 1e-7


def test_incompatible_neumann_data_rejected():
    s = sigma_strip(np.zeros((N, N)), Side.PLASMA, M)
    zero = np.zeros((N, N))
    with pytest.raises(IncompatibleData):
        solve(EllipticProblem(s, np.ones(s.shape), "neumann", zero, "neumann", zero))


def test_zero_data_gives_exact_zero():
    s = curved_strip(N, M, Side.VACUUM)
    zero = np.zeros((N, N))
    sol = solve(EllipticProblem(s, np.zeros(s.shape), "dirichlet", zero, "neumann", zero))
    assert not np.any(sol.field) and sol.iterations == 0


def test_unknown_boundary_kind():
    s = sigma_strip(np.zeros((N, N)), Side.PLASMA, M)
    with pytest.raises(ValueError):
        EllipticProblem(s, np.zeros(s.shape), "robin", 0.0, "neumann", 0.0)


def test_iteration_cap_raises():
    s = curved_strip(N, M, Side.PLASMA, amp=0.3)
    x1, x2, x3 = node_coords(s)
    u = exact(x1, x2, x3)
    prob = EllipticProblem(s, exact_lap(x1, x2, x3), "dirichlet", s.trace(u), "dirichlet", s.wall_trace(u))
    with pytest.raises(EllipticDivergence):
        solve(prob, tol=1e-14, max_iter=2)


def test_gmres_solves_small_system():
    rng = np.random.default_rng(3)
    a = np.eye(20) * 4 + rng.standard_normal((20, 20)) * 0.3
    b = rng.standard_normal(20)
    x, rel, its = gmres(lambda v: a @ v, lambda v: v, b, tol=1e-12)
    assert np.allclose(a @ x, b, atol=1e-10)


@pytest.mark.parametrize("k", [1, 3, 6])
def test_flat_dn_symbol(k):
    f0 = -0.25
    s = sigma_strip(np.full((N, N), f0), Side.PLASMA, 24)
    x1, _ = spectral.grid_points(N)
    g = dn_operator(np.cos(k * x1), s)
    depth = f0 + 1.0
    assert np.allclose(g, k * np.tanh(k * depth) * np.cos(k * x1), atol=1e-9)


def _random_trace(seed, n=N):
    # modes with |k| <= 4
    rng = np.random.default_rng(seed)
    return spectral.dealias(rng.standard_normal((n, n)), 8 / n)


@given(st.integers(0, 10_000), st.sampled_from([Side.PLASMA, Side.VACUUM]))
def test_dn_is_symmetric_and_nonnegative(seed, side):
    n = 32
    s = curved_strip(n, 24, side)
    a, b = _random_trace(seed, n), _random_trace(seed + 1, n)
    ga, gb = dn_operator(a, s), dn_operator(b, s)
    cell = (2 * np.pi / n) ** 2
    ab, ba = np.sum(a * gb) * cell, np.sum(b * ga) * cell
    assert ab == pytest.approx(ba, rel=1e-9, abs=1e-9)
    assert np.sum(a * ga) * cell >= -1e-9


def test_dn_annihilates_constants():
    s = curved_strip(N, M, Side.PLASMA)
    assert np.max(np.abs(dn_operator(np.ones((N, N)), s))) < 1e-9


def test_harmonic_extension_hat_of_harmonic_field_is_itself():
    s = curved_strip(32, M, Side.VACUUM)
    x1, x2, x3 = node_coords(s)
    q = np.cos(x1) * np.cosh(x3)
    # harmonic data reproduces itself, so dn_bar reduces to the plasma side
    assert np.max(np.abs(harmonic_extension_hat(q, s) - q)) < 1e-7
    p = curved_strip(32, M, Side.PLASMA)
    out = dn_bar(q, s, p)
    expected = -s.conormal(q) - dn_operator(s.trace(q), p)
    assert np.max(np.abs(out - expected)) < 1e-7


def test_harmonic_extension_boundary_values():
    s = curved_strip(N, M, Side.PLASMA)
    psi = _random_trace(7)
    u = harmonic_extension(psi, s)
    assert np.allclose(s.trace(u), psi, atol=1e-12)
    assert np.max(np.abs(s.wall_derivative(u))) < 1e-8


def test_quadratic_source_of_linear_field():
    s = curved_strip(N, M, Side.PLASMA)
    x1, x2, x3 = node_coords(s)
    v = np.stack([x3, np.zeros_like(x3), np.zeros_like(x3)])
    w = np.stack([np.zeros_like(x3), np.zeros_like(x3), x1 * 0 + 1.0 * np.sin(x1)])
    # -d_j v_i d_i w_j : only d_3 v_1 d_1 w_3 = cos(x1)
    assert np.allclose(quadratic_source(s, v, w), -np.cos(x1), atol=1e-8)
