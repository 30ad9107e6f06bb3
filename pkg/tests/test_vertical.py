import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mhdsim.vertical import chebyshev


@pytest.mark.parametrize("m", [4, 8, 16, 32])
def test_nodes_descend_from_one(m):
    c = chebyshev(m)
    assert c.r[0] == pytest.approx(1.0) and c.r[-1] == pytest.approx(-1.0)
    assert np.all(np.diff(c.r) < 0)


@given(st.integers(4, 24), st.integers(0, 10_000))
def test_differentiation_exact_on_polynomials(m, seed):
    c = chebyshev(m)
    coef = np.random.default_rng(seed).standard_normal(m + 1)
    p = np.polynomial.Polynomial(coef)
    scale = 1.0 + np.abs(p.deriv()(c.r)).max()
    assert np.allclose(c.diff(p(c.r)), p.deriv()(c.r), atol=1e-9 * scale)


@given(st.integers(4, 24), st.integers(0, 10_000))
def test_quadrature_and_cumulative_integral(m, seed):
    c = chebyshev(m)
    coef = np.random.default_rng(seed).standard_normal(m + 1)
    p = np.polynomial.Polynomial(coef)
    anti = p.integ()
    assert c.quad(p(c.r)) == pytest.approx(anti(1.0) - anti(-1.0), abs=1e-11)
    assert np.allclose(c.integrate_from_bottom(p(c.r)), anti(c.r) - anti(-1.0), atol=1e-11)
    assert np.allclose(c.integrate_from_top(p(c.r)), anti(c.r) - anti(1.0), atol=1e-11)


def test_integration_inverts_differentiation():
    c = chebyshev(16)
    u = np.exp(c.r) * np.sin(2 * c.r)
    back = c.integrate_from_bottom(c.diff(u)) + u[-1]
    assert np.allclose(back, u, atol=1e-12)


def test_interpolation_of_smooth_function():
    c = chebyshev(24)
    pts = np.linspace(-1, 1, 37)
    assert np.allclose(c.interpolate(np.cos(3 * c.r), pts), np.cos(3 * pts), atol=1e-12)
    # node hits return the node value
    assert c.interpolate(np.cos(3 * c.r), c.r[5])[0] == pytest.approx(np.cos(3 * c.r[5]))
