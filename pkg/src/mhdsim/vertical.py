"""Chebyshev-Lobatto discretisation of the vertical reference coordinate.

Nodes are ``r_j = cos(pi j / M)`` for ``j = 0..M``, so ``r_0 = +1`` and
``r_M = -1``. Bulk arrays carry the vertical index on their last axis.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as npcheb

__all__ = ["Chebyshev", "chebyshev"]


@dataclass(frozen=True, eq=False)
class Chebyshev:
    """Vertical operators on ``M + 1`` Lobatto nodes.

    Attributes
    ----------
    r : ndarray
        Nodes, descending from +1 to -1.
    D, D2 : ndarray
        First and second differentiation matrices.
    weights : ndarray
        Clenshaw-Curtis quadrature weights on [-1, 1].
    cumulative : ndarray
        ``(Q u)_j = int_{-1}^{r_j} u dr`` for the polynomial interpolant.
    """

    m: int
    r: np.ndarray
    D: np.ndarray
    D2: np.ndarray
    weights: np.ndarray
    cumulative: np.ndarray
    bary: np.ndarray

    def diff(self, u: np.ndarray) -> np.ndarray:
        """Apply ``D`` along the last axis."""
        return u @ self.D.T

    def integrate_from_bottom(self, u: np.ndarray) -> np.ndarray:
        return u @ self.cumulative.T

    def integrate_from_top(self, u: np.ndarray) -> np.ndarray:
        total = u @ self.weights
        return u @ self.cumulative.T - total[..., None]

    def quad(self, u: np.ndarray) -> np.ndarray:
        return u @ self.weights

    def interpolate(self, u: np.ndarray, r) -> np.ndarray:
        """Barycentric interpolation along the last axis at points ``r``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        diff = r[:, None] - self.r[None, :]
        exact = np.isclose(diff, 0.0, rtol=0.0, atol=1e-15)
        diff[exact] = 1.0
        c = self.bary[None, :] / diff
        hit = exact.any(axis=1)
        c[hit] = exact[hit].astype(float)
        c = c / c.sum(axis=1, keepdims=True)
        return u @ c.T


def _diff_matrix(m: int) -> np.ndarray:
    j = np.arange(m + 1)
    c = np.ones(m + 1)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    ii, jj = np.meshgrid(j, j, indexing="ij")
    # x_i - x_j via a product of sines avoids cancellation
    dx = 2.0 * np.sin(np.pi * (ii + jj) / (2 * m)) * np.sin(np.pi * (jj - ii) / (2 * m))
    np.fill_diagonal(dx, 1.0)
    d = np.outer(c, 1.0 / c) / dx
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


def _clenshaw_curtis(m: int) -> np.ndarray:
    theta = np.pi * np.arange(m + 1) / m
    w = np.zeros(m + 1)
    v = np.ones(m - 1)
    inner = slice(1, m)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m * m - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(m * theta[inner]) / (m * m - 1)
    else:
        w[0] = w[m] = 1.0 / (m * m)
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2.0 * v / m
    return w


def _cumulative_matrix(m: int, r: np.ndarray) -> np.ndarray:
    vander = npcheb.chebvander(r, m)
    to_coef = np.linalg.inv(vander)
    q = np.zeros((m + 1, m + 1))
    for k in range(m + 1):
        e = np.zeros(m + 1)
        e[k] = 1.0
        q[:, k] = npcheb.chebval(r, npcheb.chebint(e, lbnd=-1.0))
    return q @ to_coef


@lru_cache(maxsize=None)
def chebyshev(m: int) -> Chebyshev:
    """Cached vertical toolkit with ``m`` intervals (``m + 1`` nodes)."""
    if m < 2:
        raise ValueError("need at least 2 vertical intervals")
    r = np.cos(np.pi * np.arange(m + 1) / m)
    d = _diff_matrix(m)
    d2 = d @ d
    w = _clenshaw_curtis(m)
    q = _cumulative_matrix(m, r)
    bary = (-1.0) ** np.arange(m + 1)
    bary[0] *= 0.5
    bary[-1] *= 0.5
    for arr in (r, d, d2, w, q, bary):
        arr.setflags(write=False)
    return Chebyshev(m, r, d, d2, w, q, bary)
