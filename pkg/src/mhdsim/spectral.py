"""Pseudo-spectral operations on the horizontal torus T^2 = [0, 2pi)^2.

Interface fields are real arrays of shape ``(N, N)`` indexed ``[i1, i2]`` with
``x_i = 2 pi i / N``. Bulk fields carry extra trailing axes (vertical nodes,
then nothing else), so every routine here acts on axes ``(0, 1)`` and
broadcasts over the rest.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, InvalidField

__all__ = [
    "Wavenumbers",
    "wavenumbers",
    "check_interface_field",
    "grid_points",
    "to_modes",
    "from_modes",
    "derivative",
    "gradient",
    "bessel_potential",
    "hs_norm",
    "commutator",
    "mean",
    "mean_project",
    "dealias",
    "remove_nyquist",
    "inverse_laplacian",
    "evaluate_at",
]


def fft_workers() -> int:
    """Number of FFT worker threads, read from ``MHDSIM_THREADS``."""
    try:
        return max(1, int(os.environ.get("MHDSIM_THREADS", "1")))
    except ValueError:
        return 1


def _is_power_of_two(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Wavenumbers:
    """Integer wavenumbers in the ``rfft2`` layout for an ``N x N`` grid.

    Attributes
    ----------
    k1, k2 : ndarray
        Shapes ``(N, 1)`` and ``(1, N//2 + 1)``.
    ksq : ndarray
        ``k1**2 + k2**2`` with shape ``(N, N//2 + 1)``.
    odd_mask : ndarray
        False on Nyquist rows/columns, where odd derivatives are set to zero.
    """

    n: int
    k1: np.ndarray
    k2: np.ndarray
    ksq: np.ndarray
    odd_mask: np.ndarray


@lru_cache(maxsize=None)
def wavenumbers(n: int) -> Wavenumbers:
    if not _is_power_of_two(n):
        raise InvalidField(f"grid size {n} is not a power of two")
    k1 = (np.fft.fftfreq(n) * n).reshape(n, 1)
    k2 = np.arange(n // 2 + 1, dtype=float).reshape(1, n // 2 + 1)
    ksq = k1**2 + k2**2
    odd = (np.abs(k1) != n // 2) & (k2 != n // 2)
    for arr in (k1, k2, ksq, odd):
        arr.setflags(write=False)
    return Wavenumbers(n, k1, k2, ksq, odd)


def check_interface_field(values, n: int | None = None) -> np.ndarray:
    """Validate and return ``values`` as a float array of shape ``(N, N)``."""
    a = np.asarray(values, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidField(f"interface field must be square 2-D, got shape {a.shape}")
    if not _is_power_of_two(a.shape[0]):
        raise InvalidField(f"grid size {a.shape[0]} is not a power of two")
    if n is not None and a.shape[0] != n:
        raise GridMismatch(f"expected grid size {n}, got {a.shape[0]}")
    if not np.all(np.isfinite(a)):
        raise InvalidField("interface field contains non-finite values")
    return a


def grid_points(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Mesh ``(x1, x2)`` of shape ``(N, N)`` each, ``ij`` indexing."""
    x = 2.0 * np.pi * np.arange(n) / n
    return np.meshgrid(x, x, indexing="ij")


def _expand(mult: np.ndarray, ndim: int) -> np.ndarray:
    return mult.reshape(mult.shape + (1,) * (ndim - 2))


def to_modes(a: np.ndarray) -> np.ndarray:
    return sfft.rfft2(a, axes=(0, 1), workers=fft_workers())


def from_modes(ahat: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfft2(ahat, s=(n, n), axes=(0, 1), workers=fft_workers())


def _apply_multiplier(a: np.ndarray, mult: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    return from_modes(to_modes(a) * _expand(mult, a.ndim), n)


def derivative(a: np.ndarray, axis: int, order: int = 1) -> np.ndarray:
    """Spectral derivative of order ``order`` along horizontal ``axis`` (0 or 1).

    Odd derivatives drop the Nyquist mode so real input gives real output.
    """
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    if order == 0:
        return np.array(a, dtype=float)
    wk = wavenumbers(a.shape[0])
    k = wk.k1 if axis == 0 else wk.k2
    mult = (1j * k) ** order * np.ones_like(wk.ksq)
    if order % 2:
        mult = mult * wk.odd_mask
    return _apply_multiplier(a, mult)


def gradient(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Both horizontal derivatives from a single forward transform."""
    n = a.shape[0]
    wk = wavenumbers(n)
    ahat = to_modes(a)
    m1 = _expand(1j * wk.k1 * wk.odd_mask, a.ndim)
    m2 = _expand(1j * wk.k2 * wk.odd_mask, a.ndim)
    return from_modes(ahat * m1, n), from_modes(ahat * m2, n)


def sobolev_multiplier(n: int, sigma: float) -> np.ndarray:
    """Symbol ``(1 + |k|^2)^(sigma/2)`` of the Bessel potential."""
    return (1.0 + wavenumbers(n).ksq) ** (0.5 * sigma)


def bessel_potential(a: np.ndarray, sigma: float) -> np.ndarray:
    """Apply ``<grad>^sigma``."""
    return _apply_multiplier(a, sobolev_multiplier(a.shape[0], sigma))


def hs_norm(a: np.ndarray, sigma: float) -> float:
    """Discrete ``H^sigma(T^2)`` norm: L^2 norm of ``<grad>^sigma a``.

    Uses the trapezoid rule with cell area ``(2 pi / N)^2``.
    """
    a = check_interface_field(a)
    n = a.shape[0]
    g = bessel_potential(a, sigma)
    return float(np.sqrt(np.sum(g * g)) * (2.0 * np.pi / n))


def commutator(a: np.ndarray, u: np.ndarray, sigma: float) -> np.ndarray:
    """``a <grad>^sigma u - <grad>^sigma (a u)``."""
    if a.shape != u.shape:
        raise GridMismatch(f"shapes {a.shape} and {u.shape} differ")
    return a * bessel_potential(u, sigma) - bessel_potential(a * u, sigma)


def mean(a: np.ndarray) -> np.ndarray | float:
    """Horizontal average over T^2 (per trailing index for bulk arrays)."""
    m = np.mean(a, axis=(0, 1))
    return float(m) if np.ndim(m) == 0 else m


def mean_project(a: np.ndarray) -> np.ndarray:
    """Subtract the horizontal mean."""
    return a - np.mean(a, axis=(0, 1), keepdims=True)


@lru_cache(maxsize=None)
def _dealias_mask(n: int, fraction: float) -> np.ndarray:
    wk = wavenumbers(n)
    cut = np.floor(fraction * n / 2.0 + 1e-12)
    mask = (np.abs(wk.k1) <= cut) & (np.abs(wk.k2) <= cut)
    mask = mask & wk.odd_mask
    mask.setflags(write=False)
    return mask


def dealias(a: np.ndarray, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """Truncate modes with ``|k_i| > fraction * N / 2`` (square 2/3 rule)."""
    return _apply_multiplier(a, _dealias_mask(a.shape[0], float(fraction)).astype(float))


def remove_nyquist(a: np.ndarray) -> np.ndarray:
    return _apply_multiplier(a, wavenumbers(a.shape[0]).odd_mask.astype(float))


def inverse_laplacian(a: np.ndarray) -> np.ndarray:
    """Mean-free solution ``psi`` of ``Delta' psi = a - mean(a)``."""
    wk = wavenumbers(a.shape[0])
    ksq = wk.ksq.copy()
    ksq[0, 0] = 1.0
    mult = -1.0 / ksq
    mult[0, 0] = 0.0
    return _apply_multiplier(a, mult)


def evaluate_at(a: np.ndarray, x1, x2) -> np.ndarray:
    """Trigonometric interpolant of ``a`` at arbitrary points.

    ``a`` may have trailing axes; the result has shape ``x1.shape + a.shape[2:]``.
    Cost is O(N^2) per point, intended for diagnostics and tests.
    """
    n = a.shape[0]
    x1 = np.atleast_1d(np.asarray(x1, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    full = sfft.fft2(a, axes=(0, 1)) / (n * n)
    k = np.fft.fftfreq(n) * n
    # split Nyquist coefficients evenly so the interpolant stays real
    weights = np.ones(n)
    weights[n // 2] = 0.5
    kk = np.concatenate([k, [n // 2]])
    idx = np.concatenate([np.arange(n), [n // 2]])
    kk[n // 2] = -n // 2
    w = np.concatenate([weights, [0.5]])
    e1 = np.exp(1j * np.outer(x1.ravel(), kk)) * w
    e2 = np.exp(1j * np.outer(x2.ravel(), kk)) * w
    c = full[np.ix_(idx, idx)]
    out = np.einsum("pi,pj,ij...->p...", e1, e2, c)
    return out.real.reshape(x1.shape + a.shape[2:])
