"""Power spectra of stationary Gaussian AR models and the Szego entropy-rate integral."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .maxent import INFINITY, MaxEntDensity

DEFAULT_GRID = 2**12
SPECTRAL_FLOOR = 1e-12
HALF_LOG2_2PIE = 0.5 * math.log2(2.0 * math.pi * math.e)


class StabilityError(ValueError):
    """AR polynomial has a root on or outside the unit circle."""


class SpectralSingularityError(ValueError):
    """Spectrum touches zero, so the log integrand diverges."""


class UnsupportedFamilyError(ValueError):
    pass


def frequency_grid(m: int) -> np.ndarray:
    """``m`` uniformly spaced frequencies on [-pi, pi)."""
    return -math.pi + 2.0 * math.pi * np.arange(m) / m


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ValueError("grid and values must be 1-d arrays of equal length")
        if np.any(self.values < 0):
            raise ValueError("power spectrum must be nonnegative")

    def at(self, omega: float) -> float:
        """Value at the grid point nearest ``omega``."""
        m = self.grid.size
        i = int(round((omega + math.pi) * m / (2.0 * math.pi))) % m
        return float(self.values[i])

    def scaled(self, c: float) -> "SpectralDensity":
        return SpectralDensity(self.grid, self.values * c)

    def is_even(self, atol: float = 1e-9) -> bool:
        # index 0 is -pi; the mirror of index i > 0 is m - i
        v = self.values
        return bool(np.allclose(v[1:], v[1:][::-1], rtol=0.0, atol=atol * max(1.0, v.max())))


@dataclass(frozen=True, eq=False)
class AutocovarianceSequence:
    values: np.ndarray

    def __getitem__(self, lag):
        return self.values[lag]

    def __len__(self):
        return self.values.size

    def is_valid(self) -> bool:
        r = self.values
        return bool(r[0] >= 0 and np.all(np.abs(r) <= r[0] * (1 + 1e-12)))


@dataclass(frozen=True)
class NegentropyRate:
    value: float
    family: str


def check_stable(ar_coeffs) -> np.ndarray:
    a = np.asarray(ar_coeffs, dtype=float).ravel()
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("AR coefficients must be finite")
    if a.size:
        # roots of z^q - a_1 z^(q-1) - ... - a_q
        roots = np.roots(np.concatenate([[1.0], -a]))
        if np.any(np.abs(roots) >= 1.0):
            raise StabilityError(f"AR polynomial is not stable (max |root| = {np.abs(roots).max():.6g})")
    return a


def ar_spectrum(ar_coeffs, noise_sigma: float = 1.0, grid_size: int = DEFAULT_GRID):
    """Rational spectrum sigma^2 / |1 - sum_i a_i e^{-j w i}|^2 and its autocovariance.

    Returns ``(SpectralDensity, AutocovarianceSequence)``; the autocovariance is the
    inverse transform on the same grid (lags 0 .. grid_size/2).
    """
    a = check_stable(ar_coeffs)
    if not noise_sigma > 0:
        raise ValueError("noise_sigma must be positive")
    w = frequency_grid(grid_size)
    lags = np.arange(1, a.size + 1)
    transfer = 1.0 - (a[None, :] * np.exp(-1j * np.outer(w, lags))).sum(axis=1) if a.size else np.ones_like(w)
    s = noise_sigma**2 / np.abs(transfer) ** 2
    spec = SpectralDensity(w, s)
    return spec, autocovariance(spec)


def autocovariance(spec: SpectralDensity) -> AutocovarianceSequence:
    """R(k) = (1/2pi) int S(w) e^{jwk} dw on the grid."""
    m = spec.values.size
    # reorder to start at w = 0 so the FFT phase is trivial
    r = np.fft.ifft(np.fft.ifftshift(spec.values)).real
    return AutocovarianceSequence(r[: m // 2 + 1].copy())


def ar_autocovariance(ar_coeffs, noise_sigma: float, max_lag: int) -> np.ndarray:
    """Exact stationary autocovariance R(0..max_lag) of a Gaussian AR model.

    Solves the Yule-Walker system for R(0..q) and extends it by the AR recursion.
    """
    a = check_stable(ar_coeffs)
    q = a.size
    if q == 0:
        r = np.zeros(max_lag + 1)
        r[0] = noise_sigma**2
        return r
    # R(k) - sum_i a_i R(|k-i|) = sigma^2 [k == 0], k = 0..q
    m = np.zeros((q + 1, q + 1))
    for k in range(q + 1):
        m[k, k] += 1.0
        for i in range(1, q + 1):
            m[k, abs(k - i)] -= a[i - 1]
    rhs = np.zeros(q + 1)
    rhs[0] = noise_sigma**2
    base = np.linalg.solve(m, rhs)
    r = np.zeros(max(max_lag, q) + 1)
    r[: q + 1] = base
    for k in range(q + 1, r.size):
        r[k] = np.dot(a, r[k - 1 :: -1][:q])
    return r[: max_lag + 1]


def szego_entropy_rate(spec: SpectralDensity, floor: float = SPECTRAL_FLOOR) -> float:
    """(1/2pi) int log2 sqrt(2 pi e S(w)) dw in bits.

    The periodic trapezoid rule on a uniform grid is the grid mean; numpy's
    pairwise summation keeps it reproducible.
    """
    s = spec.values
    if np.any(s <= floor):
        raise SpectralSingularityError(f"spectrum falls to {s.min():.3g}, below the floor {floor:g}")
    return HALF_LOG2_2PIE + 0.5 * float(np.mean(np.log2(s)))


def negentropy_rate_iid(marginal) -> NegentropyRate:
    """Negentropy rate of an i.i.d. process: 1/2 log2(2 pi e var) - h(marginal).

    Only the max-ent family (closed-form entropy and variance) is supported.
    """
    if not isinstance(marginal, MaxEntDensity):
        raise UnsupportedFamilyError(f"no closed-form entropy for {type(marginal).__name__}")
    if marginal.p == 2.0:
        return NegentropyRate(0.0, "gaussian")
    var = marginal.variance
    if not (math.isfinite(var) and var > 0):
        raise ValueError("marginal variance must be finite and positive")
    j = 0.5 * math.log2(2.0 * math.pi * math.e * var) - marginal.entropy()
    tag = "iid-uniform" if marginal.p is INFINITY else f"iid-maxent-p{marginal.p:g}"
    return NegentropyRate(max(0.0, float(j)), tag)


def white_spectrum(variance: float, grid_size: int = DEFAULT_GRID) -> SpectralDensity:
    w = frequency_grid(grid_size)
    return SpectralDensity(w, np.full(grid_size, float(variance)))
