"""The L_p maximum-entropy family.

For a fixed L_p norm ``mu`` the density with the largest differential entropy is

    f(x) = exp(-|x|^p / (p mu^p)) / (2 Gamma((p+1)/p) p^(1/p) mu)

which is Laplace at p=1, Gaussian at p=2 and, in the limit p -> inf, uniform on
[-mu, mu]. The p=inf member is handled on its own code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special


class _Infinity:
    """Sentinel for the p = infinity exponent (esssup norm)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()

PExponent = Union[float, _Infinity]


class EmptyInputError(ValueError):
    """Raised when an operation needs at least one sample and got none."""


def as_exponent(p) -> PExponent:
    """Normalize ``p`` to a valid exponent.

    Accepts numbers >= 1, the INFINITY sentinel, ``math.inf`` and the strings
    ``"inf"``/``"infinity"``. Infinite inputs always come back as INFINITY.
    """
    if p is INFINITY:
        return INFINITY
    if isinstance(p, str):
        s = p.strip().lower()
        if s in ("inf", "infinity", "∞"):
            return INFINITY
        p = float(s)
    p = float(p)
    if math.isinf(p) and p > 0:
        return INFINITY
    if not math.isfinite(p) or p < 1.0:
        raise ValueError(f"exponent p must be >= 1 or INFINITY, got {p!r}")
    return p


def is_infinite(p: PExponent) -> bool:
    return p is INFINITY


def format_exponent(p: PExponent) -> str:
    return "inf" if p is INFINITY else f"{p:g}"


def _log2_gamma_constant(p: float) -> float:
    # log2 of 2 Gamma((p+1)/p) (p e)^(1/p)
    return float(math.log(2.0) + special.gammaln(1.0 + 1.0 / p) + (math.log(p) + 1.0) / p) / math.log(2.0)


def entropy_constant(p: PExponent) -> float:
    """The denominator 2 Gamma((p+1)/p) (p e)^(1/p); equals 2 at p = INFINITY."""
    p = as_exponent(p)
    if p is INFINITY:
        return 2.0
    return 2.0 ** _log2_gamma_constant(p)


@dataclass(frozen=True)
class MaxEntDensity:
    """Member of the L_p max-ent family with exponent ``p`` and scale ``mu``."""

    p: PExponent
    mu: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "p", as_exponent(self.p))
        mu = float(self.mu)
        if not (math.isfinite(mu) and mu > 0):
            raise ValueError(f"mu must be positive and finite, got {self.mu!r}")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "MaxEntDensity":
        return cls(2.0, sigma)

    @classmethod
    def laplace(cls, scale: float = 1.0) -> "MaxEntDensity":
        return cls(1.0, scale)

    @classmethod
    def uniform(cls, half_width: float = 1.0) -> "MaxEntDensity":
        return cls(INFINITY, half_width)

    @property
    def variance(self) -> float:
        """E[x^2] = mu^2 p^(2/p) Gamma(3/p) / Gamma(1/p); mu^2/3 for the uniform."""
        if self.p is INFINITY:
            return self.mu**2 / 3.0
        p = self.p
        log_ratio = float(special.gammaln(3.0 / p) - special.gammaln(1.0 / p))
        return self.mu**2 * math.exp(2.0 / p * math.log(p) + log_ratio)

    def pdf(self, x):
        return pdf(x, self)

    def cdf(self, x):
        return cdf(x, self)

    def entropy(self) -> float:
        return entropy_closed_form(self)

    def sample(self, n: int, seed=None) -> np.ndarray:
        return sample(self, n, seed)


def pdf(x, d: MaxEntDensity):
    """Density of ``d`` at ``x`` (scalar or array)."""
    x = np.asarray(x, dtype=float)
    if d.p is INFINITY:
        out = np.where(np.abs(x) <= d.mu, 0.5 / d.mu, 0.0)
    else:
        p, mu = d.p, d.mu
        log_norm = math.log(2.0) + float(special.gammaln(1.0 + 1.0 / p)) + math.log(p) / p + math.log(mu)
        out = np.exp(-np.abs(x) ** p / (p * mu**p) - log_norm)
    return out[()] if out.ndim == 0 else out


def cdf(x, d: MaxEntDensity):
    """Closed-form CDF; regularized incomplete gamma for finite p."""
    x = np.asarray(x, dtype=float)
    if d.p is INFINITY:
        out = np.clip((x + d.mu) / (2.0 * d.mu), 0.0, 1.0)
    else:
        p, mu = d.p, d.mu
        tail = special.gammainc(1.0 / p, np.abs(x) ** p / (p * mu**p))
        out = 0.5 + 0.5 * np.sign(x) * tail
    return out[()] if out.ndim == 0 else out


def entropy_closed_form(d: MaxEntDensity) -> float:
    """Differential entropy of ``d`` in bits: log2[2 Gamma((p+1)/p) (p e)^(1/p) mu]."""
    if d.p is INFINITY:
        return math.log2(2.0 * d.mu)
    return _log2_gamma_constant(d.p) + math.log2(d.mu)


def mu_from_entropy(h: float, p) -> float:
    """Scale of the family member with entropy ``h`` bits (inverse of entropy_closed_form)."""
    p = as_exponent(p)
    if p is INFINITY:
        return 2.0 ** (h - 1.0)
    return 2.0 ** (h - _log2_gamma_constant(p))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample(d: MaxEntDensity, n: int, seed=None) -> np.ndarray:
    """Draw ``n`` i.i.d. samples from ``d``.

    Finite p uses the gamma transform: |x|^p / (p mu^p) ~ Gamma(1/p, 1), so
    |x| = mu (p G)^(1/p) with an independent random sign. p = INFINITY draws
    uniform on [-mu, mu].

    ``seed`` may be an int, a SeedSequence or an existing Generator.
    """
    n = int(n)
    if n < 1:
        raise EmptyInputError("sample size must be at least 1")
    rng = _rng(seed)
    if d.p is INFINITY:
        return rng.uniform(-d.mu, d.mu, size=n)
    p = d.p
    g = rng.standard_gamma(1.0 / p, size=n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return sign * d.mu * (p * g) ** (1.0 / p)
