"""Empirical L_p norms and nearest-neighbour information estimators.

Entropies use the Kozachenko-Leonenko estimator, mutual information the
Kraskov-Stoegbauer-Grassberger (KSG, algorithm 1) estimator. Both work in the
max-norm, so the unit ball in d dimensions has volume 2^d. Everything is
reported in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats
from scipy.spatial import cKDTree

from .maxent import INFINITY, EmptyInputError, MaxEntDensity, as_exponent, cdf

LN2 = math.log(2.0)
DEFAULT_K = 4
# fraction of points allowed to sit at zero distance from their k-th neighbour
DEGENERATE_FRACTION = 0.01


class DegenerateSampleError(ValueError):
    """Too many coincident points (or a constant column) for a log-distance estimator."""


@dataclass(frozen=True)
class InfoEstimate:
    value: float
    n_used: int
    k_neighbors: int
    method: str

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class GofResult:
    ks_distance: float
    n: int


def _as_samples(s) -> np.ndarray:
    x = np.asarray(s, dtype=float).ravel()
    if x.size == 0:
        raise EmptyInputError("empty sample")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    return x


def _as_matrix(e) -> np.ndarray:
    a = np.asarray(e, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError("expected an (N, d) ensemble matrix")
    if a.shape[0] == 0 or a.shape[1] == 0:
        raise EmptyInputError("empty ensemble matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("ensemble values must be finite")
    return a


def empirical_lp_norm(s, p, quantile: float = 1.0) -> float:
    """(mean |x|^p)^(1/p); for p = INFINITY the ``quantile`` of |x| (default: max).

    The p = INFINITY value estimates an essential supremum from below.
    """
    x = np.abs(_as_samples(s))
    p = as_exponent(p)
    if p is INFINITY:
        if quantile >= 1.0:
            return float(x.max())
        return float(np.quantile(x, quantile))
    scale = x.max()
    if scale == 0.0:
        return 0.0
    # rescale before powering so large p does not overflow
    return float(scale * np.mean((x / scale) ** p) ** (1.0 / p))


def bootstrap_lp_se(s, p, n_boot: int = 200, seed: int = 0, quantile: float = 1.0) -> float:
    """Bootstrap standard error of :func:`empirical_lp_norm`."""
    x = _as_samples(s)
    rng = np.random.default_rng(seed)
    n = x.size
    stats = np.empty(n_boot)
    for b in range(n_boot):
        stats[b] = empirical_lp_norm(x[rng.integers(0, n, size=n)], p, quantile)
    return float(stats.std(ddof=1))


def bootstrap_lp_se_columns(e, p, n_boot: int = 200, seed: int = 0) -> np.ndarray:
    """Bootstrap SE of the L_p norm of every column of an (N, T) ensemble, finite p.

    Rows are resampled jointly. Each resample is a multinomial count vector, so all
    columns are handled by one matrix product.
    """
    a = _as_matrix(e)
    p = as_exponent(p)
    if p is INFINITY:
        raise ValueError("column bootstrap is for finite p; use max_spacing_se for p = inf")
    n = a.shape[0]
    scale = np.abs(a).max(axis=0)
    scale[scale == 0.0] = 1.0
    mom = (np.abs(a) / scale) ** p
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, np.full(n, 1.0 / n), size=n_boot).astype(float)
    norms = scale * (counts @ mom / n) ** (1.0 / p)
    return norms.std(axis=0, ddof=1)


def max_spacing_se(s, top: int = 10) -> float:
    """Spread of the sample maximum of |x|: mean spacing of its ``top`` largest order statistics.

    Near a bounded endpoint the deficit of the maximum is roughly exponential with
    this scale. The bootstrap cannot see it because resamples mostly repeat the
    observed maximum.
    """
    x = np.abs(_as_samples(s))
    j = min(int(top), x.size - 1)
    if j < 1:
        return 0.0
    hi = np.partition(x, x.size - j - 1)[x.size - j - 1 :]
    return float((hi.max() - hi.min()) / j)


def _kth_neighbor_distance(points: np.ndarray, k: int) -> np.ndarray:
    tree = cKDTree(points)
    dist, _ = tree.query(points, k=k + 1, p=np.inf)
    return dist[:, k]


def knn_entropy(e, k_neighbors: int = DEFAULT_K) -> InfoEstimate:
    """Kozachenko-Leonenko estimate of the joint differential entropy of the rows of ``e``.

    h = psi(N) - psi(k) + d <log(2 eps_i)>, with eps_i the max-norm distance to the
    k-th neighbour, converted to bits.
    """
    x = _as_matrix(e)
    n, d = x.shape
    k = int(k_neighbors)
    if k < 1 or n <= k:
        raise ValueError(f"need N > k_neighbors >= 1, got N={n}, k={k}")
    eps = _kth_neighbor_distance(x, k)
    zero = eps <= 0.0
    if zero.mean() > DEGENERATE_FRACTION:
        raise DegenerateSampleError(
            f"{zero.sum()} of {n} points have a zero k-th neighbour distance"
        )
    if zero.any():
        eps = eps[~zero]
    h_nats = special.digamma(n) - special.digamma(k) + d * np.mean(np.log(2.0 * eps))
    return InfoEstimate(float(h_nats / LN2), n, k, "kozachenko-leonenko")


def conditional_entropy(e, target_col: int, cond_cols=(), k_neighbors: int = DEFAULT_K) -> InfoEstimate:
    """h(target | cond) = h(target, cond) - h(cond), both by :func:`knn_entropy`."""
    x = _as_matrix(e)
    cond = [int(c) for c in cond_cols]
    target = int(target_col)
    if target in cond:
        raise ValueError("target column must not be among the conditioning columns")
    if len(set(cond)) != len(cond):
        raise ValueError("duplicate conditioning columns")
    if not cond:
        return knn_entropy(x[:, [target]], k_neighbors)
    joint = knn_entropy(x[:, [target] + cond], k_neighbors)
    marginal = knn_entropy(x[:, cond], k_neighbors)
    return InfoEstimate(joint.value - marginal.value, x.shape[0], int(k_neighbors), "kozachenko-leonenko-difference")


def _count_within(points: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Number of other points strictly inside each max-norm radius."""
    tree = cKDTree(points)
    r = np.nextafter(radii, 0.0)
    counts = tree.query_ball_point(points, r, p=np.inf, return_length=True)
    return np.asarray(counts) - 1


def mutual_information(x_cols, y_cols, k_neighbors: int = DEFAULT_K) -> InfoEstimate:
    """KSG estimate of I(x; y) in bits, clamped at zero.

    I = psi(k) + psi(N) - <psi(n_x + 1) + psi(n_y + 1)>.
    """
    x = _as_matrix(x_cols)
    y = _as_matrix(y_cols)
    if x.shape[0] != y.shape[0]:
        raise ValueError("blocks must have the same number of rows")
    for name, block in (("x", x), ("y", y)):
        if np.any(np.ptp(block, axis=0) == 0.0):
            raise DegenerateSampleError(f"constant column in {name} block")
    n = x.shape[0]
    k = int(k_neighbors)
    if k < 1 or n <= k:
        raise ValueError(f"need N > k_neighbors >= 1, got N={n}, k={k}")
    eps = _kth_neighbor_distance(np.hstack([x, y]), k)
    if (eps <= 0.0).mean() > DEGENERATE_FRACTION:
        raise DegenerateSampleError("coincident joint samples")
    nx = _count_within(x, eps)
    ny = _count_within(y, eps)
    # psi(nx+1) + psi(ny+1) is symmetric in the two blocks term by term
    avg = np.mean(special.digamma(nx + 1) + special.digamma(ny + 1))
    mi = (special.digamma(k) + special.digamma(n) - avg) / LN2
    return InfoEstimate(max(0.0, float(mi)), n, k, "ksg")


def maxent_gof(s, d: MaxEntDensity, min_n: int = 50) -> GofResult:
    """Two-sided Kolmogorov-Smirnov distance between the sample and ``d``."""
    x = _as_samples(s)
    n = x.size
    if n < min_n:
        raise ValueError(f"goodness of fit needs at least {min_n} samples, got {n}")
    return GofResult(float(stats.kstest(x, lambda v: cdf(v, d)).statistic), n)


def lag_correlations(series, max_lag: int = 5) -> np.ndarray:
    """Pooled lag-l correlation of an (N, T) ensemble along its time axis, l = 1..max_lag."""
    a = _as_matrix(series)
    if a.shape[1] <= max_lag:
        raise ValueError(f"need more than {max_lag} time columns for lag correlations")
    a = a - a.mean()
    var = np.mean(a * a)
    if var == 0.0:
        raise DegenerateSampleError("constant series")
    return np.array([np.mean(a[:, lag:] * a[:, :-lag]) / var for lag in range(1, max_lag + 1)])
