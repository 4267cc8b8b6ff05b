"""Synthetic processes and noisy recursions with known entropic ground truth.

Random streams are derived per block of ``BLOCK_SIZE`` realizations from
``SeedSequence(seed, spawn_key=(block,))``, so an ensemble does not depend on
how many worker threads produced it.
"""

from __future__ import annotations

import csv
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np

from .maxent import MaxEntDensity, sample
from .spectral import ar_autocovariance, check_stable

BLOCK_SIZE = 1024
BINARY_MAGIC = b"ENTB"
BINARY_VERSION = 1


@dataclass(frozen=True)
class IID:
    density: MaxEntDensity


@dataclass(frozen=True)
class GaussianAR:
    """x_k = sum_i a_i x_{k-i} + w_k, w_k ~ N(0, sigma^2).

    ``init="stationary"`` draws x_0..x_{q-1} from the stationary law;
    ``init="zero"`` starts from an all-zero pre-sample history.
    """

    coeffs: tuple = ()
    sigma: float = 1.0
    init: str = "stationary"

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in np.ravel(self.coeffs)))
        if self.init not in ("stationary", "zero"):
            raise ValueError(f"unknown AR init mode {self.init!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        check_stable(self.coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs)


ProcessSpec = Union[IID, GaussianAR]


# g_k maps: factory(**params) -> callable(history (N, k+1)) -> (N,)
G_REGISTRY: dict[str, Callable[..., Callable[[np.ndarray], np.ndarray]]] = {}


def register_g_map(name: str):
    def deco(factory):
        G_REGISTRY[name] = factory
        return factory

    return deco


@register_g_map("zero")
def _g_zero():
    return lambda hist: np.zeros(hist.shape[0])


@register_g_map("linear")
def _g_linear(c: float = 0.0):
    return lambda hist: c * hist[:, -1]


@register_g_map("quadratic-gradient")
def _g_quadratic_gradient(eta: float = 0.1, curvature: float = 1.0):
    # gradient step on f(x) = curvature * x^2 / 2
    return lambda hist: -eta * curvature * hist[:, -1]


def _advance_first_difference(states, k, v):
    return states[:, k] + v


def _advance_identity(states, k, v):
    return v


def _advance_second_difference(states, k, v):
    prev = states[:, k - 1] if k >= 1 else states[:, 0]
    return 2.0 * states[:, k] - prev + v


def _residual_first_difference(states):
    return np.diff(states, axis=1)


def _residual_identity(states):
    return states[:, 1:].copy()


def _residual_second_difference(states):
    # x_{-1} := x_0, so r_1 = x_1 - x_0
    padded = np.concatenate([states[:, :1], states], axis=1)
    return padded[:, 2:] - 2.0 * padded[:, 1:-1] + padded[:, :-2]


RESIDUALS = {
    "first-difference": (_advance_first_difference, _residual_first_difference),
    "identity": (_advance_identity, _residual_identity),
    "second-difference": (_advance_second_difference, _residual_second_difference),
}


@dataclass(frozen=True)
class RecursionSpec:
    """r_{k+1}(x_{0..k+1}) = g_k(x_{0..k}) + n_k with i.i.d. noise independent of x_0.

    ``x0`` is either a number (deterministic start) or a MaxEntDensity.
    """

    noise: MaxEntDensity
    g_map: str = "zero"
    g_params: Mapping[str, float] = field(default_factory=dict)
    x0: Union[float, MaxEntDensity] = 0.0
    residual: str = "first-difference"

    def __post_init__(self):
        if self.g_map not in G_REGISTRY:
            raise ValueError(f"unknown g map {self.g_map!r}; registered: {sorted(G_REGISTRY)}")
        if self.residual not in RESIDUALS:
            raise ValueError(f"unknown residual {self.residual!r}; expected one of {sorted(RESIDUALS)}")
        for key, val in self.g_params.items():
            if not math.isfinite(float(val)):
                raise ValueError(f"g parameter {key} must be finite")
        try:
            G_REGISTRY[self.g_map](**self.g_params)
        except TypeError as exc:
            raise ValueError(f"bad parameters for g map {self.g_map!r}: {exc}") from None
        if not isinstance(self.x0, MaxEntDensity):
            x0 = float(self.x0)
            if not math.isfinite(x0):
                raise ValueError("x0 must be finite")
            object.__setattr__(self, "x0", x0)

    @property
    def deterministic_x0(self) -> bool:
        return not isinstance(self.x0, MaxEntDensity)

    def g(self) -> Callable[[np.ndarray], np.ndarray]:
        return G_REGISTRY[self.g_map](**self.g_params)


@dataclass(eq=False)
class TrajectoryEnsemble:
    """N realizations of states x_0..x_K, plus optional noises n_0..n_{K-1} and residuals r_1..r_K."""

    states: np.ndarray
    noises: Optional[np.ndarray] = None
    residuals: Optional[np.ndarray] = None
    seed: Optional[int] = None
    spec: object = None

    @property
    def n_realizations(self) -> int:
        return self.states.shape[0]

    @property
    def n_steps(self) -> int:
        return self.states.shape[1] - 1

    def to_csv(self, path) -> None:
        write_csv(self, path)

    def to_binary(self, path) -> None:
        write_binary(self, path)


def resolve_threads(threads: Optional[int] = None) -> int:
    if threads is None:
        threads = int(os.environ.get("ENTROBOUND_THREADS", "1") or 1)
    return max(1, int(threads))


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(block,)))


def _blocks(n: int):
    return [(b, b * BLOCK_SIZE, min(n, (b + 1) * BLOCK_SIZE)) for b in range((n + BLOCK_SIZE - 1) // BLOCK_SIZE)]


def _run_blocks(fn, n: int, threads: Optional[int]):
    blocks = _blocks(n)
    threads = resolve_threads(threads)
    if threads == 1 or len(blocks) == 1:
        return [fn(*blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda blk: fn(*blk), blocks))


def _check_sizes(n: int, k: int) -> None:
    if int(n) < 1 or int(k) < 1:
        raise ValueError(f"N and K must both be >= 1, got N={n}, K={k}")


def _simulate_ar(spec: GaussianAR, rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    a = np.asarray(spec.coeffs)
    q = a.size
    t = k + 1
    x = np.empty((n, t))
    w = rng.standard_normal((n, t)) * spec.sigma
    start = 0
    if spec.init == "stationary" and q > 0:
        m = min(q, t)
        r = ar_autocovariance(a, spec.sigma, m - 1)
        cov = r[np.abs(np.subtract.outer(np.arange(m), np.arange(m)))]
        chol = np.linalg.cholesky(cov)
        x[:, :m] = w[:, :m] / spec.sigma @ chol.T
        start = m
    for i in range(start, t):
        acc = w[:, i].copy()
        for j in range(1, min(q, i) + 1):
            acc += a[j - 1] * x[:, i - j]
        x[:, i] = acc
    return x


def simulate_process(spec: ProcessSpec, N: int, K: int, seed: int, threads: Optional[int] = None) -> TrajectoryEnsemble:
    """N realizations of x_0..x_K from ``spec``; bit-identical for equal (spec, N, K, seed)."""
    _check_sizes(N, K)

    def block(b, lo, hi):
        rng = block_rng(seed, b)
        if isinstance(spec, IID):
            return sample(spec.density, (hi - lo) * (K + 1), rng).reshape(hi - lo, K + 1)
        if isinstance(spec, GaussianAR):
            return _simulate_ar(spec, rng, hi - lo, K)
        raise TypeError(f"unsupported process spec {type(spec).__name__}")

    states = np.vstack(_run_blocks(block, int(N), threads))
    return TrajectoryEnsemble(states=states, seed=seed, spec=spec)


def replay_recursion(spec: RecursionSpec, x0, noises) -> TrajectoryEnsemble:
    """Rebuild states from (x_0, n_0..n_{K-1}); states are a function of these alone."""
    noises = np.asarray(noises, dtype=float)
    if noises.ndim != 2 or noises.shape[1] < 1:
        raise ValueError("noises must be an (N, K) array with K >= 1")
    n, k = noises.shape
    if spec.residual == "second-difference" and k < 2:
        raise ValueError("second-difference residual needs K >= 2")
    advance, _ = RESIDUALS[spec.residual]
    g = spec.g()
    states = np.empty((n, k + 1))
    res = np.empty((n, k))
    states[:, 0] = np.broadcast_to(np.asarray(x0, dtype=float), (n,))
    for i in range(k):
        # record r_{i+1} = g_i + n_i directly; differencing the states would round
        res[:, i] = g(states[:, : i + 1]) + noises[:, i]
        states[:, i + 1] = advance(states, i, res[:, i])
    return TrajectoryEnsemble(states=states, noises=noises, residuals=res, spec=spec)


def residuals_from_states(states, residual: str) -> np.ndarray:
    """Residual series r_1..r_K computed from stored states alone."""
    if residual not in RESIDUALS:
        raise ValueError(f"unknown residual {residual!r}; expected one of {sorted(RESIDUALS)}")
    return RESIDUALS[residual][1](np.asarray(states, dtype=float))


def simulate_recursion(spec: RecursionSpec, N: int, K: int, seed: int, threads: Optional[int] = None) -> TrajectoryEnsemble:
    """Simulate the recursion and return states, noises and the residual series r_1..r_K."""
    _check_sizes(N, K)
    if spec.residual == "second-difference" and K < 2:
        raise ValueError("second-difference residual needs K >= 2")

    def block(b, lo, hi):
        rng = block_rng(seed, b)
        m = hi - lo
        if spec.deterministic_x0:
            x0 = np.full(m, spec.x0)
        else:
            x0 = sample(spec.x0, m, rng)
        noises = sample(spec.noise, m * K, rng).reshape(m, K)
        return x0, noises

    parts = _run_blocks(block, int(N), threads)
    x0 = np.concatenate([p[0] for p in parts])
    noises = np.vstack([p[1] for p in parts])
    ens = replay_recursion(spec, x0, noises)
    ens.seed = seed
    return ens


def simulate_side_information(signal: MaxEntDensity, noise_sigma: float, N: int, seed: int):
    """Pairs (x, y = x + v) with v ~ N(0, noise_sigma^2) independent of x."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    x = sample(signal, N, rng)
    y = x + sample(MaxEntDensity.gaussian(noise_sigma), N, rng)
    return x, y


# serialization


def write_csv(ens: TrajectoryEnsemble, path) -> None:
    n, t = ens.states.shape
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["realization", "t", "x", "n"])
        for i in range(n):
            for j in range(t):
                noise = ""
                if ens.noises is not None and j < ens.noises.shape[1]:
                    noise = repr(float(ens.noises[i, j]))
                w.writerow([i, j, repr(float(ens.states[i, j])), noise])


def read_csv(path) -> TrajectoryEnsemble:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["realization", "t", "x", "n"]:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        rows = list(reader)
    n = max(int(r["realization"]) for r in rows) + 1
    t = max(int(r["t"]) for r in rows) + 1
    states = np.full((n, t), np.nan)
    noises = np.full((n, max(t - 1, 1)), np.nan)
    has_noise = False
    for r in rows:
        i, j = int(r["realization"]), int(r["t"])
        states[i, j] = float(r["x"])
        if r["n"]:
            noises[i, j] = float(r["n"])
            has_noise = True
    return TrajectoryEnsemble(states=states, noises=noises if has_noise else None)


def write_binary(ens: TrajectoryEnsemble, path) -> None:
    """Little-endian dump: b"ENTB", version u16, N u64, K u64, then N*K float64 row-major.

    K here is the number of stored time columns (x_0..x_K gives K+1 columns).
    """
    states = np.ascontiguousarray(ens.states, dtype="<f8")
    n, k = states.shape
    with open(path, "wb") as fh:
        fh.write(BINARY_MAGIC)
        fh.write(struct.pack("<HQQ", BINARY_VERSION, n, k))
        fh.write(states.tobytes(order="C"))


def read_binary(path) -> TrajectoryEnsemble:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BINARY_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        version, n, k = struct.unpack("<HQQ", fh.read(18))
        if version != BINARY_VERSION:
            raise ValueError(f"unsupported ensemble dump version {version}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != n * k:
        raise ValueError(f"expected {n * k} values, found {data.size}")
    return TrajectoryEnsemble(states=data.reshape(n, k).astype(float))
