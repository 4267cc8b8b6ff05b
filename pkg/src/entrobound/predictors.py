"""Causal one-step predictors and the innovation ensembles they produce."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .maxent import as_exponent
from .processes import IID, GaussianAR, TrajectoryEnsemble
from .spectral import AutocovarianceSequence, UnsupportedFamilyError, ar_autocovariance


class SingularToeplitzError(ValueError):
    """Autocovariance is not positive definite up to the requested order."""


@dataclass(frozen=True)
class PredictorSpec:
    """x_hat_k = constant + sum_i coeffs[i-1] x_{k-i}.

    ``prefix[k]`` holds the coefficients used at warm-up steps k < order, when
    fewer than ``order`` past values exist. Without it the full coefficients
    are truncated.
    """

    kind: str = "zero"
    coeffs: tuple = ()
    constant: float = 0.0
    prefix: tuple = ()
    innovation_variance: Optional[float] = None
    origin: str = ""

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "linear"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "prefix", tuple(tuple(float(c) for c in row) for row in self.prefix))

    @property
    def order(self) -> int:
        return len(self.coeffs)

    @classmethod
    def zero(cls) -> "PredictorSpec":
        return cls("zero")

    @classmethod
    def constant_value(cls, c: float) -> "PredictorSpec":
        return cls("constant", constant=float(c))

    @classmethod
    def linear(cls, coeffs, prefix=(), innovation_variance=None, origin="") -> "PredictorSpec":
        return cls("linear", coeffs=tuple(coeffs), prefix=tuple(prefix), innovation_variance=innovation_variance, origin=origin)

    def warmup_coeffs(self, k: int) -> np.ndarray:
        if k < len(self.prefix):
            return np.asarray(self.prefix[k])
        return np.asarray(self.coeffs[:k])

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "coeffs": list(self.coeffs),
            "constant": self.constant,
            "order": self.order,
            "innovation_variance": self.innovation_variance,
            "origin": self.origin,
        }


@dataclass(eq=False)
class InnovationEnsemble:
    """Errors e_k = x_k - x_hat_k, k = 0..K, aligned with the source ensemble.

    Columns before ``warmup`` used a shortened history.
    """

    errors: np.ndarray
    predictor: PredictorSpec
    warmup: int = 0

    @property
    def steady(self) -> np.ndarray:
        return self.errors[:, self.warmup :]


@dataclass(frozen=True)
class LevinsonResult:
    coeffs: np.ndarray
    error_variances: np.ndarray
    reflection: np.ndarray
    all_orders: list = field(default_factory=list)


def levinson_durbin(r, order: int) -> LevinsonResult:
    """Solve the Yule-Walker equations for one-step predictors of orders 0..``order``.

    ``r`` is the autocovariance R(0), R(1), ...; ``all_orders[m]`` holds the
    order-m coefficients and ``error_variances[m]`` its prediction error variance.
    """
    r = np.asarray(r, dtype=float)
    if r.size < order + 1:
        raise ValueError(f"need {order + 1} autocovariance lags, got {r.size}")
    if r[0] <= 0:
        raise SingularToeplitzError("R(0) must be positive")
    a = np.zeros(0)
    err = np.empty(order + 1)
    refl = np.empty(order)
    err[0] = r[0]
    orders = [a.copy()]
    for m in range(1, order + 1):
        kappa = (r[m] - np.dot(a, r[m - 1 : 0 : -1])) / err[m - 1]
        if not abs(kappa) < 1.0:
            raise SingularToeplitzError(f"Toeplitz system singular at order {m} (reflection {kappa:.6g})")
        a = np.concatenate([a - kappa * a[::-1], [kappa]])
        refl[m - 1] = kappa
        err[m] = err[m - 1] * (1.0 - kappa * kappa)
        orders.append(a.copy())
    return LevinsonResult(a, err, refl, orders)


def sample_autocovariance(ens, max_lag: int) -> np.ndarray:
    """Zero-mean autocovariance pooled over realizations and time."""
    x = ens.states if isinstance(ens, TrajectoryEnsemble) else np.asarray(ens, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    t = x.shape[1]
    if t <= max_lag:
        raise ValueError(f"need more than {max_lag} time steps to estimate lag {max_lag}")
    return np.array([np.mean(x[:, lag:] * x[:, : t - lag]) for lag in range(max_lag + 1)])


def fit_linear_predictor(source, order: int) -> PredictorSpec:
    """Minimum-MSE linear one-step predictor from an autocovariance or an ensemble."""
    order = int(order)
    if order < 0:
        raise ValueError("order must be >= 0")
    if order == 0:
        return PredictorSpec.zero()
    if isinstance(source, TrajectoryEnsemble):
        r = sample_autocovariance(source, order)
        origin = "fitted"
    else:
        r = source.values if isinstance(source, AutocovarianceSequence) else np.asarray(source, dtype=float)
        origin = "yule-walker"
    lev = levinson_durbin(r, order)
    return PredictorSpec.linear(
        lev.coeffs, prefix=lev.all_orders[:order], innovation_variance=float(lev.error_variances[order]), origin=origin
    )


def oracle_predictor(spec, p=2.0) -> PredictorSpec:
    """Optimal predictor for a supported process.

    The conditionals of every supported family are symmetric and unimodal, so the
    conditional mean (p=2), median (p=1) and midrange (p=inf) coincide and one
    predictor serves all p.
    """
    as_exponent(p)
    if isinstance(spec, IID):
        # every max-ent member is symmetric about zero
        return PredictorSpec("constant", constant=0.0, innovation_variance=spec.density.variance, origin="oracle")
    if isinstance(spec, GaussianAR):
        q = spec.order
        if q == 0:
            return PredictorSpec("constant", constant=0.0, innovation_variance=spec.sigma**2, origin="oracle")
        if spec.init == "stationary":
            lev = levinson_durbin(ar_autocovariance(spec.coeffs, spec.sigma, q), q)
            prefix = lev.all_orders[:q]
        else:
            prefix = [spec.coeffs[:k] for k in range(q)]
        return PredictorSpec.linear(spec.coeffs, prefix=prefix, innovation_variance=spec.sigma**2, origin="oracle")
    raise UnsupportedFamilyError(f"no oracle predictor for {type(spec).__name__}")


def apply_predictor(pred: PredictorSpec, ens) -> InnovationEnsemble:
    """Innovations of ``pred`` on every realization of ``ens``; zero predictor returns the data."""
    x = ens.states if isinstance(ens, TrajectoryEnsemble) else np.asarray(ens, dtype=float)
    if x.ndim != 2 or x.size == 0:
        raise ValueError("empty ensemble")
    if pred.kind == "zero":
        return InnovationEnsemble(x.copy(), pred, 0)
    if pred.kind == "constant":
        return InnovationEnsemble(x - pred.constant, pred, 0)
    t = x.shape[1]
    q = pred.order
    pred_vals = np.zeros_like(x)
    for k in range(min(q, t)):
        c = pred.warmup_coeffs(k)
        for i, ci in enumerate(c, start=1):
            pred_vals[:, k] += ci * x[:, k - i]
    for i, ci in enumerate(pred.coeffs, start=1):
        pred_vals[:, q:] += ci * x[:, q - i : t - i]
    return InnovationEnsemble(x - pred_vals - pred.constant, pred, min(q, t))
