"""Entropic L_p lower bounds and equality diagnostics.

Every bound has the form 2^h / (2 Gamma((p+1)/p) (p e)^(1/p)) (2^h / 2 at
p = inf), where h is the conditional entropy that governs the problem:

* prediction: h(x_k | x_0..x_{k-1}), or its rate / spectral form;
* estimation with side information: h(x | y);
* recursions: h(n_k | n_0..n_{k-1}, x_0), whatever residual is tracked.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy import stats

from . import estimators
from .maxent import INFINITY, MaxEntDensity, as_exponent, entropy_constant, format_exponent
from .predictors import levinson_durbin
from .processes import IID, GaussianAR, RecursionSpec, TrajectoryEnsemble
from .spectral import (
    HALF_LOG2_2PIE,
    NegentropyRate,
    SpectralDensity,
    UnsupportedFamilyError,
    ar_autocovariance,
    ar_spectrum,
    negentropy_rate_iid,
    szego_entropy_rate,
    white_spectrum,
)

ROUTES = ("closed-form", "szego-spectral", "szego-minus-negentropy", "knn-estimated")
# order statistics used to estimate the spread of a sample maximum
MAX_SPACING_TOP = 50
CSV_COLUMNS = ("scenario", "p", "route", "entropy_bits", "bound", "empirical", "slack", "verdict")


class RouteError(ValueError):
    """No usable entropy route for the given source."""


@dataclass(frozen=True)
class Thresholds:
    mi_bits: float = 0.05
    ks: float = 0.02
    lag_corr: float = 0.02
    max_lag: int = 5


@dataclass
class EqualityDiagnostics:
    mi_innovation_past: estimators.InfoEstimate
    gof_to_maxent: estimators.GofResult
    lag_correlations: list
    mu_used: float
    thresholds: Thresholds = field(default_factory=Thresholds)

    @property
    def mi_pass(self) -> bool:
        return self.mi_innovation_past.value < self.thresholds.mi_bits

    @property
    def gof_pass(self) -> bool:
        return self.gof_to_maxent.ks_distance < self.thresholds.ks

    @property
    def white_pass(self) -> bool:
        if not self.lag_correlations:
            return True
        return max(abs(c) for c in self.lag_correlations) < self.thresholds.lag_corr

    @property
    def verdict(self) -> bool:
        return self.mi_pass and self.gof_pass and self.white_pass

    def to_dict(self) -> dict:
        return {
            "mi_innovation_past": asdict(self.mi_innovation_past),
            "gof_to_maxent": asdict(self.gof_to_maxent),
            "lag_correlations": [float(c) for c in self.lag_correlations],
            "mu_used": self.mu_used,
            "thresholds": asdict(self.thresholds),
            "mi_pass": self.mi_pass,
            "gof_pass": self.gof_pass,
            "white_pass": self.white_pass,
            "verdict": self.verdict,
        }


@dataclass
class BoundReport:
    p: object
    bound_value: float
    entropy_used: float
    entropy_source: str
    empirical_lp: Optional[float] = None
    slack: Optional[float] = None
    diagnostics: Optional[EqualityDiagnostics] = None
    empirical_se: Optional[float] = None
    # sampling law of the empirical norm: "normal", or "exponential" for a sample maximum
    se_law: str = "normal"

    def __post_init__(self):
        self.p = as_exponent(self.p)
        if self.entropy_source not in ROUTES:
            raise ValueError(f"unknown entropy source {self.entropy_source!r}")
        if self.se_law not in ("normal", "exponential"):
            raise ValueError(f"unknown standard-error law {self.se_law!r}")

    def recomputed_bound(self) -> float:
        return lp_bound(self.entropy_used, self.p)

    def with_empirical(self, samples, n_boot: int = 200, seed: int = 0, quantile: float = 1.0) -> "BoundReport":
        emp = estimators.empirical_lp_norm(samples, self.p, quantile)
        if self.p is INFINITY and quantile >= 1.0:
            # the bootstrap is inconsistent for a maximum; use the endpoint spacing scale
            return replace(
                self,
                empirical_lp=emp,
                slack=emp - self.bound_value,
                empirical_se=estimators.max_spacing_se(samples, MAX_SPACING_TOP),
                se_law="exponential",
            )
        se = estimators.bootstrap_lp_se(samples, self.p, n_boot, seed, quantile) if n_boot else None
        return replace(self, empirical_lp=emp, slack=emp - self.bound_value, empirical_se=se, se_law="normal")

    def tolerance(self, n_se: float = 3.0) -> float:
        """Allowed shortfall below the bound at the one-sided level of ``n_se`` normal SEs.

        A sample maximum falls short of the essential supremum by a roughly
        exponential amount, so its tail-matched multiplier is -ln Phi(-n_se).
        """
        se = self.empirical_se or 0.0
        if self.se_law == "exponential":
            return -math.log(stats.norm.sf(n_se)) * se
        return n_se * se

    def violated(self, n_se: float = 3.0) -> bool:
        """Empirical norm below the bound by more than the ``n_se``-SE tolerance."""
        if self.empirical_lp is None:
            return False
        return self.empirical_lp < self.bound_value - self.tolerance(n_se)

    @property
    def verdict(self) -> str:
        if self.diagnostics is None:
            return "n/a"
        return "pass" if self.diagnostics.verdict else "fail"

    def to_dict(self) -> dict:
        return {
            "p": format_exponent(self.p),
            "bound_value": self.bound_value,
            "entropy_used": self.entropy_used,
            "entropy_source": self.entropy_source,
            "empirical_lp": self.empirical_lp,
            "slack": self.slack,
            "diagnostics": None if self.diagnostics is None else self.diagnostics.to_dict(),
            "empirical_se": self.empirical_se,
            "se_law": self.se_law,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def csv_row(self, scenario: str) -> list:
        def num(v):
            return "" if v is None else repr(float(v))

        return [
            scenario,
            format_exponent(self.p),
            self.entropy_source,
            num(self.entropy_used),
            num(self.bound_value),
            num(self.empirical_lp),
            num(self.slack),
            self.verdict,
        ]


def lp_bound(h: float, p) -> float:
    """Smallest L_p norm compatible with entropy ``h`` bits.

    2^h / (2 Gamma((p+1)/p) (p e)^(1/p)), and 2^h / 2 for p = INFINITY.
    """
    return 2.0 ** float(h) / entropy_constant(p)


# entropy routes


@dataclass(frozen=True)
class SpectralSource:
    """Asymptotic power spectrum of a stationary process.

    Non-Gaussian processes must carry their negentropy rate.
    """

    spectrum: SpectralDensity
    gaussian: bool = True
    negentropy: Optional[NegentropyRate] = None


def gaussian_ar_conditional_entropy(spec: GaussianAR, k: int) -> float:
    """h(x_k | x_0..x_{k-1}) in bits for a Gaussian AR process."""
    q = spec.order
    if spec.init == "zero" or k >= q:
        var = spec.sigma**2
    else:
        r = ar_autocovariance(spec.coeffs, spec.sigma, k)
        var = float(levinson_durbin(r, k).error_variances[k])
    return HALF_LOG2_2PIE + 0.5 * math.log2(var)


def _closed_form_entropy(source, k: int) -> float:
    if isinstance(source, IID):
        return source.density.entropy()
    if isinstance(source, GaussianAR):
        return gaussian_ar_conditional_entropy(source, k)
    raise RouteError(f"no closed-form entropy for {type(source).__name__}")


def _spectral_entropy(source, grid_size: int = 2**12):
    if isinstance(source, SpectralSource):
        spec = source
    elif isinstance(source, GaussianAR):
        spec = SpectralSource(ar_spectrum(source.coeffs, source.sigma, grid_size)[0])
    elif isinstance(source, IID):
        d = source.density
        j = negentropy_rate_iid(d)
        gaussian = j.family == "gaussian"
        spec = SpectralSource(white_spectrum(d.variance, grid_size), gaussian=gaussian, negentropy=None if gaussian else j)
    else:
        raise RouteError(f"no spectral description for {type(source).__name__}")
    h = szego_entropy_rate(spec.spectrum)
    if spec.gaussian and spec.negentropy is None:
        return h, "szego-spectral"
    if spec.negentropy is None:
        raise UnsupportedFamilyError("spectral route for a non-Gaussian process needs its negentropy rate")
    if spec.gaussian and spec.negentropy.value != 0.0:
        raise ValueError("a Gaussian process has zero negentropy rate")
    return h - spec.negentropy.value, "szego-minus-negentropy"


def _estimated_entropy(source, k: int, history: Optional[int], k_neighbors: int) -> float:
    x = source.states if isinstance(source, TrajectoryEnsemble) else np.asarray(source, dtype=float)
    if x.ndim != 2:
        raise RouteError("estimated route needs an (N, T) ensemble")
    if not 0 <= k < x.shape[1]:
        raise IndexError(f"time index {k} outside ensemble with {x.shape[1]} columns")
    h = min(k, 4) if history is None else min(k, int(history))
    return estimators.conditional_entropy(x, k, range(k - h, k), k_neighbors).value


def prediction_bound(
    source,
    p,
    k: int = 0,
    route: str = "auto",
    history: Optional[int] = None,
    k_neighbors: int = estimators.DEFAULT_K,
) -> BoundReport:
    """Lower bound on the L_p norm of any one-step prediction error of x_k.

    ``source`` selects the entropy route:

    * a number: a known conditional entropy in bits (e.g. h(x|y) for estimation
      with side information) -> closed-form;
    * ``IID`` / ``GaussianAR`` -> closed-form h(x_k | past), or the spectral route
      if ``route="spectral"``;
    * ``SpectralSource`` -> Szego entropy rate, minus the negentropy rate when
      the process is not Gaussian;
    * an ensemble -> nearest-neighbour estimate of h(x_k | up to ``history`` past values).
    """
    p = as_exponent(p)
    if route not in ("auto", "closed-form", "spectral", "estimated"):
        raise RouteError(f"unknown route {route!r}")
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        if route not in ("auto", "closed-form"):
            raise RouteError("a bare entropy value only supports the closed-form route")
        h, tag = float(source), "closed-form"
    elif isinstance(source, (IID, GaussianAR)):
        if route in ("auto", "closed-form"):
            h, tag = _closed_form_entropy(source, k), "closed-form"
        elif route == "spectral":
            h, tag = _spectral_entropy(source)
        else:
            raise RouteError("the estimated route needs a simulated ensemble, not a process spec")
    elif isinstance(source, SpectralSource):
        if route not in ("auto", "spectral"):
            raise RouteError(f"route {route!r} unavailable for a spectral source")
        h, tag = _spectral_entropy(source)
    elif isinstance(source, (TrajectoryEnsemble, np.ndarray)):
        if route not in ("auto", "estimated"):
            raise RouteError(f"route {route!r} unavailable for an ensemble")
        h, tag = _estimated_entropy(source, k, history, k_neighbors), "knn-estimated"
    else:
        raise RouteError(f"cannot resolve an entropy route for {type(source).__name__}")
    return BoundReport(p, lp_bound(h, p), h, tag)


def noise_conditional_entropy(spec: RecursionSpec) -> float:
    """h(n_k | n_0..n_{k-1}, x_0) for i.i.d. noise independent of x_0: just h(n_k)."""
    if not isinstance(spec.noise, MaxEntDensity):
        raise UnsupportedFamilyError("noise entropy must be available in closed form")
    return spec.noise.entropy()


def recursion_bound(spec: RecursionSpec, p, k: int = 0) -> BoundReport:
    """Bound on the L_p norm of the residual r_{k+1}; identical for every residual form."""
    if k < 0:
        raise IndexError("k must be >= 0")
    h = noise_conditional_entropy(spec)
    return BoundReport(as_exponent(p), lp_bound(h, p), h, "closed-form")


def equality_diagnostics(
    errors,
    conditioning=None,
    p=2.0,
    mu_hint: Optional[float] = None,
    thresholds: Thresholds = Thresholds(),
    k_neighbors: int = estimators.DEFAULT_K,
    max_mi_samples: int = 10_000,
    pooled_gof: bool = True,
) -> EqualityDiagnostics:
    """Check the equality conditions of an error (innovation or residual) ensemble.

    ``errors`` is (N, T) with the current error in the last column. The tests are:
    KSG mutual information between the current error and ``conditioning``
    (default: up to four previous error columns), KS distance to the max-ent
    density with scale ``mu_hint`` or the empirical L_p norm, and pooled lag
    correlations for lags 1..max_lag.
    """
    p = as_exponent(p)
    e = np.asarray(errors, dtype=float)
    if e.ndim == 1:
        e = e[:, None]
    current = e[:, -1]
    if conditioning is None:
        if e.shape[1] < 2:
            raise ValueError("need past columns or an explicit conditioning block")
        conditioning = e[:, -5:-1]
    cond = np.asarray(conditioning, dtype=float)
    if cond.ndim == 1:
        cond = cond[:, None]
    if cond.shape[0] != current.shape[0]:
        raise ValueError("conditioning block must have one row per realization")
    m = min(max_mi_samples, current.size)
    if cond.shape[1] == 0:
        # nothing in the past to share information with
        mi = estimators.InfoEstimate(0.0, m, k_neighbors, "empty-conditioning")
    else:
        mi = estimators.mutual_information(current[:m], cond[:m], k_neighbors)

    gof_samples = e.ravel() if pooled_gof else current
    mu = float(mu_hint) if mu_hint is not None else estimators.empirical_lp_norm(gof_samples, p)
    gof = estimators.maxent_gof(gof_samples, MaxEntDensity(p, mu))

    lags = min(thresholds.max_lag, e.shape[1] - 1)
    lag_corr = list(estimators.lag_correlations(e, lags)) if lags >= 1 else []
    return EqualityDiagnostics(mi, gof, [float(c) for c in lag_corr], mu, thresholds)


def write_reports_csv(rows, path) -> None:
    """``rows``: iterable of (scenario, BoundReport)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for scenario, report in rows:
            w.writerow(report.csv_row(scenario))

