"""simulate -> predict -> bound -> diagnose pipelines driven by an ExperimentConfig."""

from __future__ import annotations

import json
import math
import platform
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .. import __version__
from ..bounds import (
    BoundReport,
    EqualityDiagnostics,
    Thresholds,
    equality_diagnostics,
    prediction_bound,
    recursion_bound,
)
from ..estimators import GofResult, InfoEstimate
from ..maxent import MaxEntDensity, as_exponent, format_exponent
from ..predictors import apply_predictor, fit_linear_predictor, oracle_predictor
from ..processes import simulate_process, simulate_recursion, simulate_side_information
from .config import ExperimentConfig

N_SE = 3.0


def derive_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([int(seed), *tags]).generate_state(1, dtype=np.uint64)[0] >> 1)


@dataclass
class RunEntry:
    scenario: str
    p: object
    k: Union[int, str]
    report: BoundReport
    n_samples: int

    @property
    def violated(self) -> bool:
        return self.report.violated(N_SE)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "p": format_exponent(self.p),
            "k": self.k,
            "n_samples": self.n_samples,
            "violated": self.violated,
            "report": self.report.to_dict(),
        }


@dataclass
class RunReport:
    entries: list
    config: dict = field(default_factory=dict)
    tool_version: str = __version__
    metadata: dict = field(default_factory=dict)
    # simulated states, kept for binary dumps; not part of the JSON document
    ensemble: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def any_violation(self) -> bool:
        return any(e.violated for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "metadata": self.metadata,
            "config": self.config,
            "entries": [e.to_dict() for e in self.entries],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        entries = []
        for e in data.get("entries", []):
            entries.append(RunEntry(e["scenario"], as_exponent(e["p"]), e["k"], _report_from_dict(e["report"]), e["n_samples"]))
        return cls(entries, data.get("config", {}), data.get("tool_version", ""), data.get("metadata", {}))

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls.from_dict(json.loads(text))


def _report_from_dict(d: dict) -> BoundReport:
    diag = None
    if d.get("diagnostics"):
        dd = d["diagnostics"]
        diag = EqualityDiagnostics(
            InfoEstimate(**dd["mi_innovation_past"]),
            GofResult(**dd["gof_to_maxent"]),
            list(dd["lag_correlations"]),
            dd["mu_used"],
            Thresholds(**dd["thresholds"]),
        )
    return BoundReport(
        p=d["p"],
        bound_value=d["bound_value"],
        entropy_used=d["entropy_used"],
        entropy_source=d["entropy_source"],
        empirical_lp=d.get("empirical_lp"),
        slack=d.get("slack"),
        diagnostics=diag,
        empirical_se=d.get("empirical_se"),
        se_law=d.get("se_law", "normal"),
    )


def _predictor_for(cfg: ExperimentConfig, p, threads):
    choice = cfg.predictor
    static = choice.static_spec()
    if static is not None:
        return static
    if choice.type == "oracle":
        return oracle_predictor(cfg.process, p)
    # fit on an independent training ensemble
    train = simulate_process(cfg.process, cfg.n, cfg.k, derive_seed(cfg.seed, 1), threads)
    return fit_linear_predictor(train, choice.order)


def _with_x0(cond: np.ndarray, x0: Optional[np.ndarray]) -> np.ndarray:
    if x0 is None:
        return cond
    return np.hstack([x0[:, None], cond])


def _run_prediction(cfg: ExperimentConfig, threads):
    ens = simulate_process(cfg.process, cfg.n, cfg.k, cfg.seed, threads)
    yield ens.states
    x = ens.states
    last = cfg.k
    source = ens if cfg.route == "estimated" else cfg.process
    route = cfg.route
    for p in cfg.p_list:
        pred = _predictor_for(cfg, p, threads)
        innov = apply_predictor(pred, ens)
        for kk in cfg.report_k:
            if kk == "pooled":
                k_bound = last
                samples = innov.steady
                block = innov.steady
                pooled = True
            else:
                k_bound = kk
                samples = innov.errors[:, kk]
                block = innov.errors[:, : kk + 1]
                pooled = False
            cond = x[:, max(0, k_bound - 4) : k_bound]
            report = prediction_bound(source, p, k_bound, route=route)
            yield p, kk, report, samples, block, cond, pooled


def _run_recursion(cfg: ExperimentConfig, threads):
    spec = cfg.recursion
    ens = simulate_recursion(spec, cfg.n, cfg.k, cfg.seed, threads)
    yield ens.states
    res = ens.residuals
    x0 = None if spec.deterministic_x0 else ens.states[:, 0]
    for p in cfg.p_list:
        for kk in cfg.report_k:
            if kk == "pooled":
                j = res.shape[1] - 1
                samples = res[:, cfg.burn_in :]
                block = res[:, cfg.burn_in :]
                pooled = True
            else:
                j = kk
                samples = res[:, kk]
                block = res[:, : kk + 1]
                pooled = False
            # r_{j+1} against (n_0..n_{j-1}, x_0), most recent four noises
            cond = _with_x0(ens.noises[:, max(0, j - 4) : j], x0)
            yield p, kk, recursion_bound(spec, p, j), samples, block, cond, pooled


def _run_estimation(cfg: ExperimentConfig, threads):
    est = cfg.estimation
    x, y = simulate_side_information(MaxEntDensity.gaussian(est.signal_sigma), est.noise_sigma, cfg.n, cfg.seed)
    yield np.column_stack([x, y])
    sx2, sv2 = est.signal_sigma**2, est.noise_sigma**2
    h_cond = 0.5 * math.log2(2.0 * math.pi * math.e * sx2 * sv2 / (sx2 + sv2))
    gain = sx2 / (sx2 + sv2) if cfg.predictor.type == "conditional-mean" else 1.0
    err = x - gain * y
    for p in cfg.p_list:
        for kk in cfg.report_k:
            yield p, 0 if kk == "pooled" else kk, prediction_bound(h_cond, p), err, err, y, False


PIPELINES = {"prediction": _run_prediction, "recursion": _run_recursion, "estimation": _run_estimation}


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> RunReport:
    """Run every (p, k) cell of ``cfg``; numeric output depends only on the config and seed."""
    entries = []
    cells = PIPELINES[cfg.kind](cfg, threads)
    states = next(cells)
    for idx, (p, kk, report, samples, block, cond, pooled) in enumerate(cells):
        samples = np.asarray(samples).ravel()
        report = report.with_empirical(samples, n_boot=cfg.n_boot, seed=derive_seed(cfg.seed, 2, idx))
        if cfg.diagnostics:
            report.diagnostics = equality_diagnostics(block, cond, p, thresholds=cfg.thresholds, pooled_gof=pooled)
        entries.append(RunEntry(cfg.name, p, kk, report, int(samples.size)))
    meta = {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kind": cfg.kind,
        "n": cfg.n,
        "k": cfg.k,
        "seed": cfg.seed,
    }
    return RunReport(entries, cfg.echo(), __version__, meta, states)


def write_outputs(report: RunReport, out_dir, formats) -> list:
    from .render import render_report

    paths = []
    for fmt in formats:
        paths.extend(render_report(report, fmt, out_dir))
    return paths
