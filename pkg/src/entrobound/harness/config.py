"""Experiment configuration files.

Grammar: INI-style sections of ``key = value`` lines (``#`` and ``;`` start
comments). Lists are comma separated. Every section and key is checked against
``SCHEMA``; anything unknown is rejected with its ``section.key`` path.

    [scenario]   name, kind (prediction | recursion | estimation), n, k, seed,
                 p, route, report_k, n_boot
    [process]    type (iid | gaussian-ar); iid: p, mu; gaussian-ar: coeffs, sigma, init
    [predictor]  type (oracle | zero | constant | linear | fitted-linear |
                 conditional-mean | observation); value, coeffs, order
    [recursion]  g, eta, curvature, c, noise_p, noise_mu, x0, x0_p, x0_mu, residual, burn_in
    [estimation] signal_sigma, noise_sigma
    [diagnostics] enabled, mi, ks, lag
    [output]     dir, formats
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from ..bounds import Thresholds
from ..maxent import MaxEntDensity, as_exponent
from ..predictors import PredictorSpec
from ..processes import G_REGISTRY, IID, RESIDUALS, GaussianAR, RecursionSpec


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


SCHEMA = {
    "scenario": {"name", "kind", "n", "k", "seed", "p", "route", "report_k", "n_boot", "description"},
    "process": {"type", "p", "mu", "coeffs", "sigma", "init"},
    "predictor": {"type", "value", "coeffs", "order"},
    "recursion": {"g", "eta", "curvature", "c", "noise_p", "noise_mu", "x0", "x0_p", "x0_mu", "residual", "burn_in"},
    "estimation": {"signal_sigma", "noise_sigma"},
    "diagnostics": {"enabled", "mi", "ks", "lag"},
    "output": {"dir", "formats"},
}
REQUIRED_SECTIONS = {
    "prediction": ("process", "predictor"),
    "recursion": ("recursion",),
    "estimation": ("estimation",),
}
PREDICTOR_TYPES = ("oracle", "zero", "constant", "linear", "fitted-linear")
ESTIMATOR_TYPES = ("conditional-mean", "observation")
FORMATS = ("json", "csv", "svg")
ALL_FORMATS = FORMATS + ("bin",)


@dataclass(frozen=True)
class PredictorChoice:
    """Predictor as written in a config; ``fitted-linear`` and ``oracle`` resolve at run time."""

    type: str
    value: float = 0.0
    coeffs: tuple = ()
    order: int = 1

    def static_spec(self) -> Optional[PredictorSpec]:
        if self.type == "zero":
            return PredictorSpec.zero()
        if self.type == "constant":
            return PredictorSpec.constant_value(self.value)
        if self.type == "linear":
            return PredictorSpec.linear(self.coeffs, origin="config")
        return None


@dataclass(frozen=True)
class EstimationSpec:
    """x ~ N(0, signal_sigma^2) observed through y = x + v, v ~ N(0, noise_sigma^2)."""

    signal_sigma: float = 1.0
    noise_sigma: float = 1.0


@dataclass
class ExperimentConfig:
    name: str
    kind: str
    n: int
    k: int
    seed: int
    p_list: list
    route: str = "auto"
    report_k: list = field(default_factory=lambda: ["pooled"])
    n_boot: int = 200
    process: Optional[Union[IID, GaussianAR]] = None
    predictor: Optional[PredictorChoice] = None
    recursion: Optional[RecursionSpec] = None
    burn_in: int = 0
    estimation: Optional[EstimationSpec] = None
    diagnostics: bool = True
    thresholds: Thresholds = field(default_factory=Thresholds)
    output_dir: str = "out"
    formats: tuple = FORMATS
    source_text: str = ""
    description: str = ""

    def echo(self) -> dict:
        """Normalized config as plain data, for the run report."""
        parser = _parse_text(self.source_text)
        return {sec: dict(parser[sec]) for sec in parser.sections()}


def _parse_text(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), empty_lines_in_values=False
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"syntax error: {exc}") from None
    return parser


def _get(parser, sec, key, conv, default=None, required=False):
    if not parser.has_option(sec, key):
        if required:
            raise ConfigError(f"{sec}.{key}", "missing required key")
        return default
    raw = parser.get(sec, key).strip()
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{sec}.{key}", f"invalid value {raw!r} ({exc})") from None


def _floats(raw: str) -> tuple:
    raw = raw.strip()
    if not raw:
        return ()
    return tuple(float(v) for v in raw.split(","))


def _p_list(raw: str) -> list:
    out = [as_exponent(v) for v in raw.split(",") if v.strip()]
    if not out:
        raise ValueError("empty p list")
    return out


def _report_k(raw: str) -> list:
    out = []
    for tok in raw.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok == "pooled":
            out.append("pooled")
        else:
            val = int(tok)
            if val < 0:
                raise ValueError("time indices must be >= 0")
            out.append(val)
    if not out:
        raise ValueError("empty report_k list")
    return out


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def _choice(options):
    def conv(raw):
        if raw not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return raw

    return conv


def _positive(conv):
    def inner(raw):
        v = conv(raw)
        if not v > 0:
            raise ValueError("must be positive")
        return v

    return inner


def parse_config(text: str) -> ExperimentConfig:
    parser = _parse_text(text)
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(sec, "unknown section")
        for key in parser[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{sec}.{key}", "unknown key")
    if not parser.has_section("scenario"):
        raise ConfigError("scenario", "missing required section")

    s = "scenario"
    kind = _get(parser, s, "kind", _choice(tuple(REQUIRED_SECTIONS)), required=True)
    for sec in REQUIRED_SECTIONS[kind]:
        if not parser.has_section(sec):
            raise ConfigError(sec, f"section required for kind {kind!r}")
    cfg = ExperimentConfig(
        name=_get(parser, s, "name", str, required=True),
        kind=kind,
        n=_get(parser, s, "n", _positive(int), required=True),
        k=_get(parser, s, "k", _positive(int), 1),
        seed=_get(parser, s, "seed", int, 0),
        p_list=_get(parser, s, "p", _p_list, [2.0]),
        route=_get(parser, s, "route", _choice(("auto", "closed-form", "spectral", "estimated")), "auto"),
        report_k=_get(parser, s, "report_k", _report_k, ["pooled"]),
        n_boot=_get(parser, s, "n_boot", int, 200),
        description=_get(parser, s, "description", str, ""),
        source_text=text,
    )
    for kk in cfg.report_k:
        if kk != "pooled" and kk > cfg.k - (1 if kind == "recursion" else 0):
            raise ConfigError("scenario.report_k", f"time index {kk} beyond the simulated horizon")

    if kind == "prediction":
        cfg.process = _parse_process(parser)
        cfg.predictor = _parse_predictor(parser, PREDICTOR_TYPES)
    elif kind == "recursion":
        cfg.recursion, cfg.burn_in = _parse_recursion(parser, cfg.k)
    else:
        e = "estimation"
        cfg.estimation = EstimationSpec(
            _get(parser, e, "signal_sigma", _positive(float), 1.0),
            _get(parser, e, "noise_sigma", _positive(float), 1.0),
        )
        cfg.predictor = (
            _parse_predictor(parser, ESTIMATOR_TYPES)
            if parser.has_section("predictor")
            else PredictorChoice("conditional-mean")
        )

    if parser.has_section("diagnostics"):
        d = "diagnostics"
        cfg.diagnostics = _get(parser, d, "enabled", _bool, True)
        cfg.thresholds = Thresholds(
            mi_bits=_get(parser, d, "mi", _positive(float), 0.05),
            ks=_get(parser, d, "ks", _positive(float), 0.02),
            lag_corr=_get(parser, d, "lag", _positive(float), 0.02),
        )
    if parser.has_section("output"):
        o = "output"
        cfg.output_dir = _get(parser, o, "dir", str, "out")
        fmts = _get(parser, o, "formats", lambda r: tuple(v.strip() for v in r.split(",") if v.strip()), FORMATS)
        for f in fmts:
            if f not in ALL_FORMATS:
                raise ConfigError("output.formats", f"unknown format {f!r}")
        cfg.formats = fmts
    return cfg


def _parse_process(parser):
    sec = "process"
    ptype = _get(parser, sec, "type", _choice(("iid", "gaussian-ar")), required=True)
    if ptype == "iid":
        for bad in ("coeffs", "sigma", "init"):
            if parser.has_option(sec, bad):
                raise ConfigError(f"{sec}.{bad}", "not valid for an iid process")
        p = _get(parser, sec, "p", as_exponent, 2.0)
        mu = _get(parser, sec, "mu", _positive(float), 1.0)
        return IID(MaxEntDensity(p, mu))
    for bad in ("p", "mu"):
        if parser.has_option(sec, bad):
            raise ConfigError(f"{sec}.{bad}", "not valid for a gaussian-ar process")
    coeffs = _get(parser, sec, "coeffs", _floats, ())
    sigma = _get(parser, sec, "sigma", _positive(float), 1.0)
    init = _get(parser, sec, "init", _choice(("stationary", "zero")), "stationary")
    try:
        return GaussianAR(coeffs, sigma, init)
    except ValueError as exc:
        raise ConfigError(f"{sec}.coeffs", str(exc)) from None


def _parse_predictor(parser, allowed):
    sec = "predictor"
    ptype = _get(parser, sec, "type", _choice(allowed), required=True)
    choice = PredictorChoice(
        ptype,
        value=_get(parser, sec, "value", float, 0.0),
        coeffs=_get(parser, sec, "coeffs", _floats, ()),
        order=_get(parser, sec, "order", int, 1),
    )
    if ptype == "linear" and not choice.coeffs:
        raise ConfigError(f"{sec}.coeffs", "linear predictor needs coefficients")
    if choice.order < 0:
        raise ConfigError(f"{sec}.order", "must be >= 0")
    return choice


def _parse_recursion(parser, k_steps):
    sec = "recursion"
    g = _get(parser, sec, "g", _choice(tuple(G_REGISTRY)), "zero")
    params = {}
    for key in ("eta", "curvature", "c"):
        if parser.has_option(sec, key):
            params[key] = _get(parser, sec, key, float)
    noise = MaxEntDensity(
        _get(parser, sec, "noise_p", as_exponent, 2.0),
        _get(parser, sec, "noise_mu", _positive(float), 1.0),
    )
    x0_raw = _get(parser, sec, "x0", str, "0")
    if x0_raw == "random":
        x0 = MaxEntDensity(
            _get(parser, sec, "x0_p", as_exponent, 2.0),
            _get(parser, sec, "x0_mu", _positive(float), 1.0),
        )
    else:
        for key in ("x0_p", "x0_mu"):
            if parser.has_option(sec, key):
                raise ConfigError(f"{sec}.{key}", "only valid with x0 = random")
        x0 = _get(parser, sec, "x0", float)
    residual = _get(parser, sec, "residual", _choice(tuple(RESIDUALS)), "first-difference")
    burn_in = _get(parser, sec, "burn_in", int, 0)
    if not 0 <= burn_in < k_steps:
        raise ConfigError(f"{sec}.burn_in", "must lie in [0, k)")
    if residual == "second-difference" and k_steps < 2:
        raise ConfigError("scenario.k", "second-difference residual needs k >= 2")
    try:
        spec = RecursionSpec(noise=noise, g_map=g, g_params=params, x0=x0, residual=residual)
    except ValueError as exc:
        raise ConfigError(f"{sec}.g", str(exc)) from None
    return spec, burn_in


def bundled_configs() -> list:
    root = resources.files("entrobound") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def read_config_text(path) -> str:
    """Read a config from disk, falling back to the bundled configs by file name."""
    p = Path(path)
    if p.exists():
        return p.read_text()
    bundled = resources.files("entrobound") / "configs" / p.name
    if bundled.is_file():
        return bundled.read_text()
    raise ConfigError(str(path), "config file not found")


def load_config(path) -> ExperimentConfig:
    return parse_config(read_config_text(path))
