"""Command line entry point: ``entrobound {sample,entropy,bound,run,render}``.

Exit codes: 0 success, 2 config error, 3 bound violation, 4 estimator degeneracy.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import lp_bound, prediction_bound, recursion_bound
from .estimators import DegenerateSampleError, knn_entropy
from .harness.config import ALL_FORMATS, ConfigError, bundled_configs, load_config
from .harness.render import RenderError, render_report
from .harness.runner import RunReport, run_experiment
from .maxent import MaxEntDensity, as_exponent, entropy_closed_form, format_exponent, sample
from .processes import TrajectoryEnsemble, read_binary, resolve_threads, write_binary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3
EXIT_DEGENERATE = 4


def _exponent(raw: str):
    try:
        return as_exponent(raw)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _seed(raw: str) -> int:
    val = int(raw)
    if not 0 <= val < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return val


def _read_samples(path: Path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == b"ENTB":
        return read_binary(path).states
    data = np.genfromtxt(path, delimiter=",", names=True)
    cols = data.dtype.names
    return np.column_stack([data[c] for c in cols]) if len(cols) > 1 else np.asarray(data[cols[0]])[:, None]


def cmd_sample(args) -> int:
    d = MaxEntDensity(args.p, args.mu)
    x = sample(d, args.n, args.seed if args.seed is not None else 0)
    if args.format == "bin":
        if not args.out:
            print("binary output needs --out", file=sys.stderr)
            return EXIT_CONFIG
        write_binary(TrajectoryEnsemble(x[:, None]), args.out)
        return EXIT_OK
    lines = "x\n" + "".join(f"{v!r}\n" for v in x.tolist())
    if args.out:
        Path(args.out).write_text(lines)
    else:
        sys.stdout.write(lines)
    return EXIT_OK


def cmd_entropy(args) -> int:
    if args.input:
        est = knn_entropy(_read_samples(Path(args.input)), args.k)
        print(json.dumps({"entropy_bits": est.value, "method": est.method, "n": est.n_used, "k_neighbors": est.k_neighbors}))
    else:
        d = MaxEntDensity(args.p, args.mu)
        print(json.dumps({"entropy_bits": entropy_closed_form(d), "method": "closed-form", "p": format_exponent(d.p), "mu": d.mu}))
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        for p in cfg.p_list:
            if cfg.kind == "prediction":
                k = cfg.k if args.k is None else args.k
                route = "closed-form" if cfg.route == "estimated" else cfg.route
                rep = prediction_bound(cfg.process, p, k, route=route)
            elif cfg.kind == "recursion":
                rep = recursion_bound(cfg.recursion, p, args.k or 0)
            else:
                print("bound --config supports prediction and recursion scenarios", file=sys.stderr)
                return EXIT_CONFIG
            print(json.dumps(rep.to_dict()))
        return EXIT_OK
    if args.h is None:
        print("bound needs --h or --config", file=sys.stderr)
        return EXIT_CONFIG
    for p in args.p or [2.0]:
        print(json.dumps({"p": format_exponent(p), "entropy_bits": args.h, "bound": lp_bound(args.h, p)}))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    out = Path(args.out or cfg.output_dir)
    formats = args.format or list(cfg.formats)
    t0 = time.perf_counter()
    report = run_experiment(cfg, threads=resolve_threads(args.threads))
    for fmt in formats:
        for path in render_report(report, fmt, out):
            print(f"wrote {path}")
    for e in report.entries:
        r = e.report
        flag = "VIOLATION" if e.violated else "ok"
        emp = float("nan") if r.empirical_lp is None else r.empirical_lp
        print(f"{e.scenario} p={format_exponent(e.p)} k={e.k} route={r.entropy_source} "
              f"bound={r.bound_value:.6g} empirical={emp:.6g} verdict={r.verdict} {flag}")
    print(f"elapsed {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return EXIT_VIOLATION if report.any_violation else EXIT_OK


def cmd_render(args) -> int:
    report = RunReport.from_json(Path(args.report).read_text())
    for fmt in args.format or ["svg"]:
        for path in render_report(report, fmt, args.out or "."):
            print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entrobound", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"entrobound {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("sample", help="draw samples from an L_p max-ent density")
    sp.add_argument("--p", type=_exponent, default=2.0)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--seed", type=_seed)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "bin"), default="csv")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("entropy", help="closed-form or nearest-neighbour entropy (bits)")
    sp.add_argument("--p", type=_exponent, default=2.0)
    sp.add_argument("--mu", type=float, default=1.0)
    sp.add_argument("--input", help="CSV with a header row, or an ENTB dump")
    sp.add_argument("--k", type=int, default=4, help="nearest neighbours")
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("bound", help="evaluate the entropic L_p lower bound")
    sp.add_argument("--h", type=float, help="conditional entropy in bits")
    sp.add_argument("--p", type=_exponent, action="append")
    sp.add_argument("--config")
    sp.add_argument("--k", type=int)
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("run", help="run an experiment config; bundled: " + ", ".join(bundled_configs()))
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=_seed)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=ALL_FORMATS, action="append")
    sp.add_argument("--threads", type=int, help="worker threads (default: $ENTROBOUND_THREADS or 1)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("render", help="render a saved JSON run report")
    sp.add_argument("--report", required=True)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json", "svg"), action="append")
    sp.set_defaults(func=cmd_render)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateSampleError as exc:
        print(f"estimator degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
