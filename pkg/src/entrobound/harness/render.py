"""CSV, JSON and SVG renderings of a RunReport."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..bounds import CSV_COLUMNS  # noqa: E402
from ..maxent import INFINITY, format_exponent  # noqa: E402
from ..processes import TrajectoryEnsemble, write_binary  # noqa: E402
from .runner import N_SE  # noqa: E402

RUN_CSV_COLUMNS = CSV_COLUMNS[:2] + ("k",) + CSV_COLUMNS[2:]


class RenderError(RuntimeError):
    pass


def _prepare(out_dir) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RenderError(f"cannot create output directory {out}: {exc}") from None
    return out


def render_report(report, fmt: str, out_dir) -> list:
    """Write ``report`` as ``fmt`` (csv, json, svg or bin) under ``out_dir``; returns the paths."""
    if not report.entries:
        raise RenderError("report has no entries")
    out = _prepare(out_dir)
    try:
        if fmt == "json":
            path = out / "report.json"
            path.write_text(report.to_json())
            return [path]
        if fmt == "csv":
            path = out / "report.csv"
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(RUN_CSV_COLUMNS)
                for e in report.entries:
                    row = e.report.csv_row(e.scenario)
                    w.writerow(row[:2] + [e.k] + row[2:])
            return [path]
        if fmt == "svg":
            return [_render_svg(report, out / "report.svg")]
        if fmt == "bin":
            if report.ensemble is None:
                raise RenderError("report carries no ensemble to dump")
            path = out / "ensemble.entb"
            write_binary(TrajectoryEnsemble(report.ensemble), path)
            return [path]
    except OSError as exc:
        raise RenderError(f"cannot write to {out}: {exc}") from None
    raise RenderError(f"unknown format {fmt!r}")


def _sweep(report):
    """Pick the axis that varies: p if several exponents were run, otherwise k."""
    ps = []
    for e in report.entries:
        if e.p not in ps:
            ps.append(e.p)
    if len(ps) > 1:
        # one point per p, preferring the pooled cell
        chosen = {}
        for e in report.entries:
            if e.p not in chosen or e.k == "pooled":
                chosen[e.p] = e
        order = sorted(ps, key=lambda p: float("inf") if p is INFINITY else p)
        entries = [chosen[p] for p in order]
        return "exponent p", [format_exponent(p) for p in order], entries
    entries = [e for e in report.entries if e.k != "pooled"] or report.entries
    return "time index k", [str(e.k) for e in entries], entries


def _render_svg(report, path: Path) -> Path:
    xlabel, labels, entries = _sweep(report)
    xs = list(range(len(entries)))
    bound = [e.report.bound_value for e in entries]
    emp = [e.report.empirical_lp if e.report.empirical_lp is not None else float("nan") for e in entries]
    err = [e.report.tolerance(N_SE) for e in entries]

    plt.rcParams["svg.hashsalt"] = "entrobound"
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, bound, marker="o", label="entropic lower bound")
    ax.errorbar(xs, emp, yerr=err, marker="s", capsize=3, label="empirical L_p norm (3 SE tolerance)")
    ax.set_xticks(xs)
    ax.set_xticklabels(labels)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("L_p norm of error (units of x)")
    ax.set_title(entries[0].scenario)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return path
