import json
import math

import numpy as np
import pytest

from entrobound import cli
from entrobound.bounds import BoundReport
from entrobound.harness.runner import RunEntry, RunReport
from entrobound.processes import read_binary

SMALL = """
[scenario]
name = small
kind = prediction
n = 300
k = 4
seed = 1
p = 2
report_k = pooled

[process]
type = iid
p = 2
mu = 1.0

[predictor]
type = oracle
"""


def _run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


class TestSample:
    def test_csv_stdout(self, capsys):
        code, out, _ = _run(["sample", "--p", "1", "--n", "5", "--seed", "3"], capsys)
        lines = out.splitlines()
        assert code == 0 and lines[0] == "x" and len(lines) == 6

    def test_deterministic(self, capsys):
        a = _run(["sample", "--n", "5", "--seed", "3"], capsys)[1]
        b = _run(["sample", "--n", "5", "--seed", "3"], capsys)[1]
        assert a == b

    def test_bin(self, tmp_path, capsys):
        path = tmp_path / "s.entb"
        code, _, _ = _run(["sample", "--p", "inf", "--n", "10", "--format", "bin", "--out", str(path)], capsys)
        assert code == 0
        x = read_binary(path).states
        assert x.shape == (10, 1) and np.all(np.abs(x) <= 1.0)

    def test_bin_needs_out(self, capsys):
        assert _run(["sample", "--format", "bin"], capsys)[0] == 2

    def test_bad_exponent(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["sample", "--p", "0.3"])
        assert exc.value.code == 2


class TestEntropy:
    def test_closed_form(self, capsys):
        code, out, _ = _run(["entropy", "--p", "2", "--mu", "1"], capsys)
        assert code == 0
        assert json.loads(out)["entropy_bits"] == pytest.approx(0.5 * math.log2(2 * math.pi * math.e), abs=1e-12)

    def test_from_csv(self, tmp_path, capsys):
        path = tmp_path / "x.csv"
        x = np.random.default_rng(0).standard_normal(4000)
        path.write_text("x\n" + "\n".join(map(repr, x.tolist())) + "\n")
        code, out, _ = _run(["entropy", "--input", str(path)], capsys)
        assert code == 0
        assert json.loads(out)["entropy_bits"] == pytest.approx(2.0471, abs=0.08)

    def test_degenerate_exit_4(self, tmp_path, capsys):
        path = tmp_path / "c.csv"
        path.write_text("x\n" + "1.0\n" * 50)
        code, _, err = _run(["entropy", "--input", str(path)], capsys)
        assert code == 4 and "degeneracy" in err


class TestBound:
    def test_h(self, capsys):
        code, out, _ = _run(["bound", "--h", "1", "--p", "inf"], capsys)
        assert code == 0 and json.loads(out)["bound"] == pytest.approx(1.0)

    def test_needs_input(self, capsys):
        assert _run(["bound"], capsys)[0] == 2

    def test_config(self, capsys):
        code, out, _ = _run(["bound", "--config", "ar1-ks.cfg"], capsys)
        assert code == 0 and json.loads(out)["bound_value"] == pytest.approx(1.0, abs=1e-3)


class TestRun:
    def test_ok(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text(SMALL)
        code, out, err = _run(["run", "--config", str(cfg), "--out", str(tmp_path / "o"), "--format", "json", "--format", "csv"], capsys)
        assert code == 0
        assert (tmp_path / "o" / "report.json").exists() and (tmp_path / "o" / "report.csv").exists()
        assert "small p=2 k=pooled" in out and "elapsed" in err

    def test_config_error_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text(SMALL.replace("mu = 1.0", "noize = 1.0"))
        code, _, err = _run(["run", "--config", str(cfg), "--out", str(tmp_path)], capsys)
        assert code == 2 and "process.noize" in err

    def test_violation_exit_3(self, tmp_path, capsys, monkeypatch):
        rep = BoundReport(p=2.0, bound_value=1.0, entropy_used=2.05, entropy_source="closed-form",
                          empirical_lp=0.5, slack=-0.5, empirical_se=0.01)
        fake = RunReport([RunEntry("fake", 2.0, "pooled", rep, 100)])
        monkeypatch.setattr(cli, "run_experiment", lambda cfg, threads=None: fake)
        cfg = tmp_path / "s.cfg"
        cfg.write_text(SMALL)
        code, out, _ = _run(["run", "--config", str(cfg), "--out", str(tmp_path), "--format", "json"], capsys)
        assert code == 3 and "VIOLATION" in out

    def test_threads_env_fallback(self, tmp_path, capsys, monkeypatch):
        seen = {}

        def spy(cfg, threads=None):
            seen["threads"] = threads
            return real(cfg, threads)

        real = cli.run_experiment
        monkeypatch.setattr(cli, "run_experiment", spy)
        monkeypatch.setenv("ENTROBOUND_THREADS", "3")
        cfg = tmp_path / "s.cfg"
        cfg.write_text(SMALL)
        assert _run(["run", "--config", str(cfg), "--out", str(tmp_path), "--format", "json"], capsys)[0] == 0
        assert seen["threads"] == 3
        assert _run(["run", "--config", str(cfg), "--out", str(tmp_path), "--format", "json", "--threads", "2"], capsys)[0] == 0
        assert seen["threads"] == 2

    def test_seed_override_and_threads_identical(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text(SMALL)
        _run(["run", "--config", str(cfg), "--seed", "9", "--out", str(tmp_path / "a"), "--format", "json", "--threads", "1"], capsys)
        _run(["run", "--config", str(cfg), "--seed", "9", "--out", str(tmp_path / "b"), "--format", "json", "--threads", "4"], capsys)
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


class TestRender:
    def test_render_from_json(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text(SMALL)
        _run(["run", "--config", str(cfg), "--out", str(tmp_path), "--format", "json"], capsys)
        code, _, _ = _run(["render", "--report", str(tmp_path / "report.json"), "--out", str(tmp_path / "r"),
                           "--format", "svg", "--format", "csv"], capsys)
        assert code == 0
        assert (tmp_path / "r" / "report.svg").exists() and (tmp_path / "r" / "report.csv").exists()

    def test_render_empty_exit_1(self, tmp_path, capsys):
        path = tmp_path / "e.json"
        path.write_text(json.dumps({"entries": []}))
        assert _run(["render", "--report", str(path), "--out", str(tmp_path)], capsys)[0] == 1
