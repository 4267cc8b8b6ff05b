import csv
import json
import math

import numpy as np
import pytest

from entrobound.harness.config import (
    ConfigError,
    bundled_configs,
    load_config,
    parse_config,
)
from entrobound.harness.render import RUN_CSV_COLUMNS, RenderError, render_report
from entrobound.harness.runner import RunReport, run_experiment
from entrobound.maxent import INFINITY, MaxEntDensity
from entrobound.processes import GaussianAR, IID, read_binary

BASE = """
[scenario]
name = t
kind = prediction
n = 400
k = 8
seed = 5
p = 2
report_k = 2, pooled

[process]
type = gaussian-ar
coeffs = 0.5
sigma = 1.0

[predictor]
type = oracle
"""


def _small(text=BASE):
    return parse_config(text)


class TestConfigParsing:
    def test_base(self):
        cfg = _small()
        assert cfg.kind == "prediction" and cfg.n == 400 and cfg.k == 8
        assert cfg.process == GaussianAR((0.5,), 1.0)
        assert cfg.report_k == [2, "pooled"]

    def test_unknown_key_names_path(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE.replace("sigma = 1.0", "noize = 1.0"))
        assert exc.value.path == "process.noize"
        assert "process.noize" in str(exc.value)

    def test_unknown_section(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE + "\n[extras]\nx = 1\n")
        assert exc.value.path == "extras"

    def test_missing_scenario(self):
        with pytest.raises(ConfigError) as exc:
            parse_config("[process]\ntype = iid\n")
        assert exc.value.path == "scenario"

    def test_missing_required_section(self):
        text = BASE.split("[predictor]")[0]
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.path == "predictor"

    def test_missing_required_key(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE.replace("n = 400\n", ""))
        assert exc.value.path == "scenario.n"

    def test_report_k_beyond_horizon(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE.replace("report_k = 2, pooled", "report_k = 9"))
        assert exc.value.path == "scenario.report_k"

    def test_bad_value(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE.replace("n = 400", "n = many"))
        assert exc.value.path == "scenario.n"

    def test_bad_exponent(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE.replace("p = 2\n", "p = 0.5\n"))
        assert exc.value.path == "scenario.p"

    def test_unstable_ar(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE.replace("coeffs = 0.5", "coeffs = 1.2"))
        assert exc.value.path == "process.coeffs"

    def test_iid_rejects_ar_keys(self):
        text = BASE.replace("type = gaussian-ar\ncoeffs = 0.5", "type = iid\np = 1\ncoeffs = 0.5")
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.path == "process.coeffs"

    def test_x0_p_without_random(self):
        text = "[scenario]\nname = r\nkind = recursion\nn = 10\nk = 5\n[recursion]\nx0 = 1.0\nx0_p = 2\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert exc.value.path == "recursion.x0_p"

    def test_random_x0(self):
        text = "[scenario]\nname = r\nkind = recursion\nn = 10\nk = 5\n[recursion]\nx0 = random\nx0_p = 1\nx0_mu = 3\n"
        cfg = parse_config(text)
        assert cfg.recursion.x0 == MaxEntDensity(1.0, 3.0)

    def test_unknown_format(self):
        with pytest.raises(ConfigError) as exc:
            parse_config(BASE + "\n[output]\nformats = json, pdf\n")
        assert exc.value.path == "output.formats"

    def test_inf_exponent(self):
        cfg = parse_config(BASE.replace("p = 2\n", "p = 1, inf\n"))
        assert cfg.p_list == [1.0, INFINITY]

    def test_bundled_all_parse(self):
        names = bundled_configs()
        assert len(names) >= 10
        for name in names:
            load_config(name)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.cfg")


class TestRunExperiment:
    def test_entries_per_cell(self):
        rep = run_experiment(_small(BASE.replace("p = 2\n", "p = 1, 2, inf\n")))
        assert [(e.p, e.k) for e in rep.entries] == [
            (p, k) for p in (1.0, 2.0, INFINITY) for k in (2, "pooled")
        ]

    def test_deterministic_json(self):
        a = run_experiment(_small(), threads=1).to_json()
        b = run_experiment(_small(), threads=1).to_json()
        assert a == b

    def test_thread_count_does_not_change_output(self):
        text = BASE.replace("n = 400", "n = 3000")
        a = run_experiment(_small(text), threads=1).to_json()
        b = run_experiment(_small(text), threads=3).to_json()
        assert a == b
        assert "threads" not in a

    def test_seed_changes_output(self):
        a = run_experiment(_small()).to_json()
        b = run_experiment(_small(BASE.replace("seed = 5", "seed = 6"))).to_json()
        assert a != b

    def test_json_round_trip(self):
        rep = run_experiment(_small())
        back = RunReport.from_json(rep.to_json())
        assert back.to_json() == rep.to_json()
        assert back.entries[0].report.verdict == rep.entries[0].report.verdict

    def test_report_echoes_config_and_version(self):
        d = run_experiment(_small()).to_dict()
        assert d["config"]["process"]["coeffs"] == "0.5"
        assert d["tool_version"]

    def test_ar1_ks(self):
        rep = run_experiment(load_config("ar1-ks.cfg"))
        pooled = [e for e in rep.entries if e.k == "pooled"][0]
        assert pooled.report.bound_value == pytest.approx(1.0, abs=1e-3)
        assert pooled.report.empirical_lp == pytest.approx(1.0, abs=0.02)
        assert not rep.any_violation

    def test_recursion_identity(self):
        rep = run_experiment(load_config("recursion-identity.cfg"))
        assert not rep.any_violation

    def test_estimation_fano(self):
        rep = run_experiment(load_config("fano.cfg"))
        e = rep.entries[0]
        assert e.report.bound_value == pytest.approx(1 / math.sqrt(2), abs=1e-3)
        assert e.report.empirical_lp == pytest.approx(1 / math.sqrt(2), rel=0.02)


@pytest.fixture(scope="module")
def report():
    return run_experiment(_small(BASE.replace("p = 2\n", "p = 1, 2, 4, inf\n")))


class TestRender:
    def test_csv_one_row_per_cell(self, report, tmp_path):
        (path,) = render_report(report, "csv", tmp_path)
        rows = list(csv.reader(open(path)))
        assert tuple(rows[0]) == RUN_CSV_COLUMNS
        assert len(rows) - 1 == len(report.entries) == 8
        assert {(r[1], r[2]) for r in rows[1:]} == {(p, k) for p in ("1", "2", "4", "inf") for k in ("2", "pooled")}

    def test_json(self, report, tmp_path):
        (path,) = render_report(report, "json", tmp_path)
        assert json.loads(path.read_text())["entries"][0]["scenario"] == "t"

    def test_svg_deterministic(self, report, tmp_path):
        (a,) = render_report(report, "svg", tmp_path / "a")
        (b,) = render_report(report, "svg", tmp_path / "b")
        assert a.read_bytes() == b.read_bytes()
        assert b"<svg" in a.read_bytes()

    def test_bin_dump(self, report, tmp_path):
        (path,) = render_report(report, "bin", tmp_path)
        np.testing.assert_array_equal(read_binary(path).states, report.ensemble)

    def test_bin_without_ensemble(self, report, tmp_path):
        back = RunReport.from_json(report.to_json())
        with pytest.raises(RenderError):
            render_report(back, "bin", tmp_path)

    def test_empty_report(self, tmp_path):
        with pytest.raises(RenderError):
            render_report(RunReport([]), "csv", tmp_path)

    def test_unknown_format(self, report, tmp_path):
        with pytest.raises(RenderError):
            render_report(report, "pdf", tmp_path)

    def test_unwritable_dir(self, report, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(RenderError):
            render_report(report, "csv", blocker / "sub")

    def test_gaussian_psweep_curves_meet_at_two(self):
        rep = run_experiment(load_config("iid-gaussian-psweep.cfg"))
        by_p = {e.p: e.report for e in rep.entries}
        assert by_p[2.0].empirical_lp == pytest.approx(by_p[2.0].bound_value, rel=0.01)
        # away from the matching exponent the gap is visible
        for p in (1.0, 4.0, INFINITY):
            assert by_p[p].empirical_lp > by_p[p].bound_value * 1.02
        assert not rep.any_violation
