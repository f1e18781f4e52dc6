import csv
import io
import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from collapse_lab.cli import main
from collapse_lab.config import ConfigError, ExperimentConfig, make_params, parse_value, validate
from collapse_lab.report import ExperimentReport, reports_json, write_atomic


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, list(args), catch_exceptions=False)


class TestRun:
    def test_chain_json(self, runner):
        res = invoke(runner, "run", "chain", "--trials", "5")
        assert res.exit_code == 0
        rep = json.loads(res.output)
        assert rep["experiment"] == "chain" and rep["passed"] is True
        assert rep["inputs"]["trials"] == 5
        assert "duration_s" not in rep

    def test_chain_example(self, runner):
        res = invoke(runner, "run", "chain", "--a", "0.6", "--b", "0.8", "--levels", "8", "--trials", "10")
        assert res.exit_code == 0
        rep = json.loads(res.output)
        probs = [row[2] for row in rep["rows"] if row[1] == 1]
        assert len(probs) == 8
        assert max(abs(p - 0.36) for p in probs) <= 1e-12

    def test_survival_defaults(self, runner):
        res = invoke(runner, "run", "survival")
        assert res.exit_code == 0
        q = {x["name"]: x["value"] for x in json.loads(res.output)["quantities"]}
        assert abs(q["degradation_factor"] - 0.5) <= 1e-4

    def test_timing_flag(self, runner):
        rep = json.loads(invoke(runner, "run", "chain", "--trials", "1", "--timing").output)
        assert rep["duration_s"] >= 0

    def test_complex_flag(self, runner):
        res = invoke(runner, "run", "chain", "--trials", "1", "--b", "0.8i")
        rep = json.loads(res.output)
        assert res.exit_code == 0
        assert rep["inputs"]["b"] == {"re": 0.0, "im": 0.8}

    def test_byte_identical(self, runner, tmp_path):
        outs = []
        for k in range(2):
            path = tmp_path / f"r{k}.json"
            assert invoke(runner, "run", "observers", "--trials", "50", "--seed", "3", "-o", str(path)).exit_code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]

    def test_seed_changes_inputs_only(self, runner):
        a = json.loads(invoke(runner, "run", "chain", "--trials", "3", "--seed", "1").output)
        b = json.loads(invoke(runner, "run", "chain", "--trials", "3", "--seed", "2").output)
        assert a["inputs"]["seed"] == 1 and b["inputs"]["seed"] == 2
        assert a["passed"] and b["passed"]

    def test_retention_csv(self, runner):
        res = invoke(runner, "run", "retention", "--format", "csv", "--trials", "10")
        assert res.exit_code == 0
        rows = list(csv.reader(io.StringIO(res.output)))
        assert rows[0] == ["c", "sensitivity", "tr_p_rho_analytic", "tr_p_rho_numeric", "sensitivity_fd"]
        assert len(rows) == 22
        cs = [float(r[0]) for r in rows[1:]]
        assert 1 / np.sqrt(2) in cs
        half = rows[1 + cs.index(1 / np.sqrt(2))]
        assert abs(float(half[1])) <= 1e-12

    def test_failing_check_exits_one(self, runner):
        # a tolerance scale this small turns round-off into failures
        res = runner.invoke(main, ["run", "retention", "--trials", "10", "--tolerance-scale", "1e-30"])
        assert res.exit_code == 1
        assert json.loads(res.stdout)["passed"] is False


class TestConfig:
    def test_file_and_override(self, runner, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('experiment = "chain"\nseed = 9\n[parameters]\nlevels = 4\ntrials = 2\na = 0.6\nb = "0.8j"\n')
        rep = json.loads(invoke(runner, "run", "chain", "--config", str(cfg), "--levels", "6").output)
        assert rep["inputs"]["levels"] == 6
        assert rep["inputs"]["trials"] == 2
        assert rep["inputs"]["seed"] == 9
        assert rep["inputs"]["b"] == {"re": 0.0, "im": 0.8}

    def test_unknown_parameter(self, runner, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('[parameters]\nbogus = 1\n')
        res = runner.invoke(main, ["run", "chain", "--config", str(cfg)])
        assert res.exit_code == 2
        assert "bogus" in res.stderr

    def test_unknown_top_key(self, runner, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('colour = "red"\n')
        assert runner.invoke(main, ["run", "chain", "--config", str(cfg)]).exit_code == 2

    def test_wrong_experiment_in_file(self, runner, tmp_path):
        cfg = tmp_path / "c.toml"
        cfg.write_text('experiment = "retention"\n')
        assert runner.invoke(main, ["run", "chain", "--config", str(cfg)]).exit_code == 2

    def test_normalization_violation(self, runner):
        res = runner.invoke(main, ["run", "chain", "--a", "1.2"])
        assert res.exit_code == 2
        assert "normalization constraint |a|^2 + |b|^2 = 1 violated" in res.stderr

    def test_missing_config_file(self, runner, tmp_path):
        assert runner.invoke(main, ["run", "chain", "--config", str(tmp_path / "nope.toml")]).exit_code == 3

    def test_unwritable_output(self, runner, tmp_path):
        res = runner.invoke(main, ["run", "chain", "--trials", "1", "-o", str(tmp_path / "no" / "dir" / "r.json")])
        assert res.exit_code == 3


class TestValidate:
    def test_ok(self, runner):
        res = runner.invoke(main, ["validate", "retention"])
        assert res.exit_code == 0 and res.output.strip() == "ok"

    def test_normalization(self, runner):
        res = runner.invoke(main, ["validate", "chain", "--set", "a=1.2"])
        assert res.exit_code == 2
        assert "normalization constraint |a|^2 + |b|^2 = 1 violated" in res.output

    def test_coarse_grid(self, runner):
        res = runner.invoke(main, ["validate", "coherent", "--set", "n_points=121"])
        assert res.exit_code == 2
        assert "dx = 0.2" in res.output and "dx <= 0.1" in res.output

    def test_tail_margin(self, runner):
        res = runner.invoke(main, ["validate", "survival", "--set", "phase_extent=8"])
        assert res.exit_code == 2
        assert "L >= Q + 6" in res.output

    def test_bad_set_syntax(self, runner):
        assert runner.invoke(main, ["validate", "chain", "--set", "a"]).exit_code == 2


class TestConfigModule:
    @pytest.mark.parametrize("raw, want", [("0.8j", 0.8j), ("0.6+0.8i", 0.6 + 0.8j), ([0.0, 1.0], 1j), (2, 2 + 0j)])
    def test_complex(self, raw, want):
        assert parse_value(complex, raw) == want

    def test_int_rejects_fraction(self):
        with pytest.raises(ValueError):
            parse_value(int, 2.5)

    def test_make_params_unknown(self):
        with pytest.raises(ConfigError):
            make_params("chain", {"zzz": 1})

    def test_defaults_validate(self):
        for name in ("chain", "observers", "coherent", "survival", "retention"):
            assert validate(ExperimentConfig(name)) == []


class TestReport:
    def test_complex_and_nan(self):
        rep = ExperimentReport("x", {"z": 1 + 2j})
        assert json.loads(reports_json([rep]))["inputs"]["z"] == {"re": 1.0, "im": 2.0}
        rep.quantity("bad", float("nan"), "none")
        with pytest.raises(ValueError):
            reports_json([rep])

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        path = tmp_path / "r.json"
        write_atomic(path, "one")
        write_atomic(path, "two")
        assert path.read_text() == "two"
        assert os.listdir(tmp_path) == ["r.json"]
