"""Command-line parsing, dispatch and exit codes."""
import csv
import json
import logging
import subprocess
import sys
from pathlib import Path

import pytest

from copula_lab import __version__
from copula_lab.cli import THREADS_ENV, main, parse_config
from copula_lab.diagnostics import induced_tau
from copula_lab.errors import ConfigError
from copula_lab.experiments import studies
from copula_lab.models import GammaShapeRate, inverse_fisher

FAST = """
[sir]
n_resample = 300
[hpd]
grid = 40
qmc_points = 256
qmc_replicates = 2
"""


def write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestParseConfig:
    def test_minimal_config_gets_defaults(self, tmp_path):
        cfg = parse_config(write(tmp_path, "seed = 3\n"), subcommand="coverage")
        assert cfg.study.seed == 3 and cfg.study.repetitions == 1000
        assert len(cfg.study.rhos) == 39 and cfg.study.threads == 1
        assert cfg.output == Path("copula_lab_output/multinomial_coverage")

    def test_no_file(self):
        cfg = parse_config(None, subcommand="regression-coverage")
        assert cfg.study.cases == (1, 2, 3, 4, 5, 6)

    def test_overrides_win(self, tmp_path):
        cfg = parse_config(write(tmp_path, "seed = 3\nrepetitions = 7\n"), {"seed": 9, "repetitions": 50},
                           "tau-retention")
        assert (cfg.study.seed, cfg.study.repetitions) == (9, 50)
        assert cfg.effective()["config"]["repetitions"] == 50

    def test_bad_rho_names_field(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, "[study]\nrhos = [0.2, 1.2]\n"), subcommand="coverage")
        assert err.value.field == "study.rhos"

    def test_bad_prior_rho_names_field(self, tmp_path):
        text = '[prior.copula]\nfamily = "gaussian"\nrho = 1.2\n'
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, text), subcommand="diagnose")
        assert err.value.field == "prior.copula.rho"

    @pytest.mark.parametrize("text, field", [
        ("bogus = 1\n", "bogus"),
        ("[sir]\nn_resmple = 10\n", "sir.n_resmple"),
        ("[study]\nsample_sizes = 10\n", "study.sample_sizes"),
        ("repetitions = 2.5\n", "repetitions"),
        ('[study]\nname = "gamma_coverage"\n', "study.name"),
    ])
    def test_strict_rejections(self, tmp_path, text, field):
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, text), subcommand="tau-retention")
        assert err.value.field == field

    def test_lenient_warns(self, tmp_path, caplog):
        with caplog.at_level(logging.WARNING):
            cfg = parse_config(write(tmp_path, "bogus = 1\nseed = 4\n"), subcommand="tau-retention", strict=False)
        assert cfg.study.seed == 4
        assert "bogus" in caplog.text

    def test_parse_error_reports_line(self, tmp_path):
        with pytest.raises(ConfigError) as err:
            parse_config(write(tmp_path, "seed = 1\nrepetitions = = 2\n"), subcommand="tau-retention")
        assert err.value.field == "config" and "line 2" in str(err.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "absent.toml", subcommand="tau-retention")

    def test_threads_precedence(self, tmp_path, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert parse_config(None, subcommand="tau-retention").study.threads == 3
        assert parse_config(write(tmp_path, "threads = 2\n"), subcommand="tau-retention").study.threads == 2
        assert parse_config(write(tmp_path, "threads = 2\n"), {"threads": 5}, "tau-retention").study.threads == 5
        monkeypatch.setenv(THREADS_ENV, "zero")
        with pytest.raises(ConfigError) as err:
            parse_config(None, subcommand="tau-retention")
        assert err.value.field == THREADS_ENV

    def test_threads_not_in_digest(self, tmp_path):
        a = parse_config(None, {"threads": 1}, "tau-retention").study
        b = parse_config(None, {"threads": 8}, "tau-retention").study
        assert a.digest() == b.digest()


class TestMain:
    def test_config_error_exit_code(self, tmp_path, capsys):
        code, _, err = run(["coverage", "--config", write(tmp_path, "[study]\nrhos = [1.2]\n")], capsys)
        assert code == 2
        assert json.loads(err)["field"] == "study.rhos"

    def test_bad_cli_value(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["tau-retention", "--repetitions", "0"])
        assert err.value.code == 2

    def test_diagnose_default(self, tmp_path, capsys):
        code, out, _ = run(["diagnose", "--output", tmp_path], capsys)
        assert code == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["chronically_rejected"] is True
        assert verdict["gap"] == pytest.approx(0.713, abs=1e-3)
        assert json.loads(out)["status"] == "ok"
        assert json.loads((tmp_path / "manifest.json").read_text())["version"] == __version__

    def test_diagnose_matching_vine_not_rejected(self, tmp_path, capsys):
        tau = induced_tau(inverse_fisher(GammaShapeRate(), [0.2, 1.25]), 2).taus[0]
        text = f"""
[model]
kind = "gamma"
[prior]
marginals = [{{family = "gamma", shape = 1000.0, rate = 5000.0}}, {{family = "gamma", shape = 1000.0, rate = 800.0}}]
vine = {{"1,2|∅" = {tau!r}}}
[probe]
kind = "points"
points = [[0.2, 1.25]]
"""
        code, _, _ = run(["diagnose", "--config", write(tmp_path, text), "--output", tmp_path / "o"], capsys)
        assert code == 0
        verdict = json.loads((tmp_path / "o" / "verdict.json").read_text())
        assert verdict["chronically_rejected"] is False
        assert verdict["gap"] < 1e-12

    def test_copula_inspect_default(self, tmp_path, capsys):
        code, out, _ = run(["copula-inspect", "--output", tmp_path], capsys)
        assert code == 0
        with open(tmp_path / "stationary_points.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        maxima = [r for r in rows if r["kind"] == "max"]
        assert len(maxima) == 1
        assert float(maxima[0]["u1"]) == pytest.approx(0.5, abs=1e-3)
        assert float(maxima[0]["u2"]) == pytest.approx(0.5, abs=1e-3)
        assert json.loads(out)["kinds"]["saddle"] == 4

    def test_tau_retention_single_size(self, tmp_path, capsys):
        cfg = write(tmp_path, "[study]\nsample_sizes = [10]\n" + FAST)
        code, out, _ = run(["tau-retention", "--config", cfg, "--repetitions", 10, "--output", tmp_path / "o"],
                           capsys)
        assert code == 0
        with open(tmp_path / "o" / "tau_retention.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1 and rows[0]["repetitions"] == "10"
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["invocation"]["config"]["repetitions"] == 10
        assert json.loads(out)["cells"] == 1

    def test_tau_retention_default_grid(self, tmp_path, capsys):
        code, _, _ = run(["tau-retention", "--config", write(tmp_path, FAST), "--repetitions", 2,
                          "--output", tmp_path / "o"], capsys)
        assert code == 0
        text = (tmp_path / "o" / "tau_retention.csv").read_text()
        assert len(text.strip().splitlines()) == 1 + 5

    def test_failure_marker(self, tmp_path, capsys, monkeypatch):
        def broken(cfg, n, rep):
            raise FloatingPointError("injected")

        monkeypatch.setattr(studies, "_tau_rep", broken)
        cfg = write(tmp_path, "[study]\nsample_sizes = [10]\n" + FAST)
        code, _, err = run(["tau-retention", "--config", cfg, "--repetitions", 2, "--output", tmp_path / "o"],
                           capsys)
        assert code == 1
        marker = json.loads((tmp_path / "o" / "FAILED").read_text())
        assert marker["status"] == "FAILED" and json.loads(err) == marker
        assert (tmp_path / "o" / "failures.csv").exists()

    def test_marker_cleared_on_success(self, tmp_path, capsys):
        out = tmp_path / "o"
        out.mkdir()
        (out / "FAILED").write_text("{}")
        code, _, _ = run(["copula-inspect", "--output", out], capsys)
        assert code == 0 and not (out / "FAILED").exists()


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "copula_lab", "diagnose", "--output", str(tmp_path)],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["chronically_rejected"] is True


def test_version_flag():
    proc = subprocess.run([sys.executable, "-m", "copula_lab", "--version"], capture_output=True, text=True)
    assert __version__ in proc.stdout
