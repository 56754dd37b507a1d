import json
import os

import numpy as np
import pytest

from regulab.cli import main
from regulab.errors import ConfigurationError
from regulab.harness import ExperimentConfig, run_experiment

MINIMAL = {
    "schema": 1,
    "name": "flat_minimal",
    "operator": {"tag": "laplace"},
    "domain": {"kind": "half_ball", "params": []},
    "grid": {"h": 1 / 64, "R": 1.0, "n_dirs": 16},
    "data": {"g": {"kind": "arc_modes", "params": [[1.0, 0.3]]},
             "f": {"kind": "zero"}},
    "iteration": {"eta": 0.5, "alpha": 0.5, "r_start": 0.25},
    "analysis": "c1a",
}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestExperimentConfig:
    def test_schema_required(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig({"name": "x"})

    def test_unknown_analysis(self):
        doc = dict(MINIMAL, analysis="c3a")
        with pytest.raises(ConfigurationError):
            ExperimentConfig(doc)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_file(tmp_path / "nope.json")

    def test_unknown_operator_tag(self):
        doc = dict(MINIMAL, operator={"tag": "brownian"})
        cfg = ExperimentConfig(doc)
        with pytest.raises(ConfigurationError):
            cfg.build_operator()

    def test_unknown_g_kind(self):
        doc = dict(MINIMAL, data={"g": {"kind": "noise"}, "f": {"kind": "zero"}})
        cfg = ExperimentConfig(doc)
        with pytest.raises(ConfigurationError):
            cfg.build_data(cfg.build_operator())

    def test_manufactured_f_needs_field(self):
        doc = dict(MINIMAL, data={"g": {"kind": "zero"},
                                  "f": {"kind": "manufactured"}})
        cfg = ExperimentConfig(doc)
        with pytest.raises(ConfigurationError):
            cfg.build_data(cfg.build_operator())

    def test_jet_power_data_and_power_rhs(self, tmp_path):
        # jet-plus-Holder boundary data with a decaying power right-hand side
        doc = dict(
            MINIMAL,
            name="jet_power",
            data={
                "g": {"kind": "field", "field": "jet_power",
                      "params": [0.0, 0.1, 0.5, 0.0, 0.2, 0.0, 0.05, 1.5]},
                "f": {"kind": "power", "K": 0.1, "exponent": 0.5},
            },
            analysis="none",
        )
        cfg = ExperimentConfig(doc)
        summary = run_experiment(cfg, str(tmp_path / "run"))
        assert summary["sup_u"] > 0.0
        # the observed f-norm decay coefficient is recorded
        assert summary["K_f_observed"] > 0.0

    def test_isaacs_needs_enough_directions(self):
        from regulab.geometry import make_domain
        from regulab.grid import build_grid
        from regulab.operators import catalog_operator
        from regulab.stencil import discretize

        grid = build_grid(make_domain("half_ball"), 1 / 16, 1.0, n_dirs=4)
        with pytest.raises(ConfigurationError):
            discretize(catalog_operator("isaacs", 1, 2), grid, 4)


class TestRunExperiment:
    def test_outputs_written(self, tmp_path):
        cfg = ExperimentConfig(MINIMAL)
        out = tmp_path / "run"
        summary = run_experiment(cfg, str(out))
        for name in ("trace.csv", "summary.json", "rates.svg", "field.csv"):
            assert (out / name).exists(), name
        assert summary["slope"] > 1.0
        saved = json.loads((out / "summary.json").read_text())
        assert saved["name"] == "flat_minimal"
        assert saved["grid"]["counts"]["interior"] > 0
        # one CSV row per usable dyadic scale
        n_scales = len(cfg.iteration.scales(cfg.h))
        rows = (out / "trace.csv").read_text().strip().splitlines()
        assert len(rows) == n_scales + 1

    def test_byte_stable(self, tmp_path):
        cfg = ExperimentConfig(MINIMAL)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        run_experiment(cfg, str(out1))
        run_experiment(cfg, str(out2))
        for name in ("trace.csv", "summary.json", "rates.svg"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_manufactured_rhs(self, tmp_path):
        doc = dict(
            MINIMAL,
            name="isaacs_c2a",
            operator={"tag": "isaacs", "lam": 1.0, "Lam": 2.0},
            data={
                "g": {"kind": "field", "field": "c2a_jet",
                      "params": [3.0, -3.0 / 7.0, 0.05]},
                "f": {"kind": "manufactured"},
            },
            iteration={"eta": 0.5, "alpha": 0.25, "r_start": 0.25},
            analysis="c2a",
        )
        cfg = ExperimentConfig(doc)
        summary = run_experiment(cfg, str(tmp_path / "run"))
        assert abs(summary["D2u0_mixed"][0] - 3.0) < 0.05
        assert summary["max_constraint_residual"] <= 1e-8

    def test_partial_outputs_removed_on_error(self, tmp_path):
        doc = dict(MINIMAL, grid={"h": 1 / 64, "R": 1.0, "n_dirs": 6})
        cfg = ExperimentConfig(doc)
        out = tmp_path / "bad"
        with pytest.raises(ConfigurationError) as ei:
            run_experiment(cfg, str(out))
        assert "stage:grid" in str(ei.value)
        assert not out.exists()


class TestCli:
    def test_classify_slit(self, capsys):
        rc = main(["classify", "--domain", "slit_ball", "--k", "2",
                   "--alpha", "0.5"])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)
        assert rec["coeffs"]["c2"][0][0] == pytest.approx(0.5, abs=1e-6)
        assert rec["K"] <= 1e-6

    def test_rates_missing_config(self, capsys):
        rc = main(["rates", "--config", "does_not_exist.json"])
        assert rc == 2

    def test_rates_runs(self, tmp_path, capsys):
        cfgp = write_config(tmp_path, MINIMAL)
        rc = main(["rates", "--config", cfgp, "--out", str(tmp_path / "out")])
        assert rc == 0
        line = json.loads(capsys.readouterr().out)
        assert line["slope"] > 1.0

    def test_solve_unknown_operator_exits_2(self, tmp_path, capsys):
        doc = dict(MINIMAL, operator={"tag": "brownian"})
        cfgp = write_config(tmp_path, doc)
        rc = main(["solve", "--config", cfgp, "--out", str(tmp_path / "out")])
        assert rc == 2

    def test_barrier_cli(self, capsys):
        rc = main(["barrier", "--deltas", "0.125", "--h-factor", "4"])
        assert rc == 0
        rec = json.loads(capsys.readouterr().out)
        row = rec["rows"][0]
        assert -1e-10 <= row["min_v"] and row["max_v"] <= 1 + 1e-10

    def test_usage_error_exit_code(self):
        with pytest.raises(SystemExit) as ei:
            main(["frobnicate"])
        assert ei.value.code == 2
