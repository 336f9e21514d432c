"""CLI tests: config parsing with overrides and diagnostics, plus end-to-end
subcommand invocations on tiny scenarios."""

import json

import numpy as np
import pytest
import yaml

from connsim import analysis, cli, engine, validation
from connsim.cli import ConfigError, main, parse_config
from connsim.disturbance import DisturbanceConfig


TINY = {
    "t_final": 0.05,
    "t_settle": 0.02,
    "obstacles": {"count": 5},
}


def tiny_config_file(tmp_path, extra=None):
    data = dict(TINY)
    if extra:
        data.update(extra)
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


class TestParseConfig:
    def test_no_file_gives_defaults(self):
        assert parse_config() == engine.ScenarioConfig()

    def test_sections_and_top_keys(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump({
            "n_agents": 6,
            "world_bounds": [[-2.0, -2.0], [2.0, 2.0]],
            "disturbance": {"p_fail": 0.25, "eta": 0.5},
            "control": {"gamma": 12.0},
            "range": {"radius": 3.0},
        }))
        cfg = parse_config(path)
        assert cfg.n_agents == 6
        assert cfg.world_bounds == ((-2.0, -2.0), (2.0, 2.0))
        assert cfg.disturbance.p_fail == 0.25 and cfg.disturbance.eta == 0.5
        assert cfg.control.gamma == 12.0
        assert cfg.range_params.radius == 3.0

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("")
        assert parse_config(path) == engine.ScenarioConfig()

    def test_dotted_overrides(self, tmp_path):
        cfg = parse_config(tiny_config_file(tmp_path),
                           ["disturbance.p_fail=0.4", "seed=7",
                            "actuation.ideal=true"])
        assert cfg.disturbance.p_fail == 0.4
        assert cfg.seed == 7
        assert cfg.actuation.ideal is True

    def test_unknown_top_key_named_in_error(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("speling: 1\n")
        with pytest.raises(ConfigError, match="speling"):
            parse_config(path)

    def test_unknown_section_key_named_in_error(self):
        with pytest.raises(ConfigError, match="disturbance.p_fial"):
            parse_config(None, ["disturbance.p_fial=0.2"])

    def test_invariant_violation_reported(self):
        with pytest.raises(ConfigError, match="invalid"):
            parse_config(None, ["disturbance.p_fail=1.5"])

    def test_malformed_override(self):
        with pytest.raises(ConfigError, match="key=value"):
            parse_config(None, ["justakey"])

    def test_non_mapping_file_rejected(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError, match="mapping"):
            parse_config(path)

    def test_round_trip_through_dict(self, tmp_path):
        cfg = engine.ScenarioConfig(
            n_agents=4, seed=3,
            disturbance=DisturbanceConfig(p_fail=0.1, eta=0.2))
        path = tmp_path / "c.yaml"
        path.write_text(yaml.safe_dump(cli.config_to_dict(cfg)))
        assert parse_config(path) == cfg


class TestRunCommand:
    def test_outputs_and_exit_code(self, tmp_path, capsys):
        cfg_path = tiny_config_file(tmp_path)
        out = tmp_path / "out"
        rc = main(["run", "-c", str(cfg_path), "-o", str(out), "--seed", "2"])
        assert rc == 0
        for name in ("trace.csv", "metrics.json", "config_effective.yaml",
                     "metadata.json", "seeds.txt", "plot_trace.py"):
            assert (out / name).exists(), name
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["outcome"] in ("maintained", "lost")
        eff = yaml.safe_load((out / "config_effective.yaml").read_text())
        assert eff["seed"] == 2
        assert (out / "seeds.txt").read_text() == "2\n"
        assert "outcome:" in capsys.readouterr().out

    def test_rerun_byte_identical(self, tmp_path):
        cfg_path = tiny_config_file(tmp_path)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", "-c", str(cfg_path), "-o", str(a)]) == 0
        assert main(["run", "-c", str(cfg_path), "-o", str(b)]) == 0
        assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()
        assert (a / "metrics.json").read_bytes() == (b / "metrics.json").read_bytes()

    def test_bad_config_exits_1(self, tmp_path, capsys):
        path = tmp_path / "c.yaml"
        path.write_text("nope: 1\n")
        rc = main(["run", "-c", str(path), "-o", str(tmp_path / "out")])
        assert rc == 1
        assert "nope" in capsys.readouterr().err

    def test_unplaceable_scenario_exits_1(self, tmp_path, capsys):
        cfg_path = tiny_config_file(
            tmp_path, {"world_bounds": [[-500.0, -500.0], [500.0, 500.0]],
                       "max_init_retries": 2})
        rc = main(["run", "-c", str(cfg_path), "-o", str(tmp_path / "out")])
        assert rc == 1


class TestSweepCommand:
    def test_grid_outputs(self, tmp_path, capsys):
        cfg_path = tiny_config_file(tmp_path)
        out = tmp_path / "sweep"
        rc = main(["sweep", "-c", str(cfg_path), "-o", str(out),
                   "--p-fail", "0,0.2", "--eta", "0", "--seeds", "2"])
        assert rc == 0
        assert (out / "summary.csv").exists()
        assert (out / "summary.txt").exists()
        assert (out / "plot_summary.py").exists()
        for cell in ("pfail0_eta0", "pfail0.2_eta0"):
            for seed in (0, 1):
                assert (out / "cells" / cell / f"seed{seed}.csv").exists()
        lines = (out / "summary.csv").read_text().splitlines()
        assert len(lines) == 3  # header + 2 cells
        assert "maintained" in capsys.readouterr().out

    def test_seed_list(self, tmp_path):
        cfg_path = tiny_config_file(tmp_path)
        out = tmp_path / "sweep"
        rc = main(["sweep", "-c", str(cfg_path), "-o", str(out),
                   "--p-fail", "0", "--eta", "0", "--seed-list", "5,9"])
        assert rc == 0
        assert (out / "cells" / "pfail0_eta0" / "seed5.csv").exists()
        assert (out / "cells" / "pfail0_eta0" / "seed9.csv").exists()

    def test_bad_grid_exits_1(self, tmp_path, capsys):
        rc = main(["sweep", "-o", str(tmp_path / "out"),
                   "--p-fail", "abc", "--eta", "0"])
        assert rc == 1


class TestSpectrumCommand:
    def test_on_written_trace(self, tmp_path, capsys):
        cfg_path = tiny_config_file(tmp_path)
        run_out = tmp_path / "run"
        assert main(["run", "-c", str(cfg_path), "-o", str(run_out)]) == 0
        spec_out = tmp_path / "spec"
        rc = main(["spectrum", str(run_out / "trace.csv"),
                   "-o", str(spec_out)])
        assert rc == 0
        assert (spec_out / "spectrum.csv").exists()
        assert (spec_out / "plot_spectrum.py").exists()
        assert "hf_fraction" in capsys.readouterr().out

    def test_missing_trace_exits_2(self, tmp_path, capsys):
        rc = main(["spectrum", str(tmp_path / "nothere.csv"),
                   "-o", str(tmp_path / "out")])
        assert rc == 2


class TestValidateCommand:
    def test_success_exit_0(self, monkeypatch, capsys):
        monkeypatch.setattr(validation, "run_all",
                            lambda report=print: (report("ok"), True)[1])
        assert main(["validate"]) == 0

    def test_failure_exit_3(self, monkeypatch):
        monkeypatch.setattr(validation, "run_all",
                            lambda report=print: False)
        assert main(["validate"]) == 3
