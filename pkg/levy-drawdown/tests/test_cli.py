"""End-to-end tests for the levy-drawdown command line."""

from __future__ import annotations

import json

import numpy as np
import pytest

from levy_drawdown import __version__
from levy_drawdown.cli.main import EXIT_INVALID, EXIT_OK, build_parser, main
from levy_drawdown.cli.models import GridBlock, ModelBlock, ResultDocument, RunConfig
from levy_drawdown.cli.presets import available_presets, load_preset
from levy_drawdown.cli.services.density_service import density_summary
from levy_drawdown.cli.services.output_service import OutputService, read_result_csv
from levy_drawdown.cli.settings import load_settings
from levy_drawdown.errors import ParameterError
from levy_drawdown.levy_models import BrownianDrift
from levy_drawdown.scale_functions import build_scale_set, w, w1

BROWNIAN = {"family": "brownian", "mu": 0.3, "sigma": 1.0}
LOADED_CL = {"family": "cramer_lundberg", "c": 2.0, "lambda0": 1.0, "mu_claim": 1.0}
TINY_SIM = {"n_paths": 400, "chunk_size": 200, "horizon": 20.0}


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("LEVY_DRAWDOWN_LOG_LEVEL", "LEVY_DRAWDOWN_THREADS", "LEVY_DRAWDOWN_PRESET_DIR"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setattr("levy_drawdown.cli.main.load_dotenv", lambda *args, **kwargs: False)


@pytest.fixture
def write_config(tmp_path):
    def _write(payload: dict, name: str = "run.json"):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path

    return _write


def run_cli(command: str, config, out, *extra: str) -> int:
    return main([command, "--config", str(config), "--out", str(out), *extra])


# ======================================================================
# analytic commands
# ======================================================================

class TestProb:
    def test_brownian_ruin_column(self, write_config, tmp_path):
        config = write_config(
            {
                "command": "prob",
                "model": BROWNIAN,
                "cases": {"case_I": {}},
                "experiment": {"sweep": "x", "grid": {"start": 1.0, "stop": 3.0, "step": 1.0}},
            }
        )
        out = tmp_path / "prob.csv"
        assert run_cli("prob", config, out) == EXIT_OK
        header, frame = read_result_csv(out)
        assert header["command"] == "prob"
        assert header["version"] == __version__
        assert len(header["config_sha256"]) == 64
        assert list(frame.columns) == ["x", "case_I"]
        np.testing.assert_allclose(frame["case_I"], np.exp(-0.6 * frame["x"]), atol=1e-6)

    def test_parameter_sweep_with_mc(self, write_config, tmp_path):
        config = write_config(
            {
                "model": LOADED_CL,
                "cases": {"ruin": {}},
                "experiment": {"x": 1.0, "sweep": "c", "grid": {"start": 2.0, "stop": 2.0, "step": 1.0}},
                "sim": {**TINY_SIM, "horizon": 60.0},
            }
        )
        out = tmp_path / "sweep.csv"
        assert run_cli("prob", config, out, "--with-mc") == EXIT_OK
        header, frame = read_result_csv(out)
        assert list(frame.columns) == ["c", "ruin", "ruin_mc", "ruin_mc_stderr"]
        assert frame["ruin"][0] == pytest.approx(0.5 * np.exp(-0.5), abs=1e-6)
        assert float(header["summary.max_mc_z"]) < 5.0

    def test_american_put_penalty_column(self, write_config, tmp_path):
        base = {
            "model": LOADED_CL,
            "cases": {"case_I": {}, "case_IV": {"variant": "linear", "a": 0.6, "b": 0.5}},
            "experiment": {"sweep": "x", "grid": {"start": 1.0, "stop": 2.0, "step": 1.0}},
        }
        put = {**base, "experiment": {**base["experiment"], "omega": "american_put", "strike": 1.0, "log_price_shift": -3.0}}
        assert run_cli("prob", write_config(base, "unit.json"), tmp_path / "unit.csv") == EXIT_OK
        assert run_cli("prob", write_config(put, "put.json"), tmp_path / "put.csv") == EXIT_OK
        _, unit = read_result_csv(tmp_path / "unit.csv")
        _, priced = read_result_csv(tmp_path / "put.csv")
        assert list(priced.columns) == list(unit.columns)
        for name in ("case_I", "case_IV"):
            assert np.all(priced[name] > 0.0)
            assert np.all(priced[name] < unit[name] - 1e-3)
        assert priced["case_I"][0] == pytest.approx(0.5 * np.exp(-0.5) * (1.0 - 4.0 * np.exp(-3.0)), rel=1e-4)

    def test_threads_do_not_change_sweep(self, write_config, tmp_path):
        config = write_config(
            {
                "model": BROWNIAN,
                "cases": {"case_I": {}, "case_II": {"variant": "linear", "a": 0.3, "b": 0.5}},
                "experiment": {"sweep": "x", "grid": {"start": 1.0, "stop": 3.0, "step": 0.5}},
            }
        )
        assert run_cli("prob", config, tmp_path / "serial.csv") == EXIT_OK
        assert run_cli("prob", config, tmp_path / "pooled.csv", "--threads", "2") == EXIT_OK
        assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "pooled.csv").read_bytes()

    def test_sweeping_foreign_parameter_fails(self, write_config, tmp_path, capsys):
        config = write_config({"model": BROWNIAN, "experiment": {"sweep": "c", "grid": {"start": 1.0, "stop": 2.0, "step": 1.0}}})
        assert run_cli("prob", config, tmp_path / "x.csv") == EXIT_INVALID
        assert "cannot sweep 'c'" in capsys.readouterr().err


class TestExit:
    def test_ruin_exit_matches_scale_ratio(self, write_config, tmp_path):
        config = write_config(
            {
                "model": {"family": "jump_diffusion", "c": 3.0, "sigma": 0.5, "lambda0": 2.0, "alpha": 2.0},
                "experiment": {"x": 1.0, "q": 0.2, "s_grid": {"start": 1.0, "stop": 4.0, "step": 0.5}},
            }
        )
        out = tmp_path / "exit.csv"
        assert run_cli("exit", config, out) == EXIT_OK
        _, frame = read_result_csv(out)
        assert frame["s"].min() > 1.0
        np.testing.assert_allclose(frame["exit_prob"], frame["scale_ratio"], rtol=1e-8)


class TestTaxAndDividend:
    def test_untaxed_brownian_profile(self, write_config, tmp_path):
        config = write_config(
            {
                "model": BROWNIAN,
                "drawdown": {"variant": "tax", "gamma": [0.0]},
                "experiment": {"x": 1.0, "s_grid": {"start": 1.5, "stop": 4.0, "step": 0.5}},
            }
        )
        out = tmp_path / "tax.csv"
        assert run_cli("tax", config, out) == EXIT_OK
        header, frame = read_result_csv(out)
        sset = build_scale_set(BrownianDrift(mu=0.3, sigma=1.0), 0.0)
        s = frame["s"].to_numpy()
        expected = w(sset, 1.0) * w1(sset, s) / w(sset, s) ** 2
        np.testing.assert_allclose(frame["total"], expected, rtol=1e-6)
        assert (frame["jump"] == 0.0).all()
        assert float(header["summary.ruin_probability"]) == pytest.approx(np.exp(-0.6), abs=1e-6)

    def test_dividend_atoms_last(self, write_config, tmp_path):
        config = write_config(
            {
                "model": LOADED_CL,
                "drawdown": {"variant": "barrier", "barrier": 3.0},
                "experiment": {"x": 1.0},
            }
        )
        out = tmp_path / "dividend.csv"
        assert run_cli("dividend", config, out) == EXIT_OK
        header, frame = read_result_csv(out)
        assert list(frame["part"].unique()) == ["density", "atom"]
        assert frame["part"].iloc[-1] == "atom"
        assert frame["s"].iloc[-1] == 3.0
        assert (frame["creeping"] == 0.0).all()
        assert float(header["summary.ruin_probability"]) == pytest.approx(1.0, abs=1e-6)

    def test_dividend_needs_barrier(self, write_config, tmp_path, capsys):
        config = write_config({"model": LOADED_CL})
        assert run_cli("dividend", config, tmp_path / "d.csv") == EXIT_INVALID
        assert "barrier" in capsys.readouterr().err


class TestJointDensity:
    def test_small_grid(self, write_config, tmp_path):
        config = write_config(
            {
                "model": BROWNIAN,
                "experiment": {
                    "x": 1.0,
                    "t1_grid": {"start": 1.0, "stop": 2.0, "step": 1.0},
                    "t2_grid": {"start": 0.5, "stop": 1.0, "step": 0.5},
                },
                "inversion": {"n_terms": 24, "euler_terms": 10},
            }
        )
        out = tmp_path / "density.csv"
        assert run_cli("joint-density", config, out) == EXIT_OK
        header, frame = read_result_csv(out)
        assert list(frame.columns) == ["t1", "t2", "density"]
        assert len(frame) == 4
        assert np.isfinite(frame["density"]).all()
        assert "summary.box_mass" in header

    def test_density_summary(self):
        t = np.array([0.0, 1.0, 2.0, 3.0])
        values = np.zeros((4, 4))
        values[2, 1] = 2.0
        summary = density_summary(t, t, values)
        assert summary["max_density"] == 2.0
        assert (summary["peak_t1"], summary["peak_t2"]) == (2.0, 1.0)
        assert summary["box_mass"] == pytest.approx(2.0)


# ======================================================================
# simulation and reproducibility
# ======================================================================

class TestSimulate:
    def config(self, write_config):
        return write_config({"model": LOADED_CL, "drawdown": {"variant": "linear", "a": 0.6, "b": 0.5}, "sim": TINY_SIM})

    def test_same_seed_same_bytes(self, write_config, tmp_path):
        config = self.config(write_config)
        first, second = tmp_path / "a.csv", tmp_path / "nested" / "b.csv"
        assert run_cli("simulate", config, first, "--seed", "123") == EXIT_OK
        assert run_cli("simulate", config, second, "--seed", "123") == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
        header, frame = read_result_csv(first)
        assert header["seed"] == "123"
        assert len(frame) == TINY_SIM["n_paths"]
        assert list(frame.columns)[:3] == ["hit", "tau", "ell"]

    def test_seed_changes_output(self, write_config, tmp_path):
        config = self.config(write_config)
        assert run_cli("simulate", config, tmp_path / "a.csv", "--seed", "1") == EXIT_OK
        assert run_cli("simulate", config, tmp_path / "b.csv", "--seed", "2") == EXIT_OK
        assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "b.csv").read_bytes()

    def test_threads_do_not_change_output(self, write_config, tmp_path):
        config = self.config(write_config)
        assert run_cli("simulate", config, tmp_path / "a.csv") == EXIT_OK
        assert run_cli("simulate", config, tmp_path / "b.csv", "--threads", "2") == EXIT_OK
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_json_document(self, write_config, tmp_path):
        config = self.config(write_config)
        out = tmp_path / "sim.json"
        assert run_cli("simulate", config, out, "--format", "json", "--seed", "9") == EXIT_OK
        document = ResultDocument.model_validate_json(out.read_text(encoding="utf-8"))
        assert document.command == "simulate"
        assert document.seed == 9
        assert document.columns[:2] == ["hit", "tau"]
        assert len(document.rows) == TINY_SIM["n_paths"]
        assert document.summary["n_paths"] == TINY_SIM["n_paths"]
        assert "output" not in document.config

    def test_stdout_when_no_path(self, write_config, capsys):
        config = self.config(write_config)
        assert main(["simulate", "--config", str(config)]) == EXIT_OK
        assert capsys.readouterr().out.startswith("# command=simulate\n")


class TestOutputService:
    def test_hash_ignores_output_block(self):
        base = RunConfig.model_validate({"model": BROWNIAN})
        moved = base.model_copy(update={"output": base.output.model_copy(update={"path": "elsewhere.csv"})})
        assert OutputService.config_sha256(base) == OutputService.config_sha256(moved)

    def test_hash_tracks_parameters(self):
        one = RunConfig.model_validate({"model": BROWNIAN})
        two = RunConfig.model_validate({"model": {**BROWNIAN, "mu": 0.4}})
        assert OutputService.config_sha256(one) != OutputService.config_sha256(two)


# ======================================================================
# configs, presets and errors
# ======================================================================

class TestConfigErrors:
    def test_unknown_key(self, write_config, tmp_path, capsys):
        config = write_config({"model": BROWNIAN, "experiment": {"x": 1.0, "colour": "blue"}})
        assert run_cli("prob", config, tmp_path / "x.csv") == EXIT_INVALID
        err = capsys.readouterr().err
        assert "invalid config" in err
        assert "experiment.colour" in err

    def test_missing_family_parameter(self, write_config, tmp_path, capsys):
        config = write_config({"model": {"family": "brownian", "mu": 0.3}})
        assert run_cli("prob", config, tmp_path / "x.csv") == EXIT_INVALID
        assert "needs sigma" in capsys.readouterr().err

    def test_command_mismatch(self, write_config, tmp_path, capsys):
        config = write_config({"command": "tax", "model": BROWNIAN})
        assert run_cli("prob", config, tmp_path / "x.csv") == EXIT_INVALID
        assert "not 'prob'" in capsys.readouterr().err

    def test_missing_file(self, tmp_path, capsys):
        assert run_cli("prob", tmp_path / "nope.json", tmp_path / "x.csv") == EXIT_INVALID
        assert "not found" in capsys.readouterr().err

    def test_unknown_preset(self, capsys):
        assert main(["prob", "--preset", "fig9z"]) == EXIT_INVALID
        assert "unknown preset" in capsys.readouterr().err

    def test_invalid_model_values(self, write_config, tmp_path, capsys):
        config = write_config({"model": {"family": "brownian", "mu": 0.3, "sigma": -1.0}})
        assert run_cli("prob", config, tmp_path / "x.csv") == EXIT_INVALID
        assert capsys.readouterr().err.startswith("error:")

    def test_config_or_preset_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["prob"])

    def test_no_command(self, capsys):
        assert main([]) == EXIT_INVALID
        assert "levy-drawdown" in capsys.readouterr().err


class TestModels:
    def test_grid_values_include_stop(self):
        assert len(GridBlock(start=1.0, stop=10.0, step=0.5).values()) == 19
        np.testing.assert_allclose(GridBlock(start=1.1, stop=2.1, step=0.1).values()[-1], 2.1)

    def test_with_param(self):
        block = ModelBlock(**BROWNIAN)
        assert block.with_param("mu", 0.7).build() == BrownianDrift(mu=0.7, sigma=1.0)
        with pytest.raises(ParameterError):
            block.with_param("alpha", 1.0)

    def test_default_cases(self):
        run = RunConfig.model_validate({"model": BROWNIAN})
        assert list(run.case_blocks()) == ["case_I", "case_II", "case_III", "case_IV"]


class TestPresets:
    def test_all_presets_load(self):
        names = available_presets()
        assert {"fig1a", "fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b"} <= set(names)
        for name in names:
            run = load_preset(name)
            assert run.command in ("prob", "joint-density")
            run.model.build()

    def test_figure_one_grid(self):
        run = load_preset("fig1a")
        assert len(run.experiment.grid.values()) == 19
        assert run.sim.seed == 20240101

    def test_list_presets(self, capsys):
        assert main(["--list-presets"]) == EXIT_OK
        assert "fig1a" in capsys.readouterr().out.split()

    def test_preset_dir_shadows(self, tmp_path, monkeypatch, capsys):
        (tmp_path / "mine.json").write_text(json.dumps({"command": "exit", "model": BROWNIAN}), encoding="utf-8")
        monkeypatch.setenv("LEVY_DRAWDOWN_PRESET_DIR", str(tmp_path))
        assert main(["--list-presets"]) == EXIT_OK
        assert "mine" in capsys.readouterr().out.split()
        assert main(["exit", "--preset", "mine", "--out", str(tmp_path / "e.csv")]) == EXIT_OK

    @pytest.mark.slow
    def test_figure_one_first_point(self, tmp_path):
        out = tmp_path / "fig1a.csv"
        assert main(["prob", "--preset", "fig1a", "--out", str(out)]) == EXIT_OK
        _, frame = read_result_csv(out)
        assert frame["case_I"][0] == pytest.approx(0.75793, abs=1e-4)
        assert (frame["case_IV"] >= frame["case_III"]).all()


class TestSettings:
    def test_defaults(self):
        settings = load_settings()
        assert (settings.log_level, settings.threads, settings.preset_dir) == ("WARNING", 1, None)

    def test_bad_threads(self, monkeypatch, capsys):
        monkeypatch.setenv("LEVY_DRAWDOWN_THREADS", "many")
        with pytest.raises(ValueError):
            load_settings()
        assert main(["--list-presets"]) == EXIT_INVALID
        assert "LEVY_DRAWDOWN_THREADS" in capsys.readouterr().err

    def test_bad_log_level(self, monkeypatch):
        monkeypatch.setenv("LEVY_DRAWDOWN_LOG_LEVEL", "chatty")
        with pytest.raises(ValueError):
            load_settings()

    def test_log_level_case_insensitive(self, monkeypatch):
        monkeypatch.setenv("LEVY_DRAWDOWN_LOG_LEVEL", "debug")
        assert load_settings().log_level == "DEBUG"
