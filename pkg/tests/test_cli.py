"""Tests for the command-line interface and its exit-code contract."""

import json

import pytest
from click.testing import CliRunner

from heraldlab.cli import main
from heraldlab.tracelab import read_trace_container

FIG4_TOML = """\
scenario = "fig4_surface"

[grid]
lambda_sq = [0.01, 0.2]
eta_herald = [0.3, 1.0]
"""

CUSTOM_TOML = """\
scenario = "custom"

[run]
num_shots = 20000
seed = 3
"""


@pytest.fixture
def runner():
    return CliRunner()


class TestValidate:
    def test_good_config(self, runner, tmp_path):
        path = tmp_path / "fig4.toml"
        path.write_text(FIG4_TOML)
        result = runner.invoke(main, ["validate", str(path)])
        assert result.exit_code == 0
        assert "ok: scenario fig4_surface" in result.output

    def test_bad_config_exits_2(self, runner, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text('scenario = "nope"\n')
        result = runner.invoke(main, ["validate", str(path)])
        assert result.exit_code == 2

    def test_bad_toml_exits_2(self, runner, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("scenario = [unclosed\n")
        result = runner.invoke(main, ["validate", str(path)])
        assert result.exit_code == 2


class TestRun:
    def test_writes_outputs_and_manifest(self, runner, tmp_path):
        config = tmp_path / "fig4.toml"
        config.write_text(FIG4_TOML)
        out = tmp_path / "out"
        result = runner.invoke(main, ["run", str(config), "--out-dir", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "fig4_surface.csv").exists()
        assert (out / "fig4_surface.json").exists()
        assert (out / "manifest.json").exists()

    def test_format_flag_restricts_outputs(self, runner, tmp_path):
        config = tmp_path / "fig4.toml"
        config.write_text(FIG4_TOML)
        out = tmp_path / "csv_only"
        result = runner.invoke(main, ["run", str(config), "--out-dir", str(out),
                                      "--format", "csv"])
        assert result.exit_code == 0
        assert (out / "fig4_surface.csv").exists()
        assert not (out / "fig4_surface.json").exists()

    def test_env_out_dir_override(self, runner, tmp_path):
        config = tmp_path / "fig4.toml"
        config.write_text(FIG4_TOML)
        out = tmp_path / "from_env"
        result = runner.invoke(main, ["run", str(config)],
                               env={"HERALDLAB_OUT_DIR": str(out)})
        assert result.exit_code == 0
        assert (out / "fig4_surface.csv").exists()

    def test_env_threads_accepted(self, runner, tmp_path):
        config = tmp_path / "custom.toml"
        config.write_text(CUSTOM_TOML)
        out = tmp_path / "threaded"
        result = runner.invoke(main, ["run", str(config), "--out-dir", str(out)],
                               env={"HERALDLAB_THREADS": "2"})
        assert result.exit_code == 0
        assert (out / "custom.csv").exists()

    def test_flag_beats_env(self, runner, tmp_path):
        config = tmp_path / "fig4.toml"
        config.write_text(FIG4_TOML)
        flag_dir = tmp_path / "flag"
        result = runner.invoke(main, ["run", str(config), "--out-dir", str(flag_dir)],
                               env={"HERALDLAB_OUT_DIR": str(tmp_path / "env")})
        assert result.exit_code == 0
        assert (flag_dir / "fig4_surface.csv").exists()
        assert not (tmp_path / "env").exists()

    def test_compute_failure_exits_3(self, runner, tmp_path):
        # starved statistics trip the z-score gate inside the scenario
        config = tmp_path / "starved.toml"
        config.write_text(
            'scenario = "fig3a_points"\n\n[source]\nlambda_sq = [0.02]\n\n'
            '[detector]\neta_herald = [0.162]\n\n[run]\nnum_shots = 20000\nseed = 2\n'
        )
        result = runner.invoke(main, ["run", str(config), "--out-dir",
                                      str(tmp_path / "out")])
        assert result.exit_code == 3

    def test_seed_override_changes_payload(self, runner, tmp_path):
        config = tmp_path / "custom.toml"
        config.write_text(CUSTOM_TOML)
        for seed, name in ((1, "a"), (2, "b")):
            result = runner.invoke(main, ["run", str(config), "--seed", str(seed),
                                          "--out-dir", str(tmp_path / name)])
            assert result.exit_code == 0
        a = (tmp_path / "a" / "custom.csv").read_bytes()
        b = (tmp_path / "b" / "custom.csv").read_bytes()
        assert a != b


class TestPlot:
    def test_renders_csv(self, runner, tmp_path):
        config = tmp_path / "fig4.toml"
        config.write_text(FIG4_TOML)
        out = tmp_path / "out"
        runner.invoke(main, ["run", str(config), "--out-dir", str(out)])
        result = runner.invoke(main, ["plot", str(out / "fig4_surface.csv"), "fig4"])
        assert result.exit_code == 0
        assert (out / "fig4_surface.svg").read_text().startswith("<svg")

    def test_schema_mismatch_exits_2(self, runner, tmp_path):
        config = tmp_path / "fig4.toml"
        config.write_text(FIG4_TOML)
        out = tmp_path / "out"
        runner.invoke(main, ["run", str(config), "--out-dir", str(out)])
        result = runner.invoke(main, ["plot", str(out / "fig4_surface.csv"), "fig3b"])
        assert result.exit_code == 2


class TestTraces:
    def test_synth_then_analyze(self, runner, tmp_path):
        corpus = tmp_path / "corpus.trcl"
        result = runner.invoke(main, ["traces", "synth", "--out", str(corpus),
                                      "--num", "4000", "--seed", "5"])
        assert result.exit_code == 0, result.output
        container = read_trace_container(corpus)
        assert container.num_traces == 4000
        assert container.labels is not None and container.labels.min() >= 1

        out = tmp_path / "analysis"
        result = runner.invoke(main, ["traces", "analyze", str(corpus),
                                      "--out-dir", str(out)])
        assert result.exit_code == 0, result.output
        summary = json.loads((out / "mixture.json").read_text())
        assert summary["num_traces"] == 4000
        slopes_lines = (out / "slopes.csv").read_text().splitlines()
        assert slopes_lines[1] == "trace_id,slope_mV_per_ns,assigned_n,residual_rms"

    def test_synth_csv_format(self, runner, tmp_path):
        corpus = tmp_path / "corpus.csv"
        result = runner.invoke(main, ["traces", "synth", "--out", str(corpus),
                                      "--num", "50"])
        assert result.exit_code == 0
        assert corpus.read_text().startswith("# schema=trace-corpus.v1")

    def test_bad_corpus_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.trcl"
        bad.write_bytes(b"garbage-not-a-container")
        result = runner.invoke(main, ["traces", "analyze", str(bad)])
        assert result.exit_code == 2

    def test_bad_params_exit_2(self, runner, tmp_path):
        result = runner.invoke(main, ["traces", "synth", "--out",
                                      str(tmp_path / "x.trcl"), "--lambda-sq", "1.5"])
        assert result.exit_code == 2
