"""Tests for scenario configuration, execution, and output determinism."""

import json

import pytest

from heraldlab import ConfigError
from heraldlab.scenarios import (
    SCENARIOS,
    ScenarioConfig,
    read_csv_dataset,
    run_scenario,
)

SMALL_CONFIGS = {
    "fig3a_curves": {"scenario": "fig3a_curves",
                     "source": {"lambda_sq": [0.01, 0.05, 0.1]},
                     "detector": {"eta_herald": [0.296]}},
    "fig3a_points": {"scenario": "fig3a_points",
                     "source": {"lambda_sq": [0.05]},
                     "detector": {"eta_herald": [0.296]},
                     "run": {"num_shots": 60_000, "seed": 5}},
    "fig3b_sweep": {"scenario": "fig3b_sweep",
                    "source": {"lambda_sq": [0.1]},
                    "detector": {"eta_herald": [0.3]},
                    "run": {"num_shots": 150_000, "seed": 6},
                    "sweep": {"steps": 8}},
    "fig4_surface": {"scenario": "fig4_surface",
                     "grid": {"lambda_sq": [0.01, 0.2], "eta_herald": [0.3, 1.0]}},
    "fig2b_histogram": {"scenario": "fig2b_histogram",
                        "traces": {"num_traces": 20_000}},
    "klyshko_calibration": {"scenario": "klyshko_calibration",
                            "run": {"num_shots": 60_000, "seed": 7}},
    "custom": {"scenario": "custom", "run": {"num_shots": 30_000, "seed": 8}},
}

EXPECTED_HEADERS = {
    "fig3a_curves": "detector,eta_herald,lambda_sq,herald_probability,g2",
    "fig3a_points": ("eta_herald,lambda_sq,filtered,herald_probability,"
                     "g2,g2_sigma,model_g2,z_score"),
    "fig3b_sweep": ("edge_mv_per_ns,filtered_g2,filtered_g2_sigma,"
                    "retained_fraction,retained_events"),
    "fig4_surface": "lambda_sq,eta_herald,improvement_ratio",
    "fig2b_histogram": "bin_center,count,mixture_fit",
    "klyshko_calibration": "pump_power,lambda_sq,klyshko_estimate,estimate_sigma",
    "custom": ("eta_herald,lambda_sq,filtered,shots,s_h,c_1h,c_2h,c_12h,"
               "s_1,s_2,s_h_multi,g2,g2_sigma,klyshko_estimate"),
}


class TestConfigValidation:
    def test_unknown_scenario(self):
        with pytest.raises(ConfigError, match="scenario"):
            ScenarioConfig.from_dict({"scenario": "fig9"})

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown config section"):
            ScenarioConfig.from_dict({"scenario": "custom", "sauce": {}})

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown keys"):
            ScenarioConfig.from_dict({"scenario": "custom", "run": {"shotz": 5}})

    def test_domain_checks(self):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"scenario": "custom",
                                      "source": {"lambda_sq": [1.5]}})
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"scenario": "custom",
                                      "detector": {"eta_herald": [-0.1]}})
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict({"scenario": "custom",
                                      "run": {"num_shots": 0}})

    def test_bad_format_rejected(self):
        with pytest.raises(ConfigError, match="formats"):
            ScenarioConfig.from_dict({"scenario": "custom",
                                      "outputs": {"formats": ["yaml"]}})

    def test_overrides_win(self, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS["custom"],
                                          out_dir=tmp_path, seed=99, threads=2)
        assert config.seed == 99
        assert config.threads == 2
        assert config.out_dir == tmp_path

    def test_hash_independent_of_outputs(self, tmp_path):
        a = ScenarioConfig.from_dict(SMALL_CONFIGS["custom"], out_dir=tmp_path / "a")
        b = ScenarioConfig.from_dict(SMALL_CONFIGS["custom"], out_dir=tmp_path / "b")
        assert a.config_hash() == b.config_hash()


class TestScenarioRuns:
    @pytest.mark.parametrize("scenario", SCENARIOS)
    def test_runs_and_pins_schema(self, scenario, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS[scenario], out_dir=tmp_path)
        manifest = run_scenario(config)
        csv_path = tmp_path / f"{scenario}.csv"
        lines = csv_path.read_text().splitlines()
        assert lines[0] == f"# schema={scenario}.v1"
        assert lines[1] == EXPECTED_HEADERS[scenario]
        assert len(lines) > 2
        payload = json.loads((tmp_path / f"{scenario}.json").read_text())
        assert payload["schema"] == f"{scenario}.v1"
        assert payload["columns"] == EXPECTED_HEADERS[scenario].split(",")
        assert (tmp_path / "manifest.json").exists()
        assert set(manifest.outputs) == {f"{scenario}.csv", f"{scenario}.json",
                                         f"{scenario}.svg"}

    @pytest.mark.parametrize("scenario", ["custom", "fig4_surface", "fig2b_histogram"])
    def test_rerun_is_checksum_identical(self, scenario, tmp_path):
        config_a = ScenarioConfig.from_dict(SMALL_CONFIGS[scenario], out_dir=tmp_path / "a")
        config_b = ScenarioConfig.from_dict(SMALL_CONFIGS[scenario], out_dir=tmp_path / "b")
        manifest_a = run_scenario(config_a)
        manifest_b = run_scenario(config_b)
        assert manifest_a.outputs == manifest_b.outputs
        assert manifest_a.config_hash == manifest_b.config_hash

    def test_different_seed_changes_mc_payload(self, tmp_path):
        base = dict(SMALL_CONFIGS["custom"])
        a = run_scenario(ScenarioConfig.from_dict(base, out_dir=tmp_path / "a", seed=1))
        b = run_scenario(ScenarioConfig.from_dict(base, out_dir=tmp_path / "b", seed=2))
        assert a.outputs["custom.csv"] != b.outputs["custom.csv"]

    def test_fig4_marks_divergent_column(self, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS["fig4_surface"], out_dir=tmp_path)
        run_scenario(config)
        dataset = read_csv_dataset(tmp_path / "fig4_surface.csv")
        by_eta = {e: r for e, r in zip(dataset["eta_herald"], dataset["improvement_ratio"])}
        assert by_eta["1"] == "inf"
        assert float(by_eta["0.3"]) > 1.0

    def test_fig3a_points_z_scores_within_gate(self, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS["fig3a_points"], out_dir=tmp_path)
        run_scenario(config)
        payload = json.loads((tmp_path / "fig3a_points.json").read_text())
        assert payload["metadata"]["outlier_fraction"] <= 0.01
        assert all(abs(row["z_score"]) < 4.0 for row in payload["rows"])

    def test_fig2b_metadata_reports_distances(self, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS["fig2b_histogram"], out_dir=tmp_path)
        run_scenario(config)
        meta = json.loads((tmp_path / "fig2b_histogram.json").read_text())["metadata"]
        assert meta["tv_binned_vs_true"] < meta["tv_click_vs_true"]
        assert meta["p_report2_given1"] < meta["p_report1_given2"]
        assert len(meta["components"]) >= 2

    def test_klyshko_metadata_has_fit(self, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS["klyshko_calibration"],
                                          out_dir=tmp_path)
        run_scenario(config)
        meta = json.loads((tmp_path / "klyshko_calibration.json").read_text())["metadata"]
        assert meta["intercept"] == pytest.approx(0.2961, abs=0.03)
        assert meta["slope"] > 0

    def test_fig3a_curves_unit_efficiency_pnr_is_flat_zero(self, tmp_path):
        document = {"scenario": "fig3a_curves",
                    "source": {"lambda_sq": [0.02, 0.1, 0.3]},
                    "detector": {"eta_herald": [1.0]}}
        run_scenario(ScenarioConfig.from_dict(document, out_dir=tmp_path))
        dataset = read_csv_dataset(tmp_path / "fig3a_curves.csv")
        pnr_g2 = [float(g) for d, g in zip(dataset["detector"], dataset["g2"])
                  if d == "pnr"]
        assert pnr_g2 and all(g == 0.0 for g in pnr_g2)

    def test_fig4_small_lam_anchor_at_eta_08(self, tmp_path):
        document = {"scenario": "fig4_surface",
                    "grid": {"lambda_sq": [1e-4], "eta_herald": [0.8]}}
        run_scenario(ScenarioConfig.from_dict(document, out_dir=tmp_path))
        dataset = read_csv_dataset(tmp_path / "fig4_surface.csv")
        assert float(dataset["improvement_ratio"][0]) == pytest.approx(3.0, abs=0.01)

    def test_fig3a_points_gate_fires_on_degenerate_statistics(self, tmp_path):
        # starved run: zero threefolds give sigma = 0 and an infinite z-score
        document = {"scenario": "fig3a_points",
                    "source": {"lambda_sq": [0.02]},
                    "detector": {"eta_herald": [0.162]},
                    "run": {"num_shots": 20_000, "seed": 2}}
        from heraldlab import ConsistencyError, EstimatorError

        with pytest.raises((ConsistencyError, EstimatorError)):
            run_scenario(ScenarioConfig.from_dict(document, out_dir=tmp_path))

    def test_fig3b_loose_end_is_unfiltered(self, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS["fig3b_sweep"], out_dir=tmp_path)
        run_scenario(config)
        payload = json.loads((tmp_path / "fig3b_sweep.json").read_text())
        rows = payload["rows"]
        assert rows[-1]["retained_fraction"] == 1.0
        assert rows[-1]["filtered_g2"] == pytest.approx(
            payload["metadata"]["unfiltered_g2"], rel=1e-12)
        fractions = [r["retained_fraction"] for r in rows]
        assert fractions == sorted(fractions)


class TestCsvDataset:
    def test_round_trip(self, tmp_path):
        config = ScenarioConfig.from_dict(SMALL_CONFIGS["fig3a_curves"], out_dir=tmp_path)
        run_scenario(config)
        dataset = read_csv_dataset(tmp_path / "fig3a_curves.csv")
        assert list(dataset) == EXPECTED_HEADERS["fig3a_curves"].split(",")
        assert len(dataset["g2"]) == 9

    def test_header_required(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("# schema=none.v1\n")
        with pytest.raises(ConfigError):
            read_csv_dataset(path)
