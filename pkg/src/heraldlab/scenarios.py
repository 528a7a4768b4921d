"""Configuration-driven scenario runner with deterministic file outputs.

Each scenario reads a TOML document, runs the analytic model and/or the Monte
Carlo engine, and writes a primary CSV table (with a schema-version comment),
a JSON mirror carrying the same rows plus scenario metadata, an optional SVG,
and a manifest with checksums of every data file. Data payloads are
byte-reproducible for identical configs and seeds; wall-clock timings live
only in the manifest.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .confusion import ConfusionMatrix
from .errors import ConfigError, ConsistencyError, DivergentRatioError, ZeroHeraldError
from .montecarlo import (
    ClickHerald,
    ExperimentConfig,
    PnrHerald,
    PpnrHerald,
    collect_herald_events,
    g2_empirical,
    klyshko_efficiency,
    klyshko_intercept,
    run_experiment,
)
from .photon_stats import (
    FockTruncation,
    SqueezingParam,
    g2_heralded,
    herald_probability,
    improvement_ratio,
    improvement_ratio_small_lam,
    povm_click,
    povm_pnr,
    povm_pnr_reported,
    povm_ppnr,
)
from .svgplot import emit_plot
from .tracelab.binning import (
    assign_photon_numbers,
    confusion_from_mixture,
    fit_mixture,
    total_variation_distance,
)
from .tracelab.slopes import extract_slopes
from .tracelab.sweep import quantile_edge_grid, sweep_at_edges
from .tracelab.synth import TraceSynthConfig, synthesize_traces

SCENARIOS = ("fig3a_curves", "fig3a_points", "fig3b_sweep", "fig4_surface",
             "fig2b_histogram", "klyshko_calibration", "custom")

_SECTION_KEYS = {
    "source": {"lambda_sq", "pump_powers", "power_to_lambda_sq"},
    "detector": {"herald", "eta_herald", "eta_signal", "eta_d1", "eta_d2",
                 "ppnr_detectors", "confusion_p12", "confusion_p21",
                 "confusion_n_res", "dark_click_prob"},
    "run": {"num_shots", "seed", "threads"},
    "traces": {"num_traces", "num_components", "amplitude_mv", "noise_rms_mv",
               "slope_means_mv_ns", "slope_sigmas_mv_ns", "sample_rate_gsps",
               "rise_time_ps"},
    "sweep": {"steps", "lo_quantile"},
    "grid": {"lambda_sq", "eta_herald"},
    "outputs": {"out_dir", "formats", "svg"},
}

_DEFAULTS = {
    "fig3a_curves": {
        "source.lambda_sq": list(np.round(np.geomspace(1e-3, 0.35, 48), 12)),
        "detector.eta_herald": [0.1622, 0.2961],
        "detector.ppnr_detectors": 2,
    },
    "fig3a_points": {
        "source.lambda_sq": [0.02, 0.04, 0.08, 0.15],
        "detector.eta_herald": [0.162, 0.296],
        "detector.eta_signal": 0.5,
        "detector.eta_d1": 0.83,
        "detector.eta_d2": 0.83,
        "run.num_shots": 1_000_000,
    },
    "fig3b_sweep": {
        "source.lambda_sq": [0.08],
        "detector.eta_herald": [0.162],
        "detector.eta_signal": 0.9,
        "detector.eta_d1": 0.85,
        "detector.eta_d2": 0.85,
        "run.num_shots": 2_000_000,
        "sweep.steps": 25,
        "sweep.lo_quantile": 0.3,
    },
    "fig4_surface": {
        "grid.lambda_sq": list(np.round(np.linspace(0.002, 0.81, 24), 12)),
        "grid.eta_herald": list(np.round(np.linspace(0.05, 1.0, 20), 12)),
    },
    "fig2b_histogram": {
        "source.lambda_sq": [0.2],
        "detector.eta_herald": [0.1622],
        "traces.num_traces": 60_000,
        "traces.num_components": "auto",
    },
    "klyshko_calibration": {
        "source.pump_powers": [1, 2, 3, 4, 5, 6, 7, 8],
        "source.power_to_lambda_sq": 0.015,
        "detector.eta_herald": [0.2961],
        "detector.eta_signal": 0.95,
        "detector.eta_d1": 0.95,
        "detector.eta_d2": 0.95,
        "run.num_shots": 1_000_000,
    },
    "custom": {
        "source.lambda_sq": [0.05],
        "detector.eta_herald": [0.3],
        "run.num_shots": 100_000,
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario parameters plus output routing."""

    scenario: str
    out_dir: Path
    formats: tuple[str, ...]
    svg: bool
    seed: int
    threads: int
    params: dict

    @classmethod
    def from_dict(cls, document: dict, *, out_dir=None, seed=None, threads=None,
                  formats=None) -> "ScenarioConfig":
        document = dict(document)
        scenario = document.pop("scenario", None)
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}, got {scenario!r}")
        params: dict = {}
        for section, content in document.items():
            if section not in _SECTION_KEYS:
                raise ConfigError(f"unknown config section [{section}]")
            if not isinstance(content, dict):
                raise ConfigError(f"section [{section}] must be a table")
            unknown = set(content) - _SECTION_KEYS[section]
            if unknown:
                raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
            for key, value in content.items():
                params[f"{section}.{key}"] = value
        merged = dict(_DEFAULTS[scenario])
        merged.update(params)

        outputs_dir = out_dir or merged.get("outputs.out_dir", ".")
        fmt = formats or merged.get("outputs.formats", ["csv", "json"])
        if isinstance(fmt, str):
            fmt = [fmt]
        bad = set(fmt) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        config = cls(
            scenario=scenario,
            out_dir=Path(outputs_dir),
            formats=tuple(fmt),
            svg=bool(merged.get("outputs.svg", True)),
            seed=int(seed if seed is not None else merged.get("run.seed", 0)),
            threads=int(threads if threads is not None else merged.get("run.threads", 1)),
            params=merged,
        )
        config.validate()
        return config

    @classmethod
    def from_toml(cls, path, **overrides) -> "ScenarioConfig":
        with open(path, "rb") as fh:
            document = tomllib.load(fh)
        return cls.from_dict(document, **overrides)

    def get(self, dotted: str, default=None):
        return self.params.get(dotted, default)

    def lam_sq_list(self) -> list[float]:
        return [float(v) for v in self.get("source.lambda_sq", [])]

    def eta_list(self) -> list[float]:
        return [float(v) for v in self.get("detector.eta_herald", [])]

    def confusion(self) -> ConfusionMatrix | None:
        p12 = self.get("detector.confusion_p12")
        p21 = self.get("detector.confusion_p21")
        if p12 is None and p21 is None:
            return None
        return ConfusionMatrix.from_conditionals(
            float(p12 or 0.0), float(p21 or 0.0),
            n_res=int(self.get("detector.confusion_n_res", 4)),
        )

    def experiment(self, lam_sq: float, eta_herald: float, seed_offset: int = 0,
                   herald=None) -> ExperimentConfig:
        if herald is None:
            herald = self.herald_detector()
        return ExperimentConfig(
            squeezing=SqueezingParam.from_pair_param(lam_sq),
            eta_herald=eta_herald,
            eta_signal=float(self.get("detector.eta_signal", 1.0)),
            eta_d1=float(self.get("detector.eta_d1", 1.0)),
            eta_d2=float(self.get("detector.eta_d2", 1.0)),
            num_shots=int(self.get("run.num_shots", 100_000)),
            rng_seed=self.seed + seed_offset,
            herald_detector=herald,
            dark_click_prob=float(self.get("detector.dark_click_prob", 0.0)),
        )

    def herald_detector(self):
        kind = self.get("detector.herald", "pnr")
        if kind == "click":
            return ClickHerald()
        if kind == "ppnr":
            return PpnrHerald(int(self.get("detector.ppnr_detectors", 2)))
        if kind == "pnr":
            return PnrHerald(confusion=self.confusion())
        raise ConfigError(f"unknown herald detector {kind!r}")

    def synth_config(self) -> TraceSynthConfig:
        kwargs = {}
        for key, attr in (("traces.amplitude_mv", "amplitude_mv"),
                          ("traces.noise_rms_mv", "noise_rms_mv"),
                          ("traces.sample_rate_gsps", "sample_rate_gsps"),
                          ("traces.rise_time_ps", "rise_time_ps")):
            value = self.get(key)
            if value is not None:
                kwargs[attr] = float(value)
        for key, attr in (("traces.slope_means_mv_ns", "slope_means_mv_ns"),
                          ("traces.slope_sigmas_mv_ns", "slope_sigmas_mv_ns")):
            value = self.get(key)
            if value is not None:
                kwargs[attr] = tuple(float(v) for v in value)
        return TraceSynthConfig(**kwargs)

    def validate(self) -> None:
        for lam_sq in self.lam_sq_list() + [float(v) for v in self.get("grid.lambda_sq", [])]:
            if not (0.0 <= lam_sq < 1.0):
                raise ConfigError(f"lambda_sq must lie in [0, 1), got {lam_sq}")
        grid_eta = [float(v) for v in self.get("grid.eta_herald", [])]
        for eta in self.eta_list() + grid_eta:
            if not (0.0 <= eta <= 1.0):
                raise ConfigError(f"eta_herald must lie in [0, 1], got {eta}")
        if int(self.get("run.num_shots", 1)) < 1:
            raise ConfigError("num_shots must be >= 1")
        if int(self.get("traces.num_traces", 1)) < 1:
            raise ConfigError("num_traces must be >= 1")
        if int(self.get("sweep.steps", 2)) < 2:
            raise ConfigError("sweep steps must be >= 2")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        self.herald_detector()
        self.synth_config()

    def config_hash(self) -> str:
        payload = {"scenario": self.scenario, "seed": self.seed,
                   "params": {k: _plain(v) for k, v in sorted(self.params.items())
                              if not k.startswith("outputs.")}}
        return hashlib.sha256(
            json.dumps(payload, sort_keys=True, default=str).encode()
        ).hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Checksums and provenance of one scenario run."""

    scenario: str
    config_hash: str
    artifact_version: str
    seeds: tuple[int, ...]
    outputs: dict
    timings_s: dict

    def to_json(self) -> str:
        return json.dumps(
            {"scenario": self.scenario, "config_hash": self.config_hash,
             "artifact_version": self.artifact_version, "seeds": list(self.seeds),
             "outputs": self.outputs, "timings_s": self.timings_s},
            sort_keys=True, indent=2) + "\n"


def _plain(value):
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    return value


def _fmt_cell(value) -> str:
    value = _plain(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.12g}"
    if value is None:
        return ""
    return str(value)


def write_csv(path: Path, schema: str, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={schema}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt_cell(row[c]) for c in columns) + "\n")


def write_json(path: Path, schema: str, columns: list[str], rows: list[dict],
               metadata: dict) -> None:
    payload = {
        "schema": schema,
        "columns": columns,
        "rows": [{c: _plain(r[c]) for c in columns} for r in rows],
        "metadata": {k: _plain(v) for k, v in metadata.items()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_csv_dataset(path) -> dict:
    """Column-oriented view of a scenario CSV (schema comment tolerated)."""
    with open(path, "r", newline="") as fh:
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    rows = [line for line in lines if not line.startswith("#")]
    if not rows:
        raise ConfigError(f"{path} holds no header row")
    header = rows[0].split(",")
    dataset: dict = {name: [] for name in header}
    for line in rows[1:]:
        cells = line.split(",")
        if len(cells) != len(header):
            raise ConfigError(f"{path}: row width {len(cells)} != header width {len(header)}")
        for name, cell in zip(header, cells):
            dataset[name].append(cell)
    return dataset


# --- scenario implementations -------------------------------------------------

def _scenario_fig3a_curves(config: ScenarioConfig):
    rows = []
    detectors = int(config.get("detector.ppnr_detectors", 2))
    for eta in config.eta_list():
        for name in ("click", "ppnr", "pnr"):
            for lam_sq in config.lam_sq_list():
                sq = SqueezingParam.from_pair_param(lam_sq)
                trunc = FockTruncation.adequate(sq)
                if name == "click":
                    povm = povm_click(True, eta, trunc)
                elif name == "ppnr":
                    povm = povm_ppnr(1, eta, detectors, trunc)
                else:
                    povm = povm_pnr(1, eta, trunc)
                try:
                    g2 = g2_heralded(sq, povm)
                except (ZeroHeraldError, ConfigError):
                    continue
                rows.append({
                    "detector": name,
                    "eta_herald": eta,
                    "lambda_sq": lam_sq,
                    "herald_probability": herald_probability(sq, povm),
                    "g2": g2,
                })
    columns = ["detector", "eta_herald", "lambda_sq", "herald_probability", "g2"]
    metadata = {"ppnr_detectors": detectors}
    return columns, rows, metadata, "fig3a_curves"


def _scenario_fig3a_points(config: ScenarioConfig):
    confusion = config.confusion()
    rows = []
    offset = 0
    for eta in config.eta_list():
        for lam_sq in config.lam_sq_list():
            sq = SqueezingParam.from_pair_param(lam_sq)
            trunc = FockTruncation.adequate(sq)
            experiment = config.experiment(lam_sq, eta, seed_offset=offset,
                                           herald=PnrHerald(confusion=confusion))
            offset += 1
            for filtered in (False, True):
                record = run_experiment(experiment, filter_multiphoton=filtered,
                                        workers=config.threads)
                value, sigma = g2_empirical(record)
                if filtered:
                    povm = (povm_pnr_reported(1, eta, confusion, trunc) if confusion
                            else povm_pnr(1, eta, trunc))
                else:
                    povm = povm_click(True, eta, trunc)
                model = g2_heralded(sq, povm)
                z = (value - model) / sigma if sigma > 0 else math.inf
                rows.append({
                    "eta_herald": eta,
                    "lambda_sq": lam_sq,
                    "filtered": filtered,
                    "herald_probability": record.herald_rate,
                    "g2": value,
                    "g2_sigma": sigma,
                    "model_g2": model,
                    "z_score": z,
                })
    z_scores = np.array([abs(r["z_score"]) for r in rows])
    outlier_fraction = float((z_scores > 4.0).mean())
    if outlier_fraction > 0.01:
        raise ConsistencyError(
            f"{outlier_fraction:.1%} of Monte Carlo points deviate from the "
            f"analytic curves beyond |z| = 4"
        )
    columns = ["eta_herald", "lambda_sq", "filtered", "herald_probability",
               "g2", "g2_sigma", "model_g2", "z_score"]
    metadata = {
        "num_shots": int(config.get("run.num_shots")),
        "outlier_fraction": outlier_fraction,
        "confusion_p12": config.get("detector.confusion_p12"),
        "confusion_p21": config.get("detector.confusion_p21"),
    }
    return columns, rows, metadata, "fig3a_points"


def _slopes_for_labels(synth_config: TraceSynthConfig, labels: np.ndarray,
                       rng: np.random.Generator, chunk: int = 20_000):
    """Synthesize pulses for the labels and return extracted slopes (chunked)."""
    slopes = np.empty(labels.size)
    residuals = np.empty(labels.size)
    valid = np.zeros(labels.size, dtype=bool)
    for start in range(0, labels.size, chunk):
        stop = min(start + chunk, labels.size)
        samples, _ = synthesize_traces(synth_config, labels[start:stop], rng)
        result = extract_slopes(samples, synth_config.dt_ps)
        slopes[start:stop] = result.slopes
        residuals[start:stop] = result.residual_rms
        valid[start:stop] = result.valid
    return slopes, residuals, valid


def _scenario_fig3b_sweep(config: ScenarioConfig):
    lam_sq = config.lam_sq_list()[0]
    eta = config.eta_list()[0]
    experiment = config.experiment(lam_sq, eta, herald=PnrHerald())
    events = collect_herald_events(experiment, workers=config.threads)
    if events.n_events == 0:
        raise ConsistencyError("no herald events; raise num_shots or the efficiencies")

    synth_config = config.synth_config()
    rng = np.random.Generator(np.random.Philox(key=config.seed + 7_777))
    slopes, _, valid = _slopes_for_labels(synth_config, events.detected, rng)
    slopes = slopes[valid]
    d1 = events.d1_clicks[valid]
    d2 = events.d2_clicks[valid]

    edges = quantile_edge_grid(slopes, int(config.get("sweep.steps")),
                               float(config.get("sweep.lo_quantile")))
    points = sweep_at_edges(slopes, d1, d2, edges)
    mixture = fit_mixture(slopes, num_components="auto")

    rows = [{
        "edge_mv_per_ns": p.edge,
        "filtered_g2": p.g2,
        "filtered_g2_sigma": p.g2_sigma,
        "retained_fraction": p.retained_fraction,
        "retained_events": p.retained_events,
    } for p in points]
    columns = ["edge_mv_per_ns", "filtered_g2", "filtered_g2_sigma",
               "retained_fraction", "retained_events"]
    sq = SqueezingParam.from_pair_param(lam_sq)
    metadata = {
        "lambda_sq": lam_sq,
        "eta_herald": eta,
        "herald_events": int(events.n_events),
        "invalid_traces": int((~valid).sum()),
        "unfiltered_g2": points[-1].g2,
        "unfiltered_g2_sigma": points[-1].g2_sigma,
        "mixture_intersection_edges": [float(e) for e in mixture.bin_edges.edges],
        "model_g2_click": g2_heralded(sq, povm_click(True, eta)),
        "model_g2_pnr": g2_heralded(sq, povm_pnr(1, eta)),
    }
    return columns, rows, metadata, "fig3b"


def _scenario_fig4_surface(config: ScenarioConfig):
    lam_grid = [float(v) for v in config.get("grid.lambda_sq")]
    eta_grid = [float(v) for v in config.get("grid.eta_herald")]
    rows = []
    deviation_by_eta = {}
    for eta in eta_grid:
        finite = []
        for lam_sq in lam_grid:
            sq = SqueezingParam.from_pair_param(lam_sq)
            try:
                ratio = improvement_ratio(sq, eta)
                finite.append(ratio)
            except DivergentRatioError:
                ratio = math.inf
            except ZeroHeraldError:
                ratio = math.nan
            rows.append({"lambda_sq": lam_sq, "eta_herald": eta,
                         "improvement_ratio": ratio})
        if finite and eta < 1.0:
            limit = improvement_ratio_small_lam(eta)
            deviation_by_eta[f"{eta:.6g}"] = float(
                max(abs(r / limit - 1.0) for r in finite)
            )
    columns = ["lambda_sq", "eta_herald", "improvement_ratio"]
    metadata = {
        "divergent_marker": "inf",
        "max_ratio_deviation_from_small_lam_limit": deviation_by_eta,
    }
    return columns, rows, metadata, "fig4"


def _scenario_fig2b_histogram(config: ScenarioConfig):
    lam_sq = config.lam_sq_list()[0]
    eta = config.eta_list()[0]
    num_traces = int(config.get("traces.num_traces"))
    # detected herald counts (given >= 1) are geometric with the thinned parameter
    x_eff = lam_sq * eta / (1.0 - lam_sq * (1.0 - eta))
    rng = np.random.Generator(np.random.Philox(key=config.seed + 55_555))
    labels = rng.geometric(1.0 - x_eff, num_traces)

    synth_config = config.synth_config()
    slopes, _, valid = _slopes_for_labels(synth_config, labels, rng)
    slopes_valid = slopes[valid]
    labels_valid = labels[valid]

    num_components = config.get("traces.num_components", "auto")
    mixture = fit_mixture(slopes_valid, num_components=num_components)
    edges = mixture.bin_edges
    assigned = assign_photon_numbers(slopes_valid, edges)
    confusion = confusion_from_mixture(mixture, edges)

    top = int(max(assigned.max(), labels_valid.max()))
    reported_counts = np.bincount(assigned, minlength=top + 1)[1:]
    true_counts = np.bincount(labels_valid, minlength=top + 1)[1:]
    tv_binned = total_variation_distance(reported_counts / reported_counts.sum(),
                                         true_counts / true_counts.sum())
    click_collapse = np.zeros(top)
    click_collapse[0] = 1.0
    tv_click = total_variation_distance(click_collapse, true_counts / true_counts.sum())

    counts, bin_bounds = np.histogram(slopes_valid, bins=160)
    centers = 0.5 * (bin_bounds[:-1] + bin_bounds[1:])
    bin_width = bin_bounds[1] - bin_bounds[0]
    fit = mixture.density(centers) * bin_width
    rows = [{"bin_center": float(centers[i]), "count": int(counts[i]),
             "mixture_fit": float(fit[i])} for i in range(centers.size)]
    columns = ["bin_center", "count", "mixture_fit"]
    metadata = {
        "lambda_sq": lam_sq,
        "eta_herald": eta,
        "x_detected": x_eff,
        "num_traces": num_traces,
        "invalid_traces": int((~valid).sum()),
        "components": [{"weight": c.weight, "mean": c.mean, "std": c.std}
                       for c in mixture.components],
        "bin_edges": [float(e) for e in edges.edges],
        "edge_fallback_flags": list(edges.fallback),
        "fit_quality": mixture.fit_quality,
        "confusion": confusion.entries.tolist(),
        "p_report1_given2": (confusion.prob(1, 2) if confusion.n_res >= 2 else None),
        "p_report2_given1": (confusion.prob(2, 1) if confusion.n_res >= 2 else None),
        "tv_binned_vs_true": tv_binned,
        "tv_click_vs_true": tv_click,
        "reported_counts": reported_counts.tolist(),
        "true_counts": true_counts.tolist(),
    }
    return columns, rows, metadata, "fig2b"


def _scenario_klyshko_calibration(config: ScenarioConfig):
    powers = [float(p) for p in config.get("source.pump_powers")]
    k = float(config.get("source.power_to_lambda_sq"))
    eta = config.eta_list()[0]
    rows = []
    points = []
    for i, power in enumerate(powers):
        lam_sq = k * power
        experiment = config.experiment(lam_sq, eta, seed_offset=i,
                                       herald=ClickHerald())
        record = run_experiment(experiment, workers=config.threads)
        estimate = klyshko_efficiency(record)
        sigma = estimate / math.sqrt(max(record.c_1h + record.c_2h, 1))
        rows.append({"pump_power": power, "lambda_sq": lam_sq,
                     "klyshko_estimate": estimate, "estimate_sigma": sigma})
        points.append((power, estimate))
    intercept, slope = klyshko_intercept(points)
    columns = ["pump_power", "lambda_sq", "klyshko_estimate", "estimate_sigma"]
    metadata = {
        "configured_eta_herald": eta,
        "intercept": intercept,
        "slope": slope,
        "intercept_error": intercept - eta,
        "power_to_lambda_sq": k,
        "num_shots_per_power": int(config.get("run.num_shots")),
    }
    return columns, rows, metadata, "xy"


def _scenario_custom(config: ScenarioConfig):
    rows = []
    offset = 0
    for eta in config.eta_list():
        for lam_sq in config.lam_sq_list():
            experiment = config.experiment(lam_sq, eta, seed_offset=offset)
            offset += 1
            for filtered in (False, True):
                record = run_experiment(experiment, filter_multiphoton=filtered,
                                        workers=config.threads)
                try:
                    g2, sigma = g2_empirical(record)
                except Exception:
                    g2, sigma = math.nan, math.nan
                try:
                    klyshko = klyshko_efficiency(record)
                except Exception:
                    klyshko = math.nan
                rows.append({
                    "eta_herald": eta, "lambda_sq": lam_sq, "filtered": filtered,
                    "shots": record.shots, "s_h": record.s_h, "c_1h": record.c_1h,
                    "c_2h": record.c_2h, "c_12h": record.c_12h, "s_1": record.s_1,
                    "s_2": record.s_2, "s_h_multi": record.s_h_multi,
                    "g2": g2, "g2_sigma": sigma, "klyshko_estimate": klyshko,
                })
    columns = ["eta_herald", "lambda_sq", "filtered", "shots", "s_h", "c_1h",
               "c_2h", "c_12h", "s_1", "s_2", "s_h_multi", "g2", "g2_sigma",
               "klyshko_estimate"]
    return columns, rows, {"detector": config.get("detector.herald", "pnr")}, "xy"


_IMPLEMENTATIONS = {
    "fig3a_curves": _scenario_fig3a_curves,
    "fig3a_points": _scenario_fig3a_points,
    "fig3b_sweep": _scenario_fig3b_sweep,
    "fig4_surface": _scenario_fig4_surface,
    "fig2b_histogram": _scenario_fig2b_histogram,
    "klyshko_calibration": _scenario_klyshko_calibration,
    "custom": _scenario_custom,
}


def run_scenario(config: ScenarioConfig) -> RunManifest:
    """Execute a scenario and write its data files, SVG, and manifest."""
    config.out_dir.mkdir(parents=True, exist_ok=True)
    timings: dict = {}
    started = time.perf_counter()
    columns, rows, metadata, svg_spec = _IMPLEMENTATIONS[config.scenario](config)
    timings["compute"] = round(time.perf_counter() - started, 6)

    schema = f"{config.scenario}.v1"
    outputs: dict = {}
    started = time.perf_counter()
    if "csv" in config.formats:
        csv_path = config.out_dir / f"{config.scenario}.csv"
        write_csv(csv_path, schema, columns, rows)
        outputs[csv_path.name] = _sha256(csv_path)
    if "json" in config.formats:
        json_path = config.out_dir / f"{config.scenario}.json"
        write_json(json_path, schema, columns, rows, metadata)
        outputs[json_path.name] = _sha256(json_path)
    if config.svg:
        dataset = {c: [r[c] for r in rows] for c in columns}
        svg_path = config.out_dir / f"{config.scenario}.svg"
        svg_path.write_text(emit_plot(dataset, svg_spec))
        outputs[svg_path.name] = _sha256(svg_path)
    timings["write"] = round(time.perf_counter() - started, 6)

    manifest = RunManifest(
        scenario=config.scenario,
        config_hash=config.config_hash(),
        artifact_version=__version__,
        seeds=(config.seed,),
        outputs=outputs,
        timings_s=timings,
    )
    (config.out_dir / "manifest.json").write_text(manifest.to_json())
    return manifest
