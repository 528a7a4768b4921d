"""Command-line interface: scenario runs, config validation, plotting, traces.

Exit codes: 0 success, 2 configuration problem, 3 compute/consistency failure,
4 output I/O failure. Only the output directory and thread count may also be
set through the environment (HERALDLAB_OUT_DIR, HERALDLAB_THREADS); explicit
flags win over the environment, which wins over the config file.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .errors import ConfigError, HeraldLabError, SchemaError
from .scenarios import ScenarioConfig, read_csv_dataset, run_scenario
from .svgplot import PLOT_SPECS, emit_plot
from .tracelab.binning import assign_photon_numbers, confusion_from_mixture, fit_mixture
from .tracelab.io import (
    TraceContainer,
    TraceContainerWriter,
    read_trace_container,
    read_traces_csv,
    write_slopes_csv,
    write_traces_csv,
)
from .tracelab.slopes import extract_slopes
from .tracelab.synth import TraceSynthConfig, synthesize_traces

EXIT_CONFIG = 2
EXIT_COMPUTE = 3
EXIT_IO = 4


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _env_out_dir() -> str | None:
    return os.environ.get("HERALDLAB_OUT_DIR")


def _env_threads() -> int | None:
    raw = os.environ.get("HERALDLAB_THREADS")
    return int(raw) if raw else None


@click.group()
@click.version_option(__version__, prog_name="heraldlab")
def main():
    """Simulate and analyze a photon-number-resolved heralded photon source."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (overrides config and HERALDLAB_OUT_DIR).")
@click.option("--seed", type=int, default=None, help="Override the run seed.")
@click.option("--threads", type=int, default=None,
              help="Worker threads for shot batches (overrides HERALDLAB_THREADS).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "both"]),
              default="both", show_default=True)
def run(config_path, out_dir, seed, threads, fmt):
    """Run a scenario config and write its data files and manifest."""
    formats = ["csv", "json"] if fmt == "both" else [fmt]
    try:
        config = ScenarioConfig.from_toml(
            config_path,
            out_dir=out_dir or _env_out_dir(),
            seed=seed,
            threads=threads if threads is not None else _env_threads(),
            formats=formats,
        )
    except (ConfigError, SchemaError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        manifest = run_scenario(config)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write outputs: {exc}")
    except HeraldLabError as exc:
        _fail(EXIT_COMPUTE, str(exc))
    click.echo(f"{config.scenario}: wrote {len(manifest.outputs)} files to {config.out_dir}")
    for name in manifest.outputs:
        click.echo(f"  {name}")


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def validate(config_path):
    """Check a scenario config without running it."""
    try:
        config = ScenarioConfig.from_toml(config_path)
    except (ConfigError, SchemaError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    click.echo(f"ok: scenario {config.scenario}, config hash {config.config_hash()[:12]}")


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("plot_spec", type=click.Choice(PLOT_SPECS))
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Output SVG path (default: next to the CSV).")
def plot(csv_path, plot_spec, out):
    """Render a scenario CSV to a self-contained SVG."""
    try:
        dataset = read_csv_dataset(csv_path)
        document = emit_plot(dataset, plot_spec)
    except (ConfigError, SchemaError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    target = Path(out) if out else Path(csv_path).with_suffix(".svg")
    try:
        target.write_text(document)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {target}: {exc}")
    click.echo(f"wrote {target}")


@main.group()
def traces():
    """Synthesize or analyze detector-pulse corpora."""


@traces.command()
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help="Output file; .trcl for binary, .csv for text.")
@click.option("--num", type=int, default=10_000, show_default=True,
              help="Number of traces.")
@click.option("--lambda-sq", type=float, default=0.2, show_default=True)
@click.option("--eta-herald", type=float, default=0.1622, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--labeled/--unlabeled", default=True, show_default=True,
              help="Store the true photon number per trace.")
def synth(out, num, lambda_sq, eta_herald, seed, labeled):
    """Generate a labeled corpus with thermal detected-count statistics."""
    if num < 1:
        _fail(EXIT_CONFIG, "--num must be >= 1")
    if not (0.0 <= lambda_sq < 1.0) or not (0.0 < eta_herald <= 1.0):
        _fail(EXIT_CONFIG, "need 0 <= lambda_sq < 1 and 0 < eta_herald <= 1")
    config = TraceSynthConfig()
    x_eff = lambda_sq * eta_herald / (1.0 - lambda_sq * (1.0 - eta_herald))
    rng = np.random.Generator(np.random.Philox(key=seed))
    labels = rng.geometric(1.0 - x_eff, num)
    out_path = Path(out)
    try:
        if out_path.suffix == ".csv":
            samples, _ = synthesize_traces(config, labels, rng)
            write_traces_csv(out_path, TraceContainer(
                samples.astype(np.float32), config.dt_ps,
                labels.astype(np.uint8) if labeled else None))
        else:
            with TraceContainerWriter(out_path, num, config.num_samples,
                                      config.dt_ps, labeled) as writer:
                chunk = 20_000
                for start in range(0, num, chunk):
                    part = labels[start:start + chunk]
                    samples, _ = synthesize_traces(config, part, rng)
                    writer.append(samples, part.astype(np.uint8) if labeled else None)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {out_path}: {exc}")
    click.echo(f"wrote {num} traces to {out_path}")


@traces.command()
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", type=click.Path(file_okay=False), default=None,
              help="Analysis output directory (default: corpus directory).")
@click.option("--components", default="auto", show_default=True,
              help="Mixture component count, or 'auto'.")
@click.option("--svg/--no-svg", default=True, show_default=True)
def analyze(corpus, out_dir, components, svg):
    """Extract slopes, fit the mixture, and write the binning analysis."""
    corpus_path = Path(corpus)
    target = Path(out_dir or _env_out_dir() or corpus_path.parent)
    if components != "auto":
        try:
            components = int(components)
        except ValueError:
            _fail(EXIT_CONFIG, "--components must be an integer or 'auto'")
    try:
        container = (read_traces_csv(corpus_path) if corpus_path.suffix == ".csv"
                     else read_trace_container(corpus_path))
    except (SchemaError, ConfigError) as exc:
        _fail(EXIT_CONFIG, str(exc))

    num = container.num_traces
    all_slopes = np.empty(num)
    residuals = np.empty(num)
    valid = np.zeros(num, dtype=bool)
    chunk = 20_000
    for start in range(0, num, chunk):
        stop = min(start + chunk, num)
        extraction = extract_slopes(
            np.asarray(container.samples[start:stop], dtype=float), container.dt_ps)
        all_slopes[start:stop] = extraction.slopes
        residuals[start:stop] = extraction.residual_rms
        valid[start:stop] = extraction.valid
    slopes = all_slopes[valid]
    try:
        mixture = fit_mixture(slopes, num_components=components)
        assigned = assign_photon_numbers(slopes, mixture.bin_edges)
        confusion = confusion_from_mixture(mixture, mixture.bin_edges)
    except HeraldLabError as exc:
        _fail(EXIT_COMPUTE, str(exc))

    target.mkdir(parents=True, exist_ok=True)
    try:
        write_slopes_csv(target / "slopes.csv",
                         np.flatnonzero(valid), slopes, assigned, residuals[valid])
        counts, bounds = np.histogram(slopes, bins=160)
        centers = 0.5 * (bounds[:-1] + bounds[1:])
        fit_curve = mixture.density(centers) * (bounds[1] - bounds[0])
        summary = {
            "num_traces": int(container.num_traces),
            "invalid_traces": int((~valid).sum()),
            "components": [{"weight": c.weight, "mean": c.mean, "std": c.std}
                           for c in mixture.components],
            "bin_edges": [float(e) for e in mixture.bin_edges.edges],
            "fit_quality": mixture.fit_quality,
            "confusion": confusion.entries.tolist(),
            "assigned_counts": np.bincount(assigned).tolist(),
        }
        (target / "mixture.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")
        if svg:
            dataset = {"bin_center": list(centers), "count": list(counts),
                       "mixture_fit": list(fit_curve)}
            (target / "slope_histogram.svg").write_text(emit_plot(dataset, "fig2b"))
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write analysis to {target}: {exc}")
    click.echo(f"analyzed {container.num_traces} traces "
               f"({int((~valid).sum())} invalid) -> {target}")


if __name__ == "__main__":
    main()
