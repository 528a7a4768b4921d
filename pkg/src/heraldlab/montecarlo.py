"""Shot-level Monte Carlo of the heralded pair source and its HBT analysis.

Each shot draws a thermal pair number, thins the herald arm binomially, forms
a herald report according to the configured detector model, and propagates the
signal arm through a 50:50 splitter onto two click detectors. Tallies follow
the coincidence-counting conventions of the analytic layer, so the empirical
estimators can be checked against the series model.

Shots are generated in fixed-size batches, each on its own counter-based
(Philox) stream derived from the run seed, so batches can be computed in any
order - or in parallel - and still aggregate to the identical CountRecord.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import math

import numpy as np

from .confusion import ConfusionMatrix
from .errors import ConfigError, EstimatorError
from .photon_stats import SqueezingParam

BATCH_SIZE = 1 << 17


@dataclass(frozen=True)
class ClickHerald:
    """Herald detector that only distinguishes vacuum from one-or-more photons."""


@dataclass(frozen=True)
class PpnrHerald:
    """Pseudo-number-resolving herald: even split over M click detectors."""

    num_detectors: int

    def __post_init__(self):
        if self.num_detectors < 1:
            raise ConfigError(f"num_detectors must be positive, got {self.num_detectors}")


@dataclass(frozen=True)
class PnrHerald:
    """Number-resolving herald, optionally reporting through a confusion matrix."""

    confusion: ConfusionMatrix | None = None


HeraldDetector = ClickHerald | PpnrHerald | PnrHerald


def squeezing_from_pump(pump_power: float, power_to_lam_sq: float) -> SqueezingParam:
    """Map pump power to squeezing via lam^2 = slope * power."""
    if pump_power < 0 or power_to_lam_sq <= 0:
        raise ConfigError("pump power must be >= 0 and the power slope positive")
    return SqueezingParam.from_pair_param(power_to_lam_sq * pump_power)


@dataclass(frozen=True)
class ExperimentConfig:
    """Source, loss, detector, and run parameters for one simulated acquisition.

    Efficiencies are lumped binomial-thinning parameters: ``eta_herald`` covers
    the whole herald path, ``eta_signal`` the signal path up to the splitter,
    and ``eta_d1``/``eta_d2`` the detectors behind it. ``dark_click_prob`` adds
    an independent per-pulse dark click on each HBT detector.
    """

    squeezing: SqueezingParam
    eta_herald: float
    eta_signal: float = 1.0
    eta_d1: float = 1.0
    eta_d2: float = 1.0
    num_shots: int = 100_000
    rng_seed: int = 0
    herald_detector: HeraldDetector = field(default_factory=ClickHerald)
    dark_click_prob: float = 0.0

    def __post_init__(self):
        for name in ("eta_herald", "eta_signal", "eta_d1", "eta_d2"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.num_shots < 1:
            raise ConfigError(f"num_shots must be >= 1, got {self.num_shots}")
        if not (0.0 <= self.dark_click_prob < 1.0):
            raise ConfigError(f"dark_click_prob must lie in [0, 1), got {self.dark_click_prob}")

    def with_squeezing(self, squeezing: SqueezingParam) -> "ExperimentConfig":
        return replace(self, squeezing=squeezing)


@dataclass(frozen=True)
class ShotOutcome:
    """Per-pulse record of one simulated shot."""

    pairs_generated: int
    herald_photons_detected: int
    herald_report: int
    d1_click: bool
    d2_click: bool


@dataclass(frozen=True)
class CountRecord:
    """Aggregated tallies of a run; addition merges independent partial records."""

    shots: int
    s_h: int = 0
    c_1h: int = 0
    c_2h: int = 0
    c_12h: int = 0
    s_1: int = 0
    s_2: int = 0
    s_h_multi: int = 0

    def __post_init__(self):
        fields = (self.shots, self.s_h, self.c_1h, self.c_2h,
                  self.c_12h, self.s_1, self.s_2, self.s_h_multi)
        if any(v < 0 for v in fields):
            raise ConfigError("tallies must be non-negative")
        if not (self.c_12h <= min(self.c_1h, self.c_2h)
                and max(self.c_1h, self.c_2h) <= self.s_h <= self.shots):
            raise ConfigError(
                "counter consistency violated: need c_12h <= min(c_1h, c_2h), "
                "c_ih <= s_h <= shots"
            )

    def __add__(self, other: "CountRecord") -> "CountRecord":
        return CountRecord(
            shots=self.shots + other.shots,
            s_h=self.s_h + other.s_h,
            c_1h=self.c_1h + other.c_1h,
            c_2h=self.c_2h + other.c_2h,
            c_12h=self.c_12h + other.c_12h,
            s_1=self.s_1 + other.s_1,
            s_2=self.s_2 + other.s_2,
            s_h_multi=self.s_h_multi + other.s_h_multi,
        )

    @property
    def herald_rate(self) -> float:
        return self.s_h / self.shots


@dataclass(frozen=True)
class HeraldEvents:
    """Per-event table for shots where the herald detector fired."""

    detected: np.ndarray  # photons detected in the herald arm (>= 1)
    d1_clicks: np.ndarray
    d2_clicks: np.ndarray

    @property
    def n_events(self) -> int:
        return self.detected.size


def batch_generator(seed: int, batch_index: int) -> np.random.Generator:
    """Independent counter-based stream for one batch of shots."""
    return np.random.Generator(np.random.Philox(key=seed).jumped(batch_index))


def _sample_batch(config: ExperimentConfig, rng: np.random.Generator, size: int):
    """Draw one batch of shots; the draw order is fixed for reproducibility."""
    x = config.squeezing.pair_param
    if x > 0.0:
        pairs = rng.geometric(1.0 - x, size) - 1
    else:
        pairs = np.zeros(size, dtype=np.int64)

    detected = rng.binomial(pairs, config.eta_herald)

    det = config.herald_detector
    if isinstance(det, ClickHerald):
        report = (detected > 0).astype(np.int64)
    elif isinstance(det, PnrHerald):
        if det.confusion is None:
            report = detected.copy()
        else:
            report = det.confusion.sample_reported(detected, rng)
    elif isinstance(det, PpnrHerald):
        report = np.zeros(size, dtype=np.int64)
        firing = detected > 0
        if np.any(firing):
            pvals = np.full(det.num_detectors, 1.0 / det.num_detectors)
            bins = rng.multinomial(detected[firing], pvals)
            report[firing] = (bins > 0).sum(axis=1)
    else:
        raise ConfigError(f"unknown herald detector model: {det!r}")

    signal = rng.binomial(pairs, config.eta_signal)
    to_d1 = rng.binomial(signal, 0.5)
    to_d2 = signal - to_d1
    d1 = rng.binomial(to_d1, config.eta_d1) > 0
    d2 = rng.binomial(to_d2, config.eta_d2) > 0
    if config.dark_click_prob > 0.0:
        d1 |= rng.random(size) < config.dark_click_prob
        d2 |= rng.random(size) < config.dark_click_prob

    return pairs, detected, report, d1, d2


def run_shot(config: ExperimentConfig, rng: np.random.Generator) -> ShotOutcome:
    """Simulate a single pulse; shares the sampling code with the batch engine."""
    pairs, detected, report, d1, d2 = _sample_batch(config, rng, 1)
    return ShotOutcome(
        pairs_generated=int(pairs[0]),
        herald_photons_detected=int(detected[0]),
        herald_report=int(report[0]),
        d1_click=bool(d1[0]),
        d2_click=bool(d2[0]),
    )


def _tally(report, d1, d2, filter_multiphoton: bool) -> CountRecord:
    herald = report == 1 if filter_multiphoton else report >= 1
    return CountRecord(
        shots=report.size,
        s_h=int(herald.sum()),
        c_1h=int((herald & d1).sum()),
        c_2h=int((herald & d2).sum()),
        c_12h=int((herald & d1 & d2).sum()),
        s_1=int(d1.sum()),
        s_2=int(d2.sum()),
        s_h_multi=int((report > 1).sum()),
    )


def _batch_sizes(num_shots: int) -> list[int]:
    full, rest = divmod(num_shots, BATCH_SIZE)
    return [BATCH_SIZE] * full + ([rest] if rest else [])


def run_experiment(config: ExperimentConfig, filter_multiphoton: bool = False,
                   workers: int = 1) -> CountRecord:
    """Aggregate tallies over num_shots pulses.

    With filtering on, only shots whose herald report equals exactly one count
    as heralds; reports above one are tallied in s_h_multi. Signal singles are
    tallied unconditionally. Results are bit-identical for a given config and
    seed regardless of worker count.
    """
    sizes = _batch_sizes(config.num_shots)

    def one(args):
        index, size = args
        rng = batch_generator(config.rng_seed, index)
        _, _, report, d1, d2 = _sample_batch(config, rng, size)
        return _tally(report, d1, d2, filter_multiphoton)

    tasks = list(enumerate(sizes))
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, tasks))
    else:
        parts = [one(t) for t in tasks]
    total = CountRecord(shots=0)
    for part in parts:
        total = total + part
    return total


def collect_herald_events(config: ExperimentConfig, workers: int = 1) -> HeraldEvents:
    """Per-event herald/HBT table for shots where the herald detector fired.

    The detected photon count is kept (not the report): downstream waveform
    analysis re-derives the report from a synthesized pulse shape.
    """
    sizes = _batch_sizes(config.num_shots)

    def one(args):
        index, size = args
        rng = batch_generator(config.rng_seed, index)
        _, detected, _, d1, d2 = _sample_batch(config, rng, size)
        fired = detected > 0
        return detected[fired], d1[fired], d2[fired]

    tasks = list(enumerate(sizes))
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, tasks))
    else:
        parts = [one(t) for t in tasks]
    detected = np.concatenate([p[0] for p in parts])
    d1 = np.concatenate([p[1] for p in parts])
    d2 = np.concatenate([p[2] for p in parts])
    return HeraldEvents(detected, d1, d2)


def g2_empirical(counts: CountRecord) -> tuple[float, float]:
    """Empirical g2(0) = s_h * c_12h / (c_1h * c_2h) with Poisson error.

    The uncertainty propagates independent sqrt(N) errors on each tally to
    first order; correlations between the counters are ignored, which is
    conservative. A zero threefold count gives g2 = 0 with its error term
    contributing zero.
    """
    if counts.c_1h == 0 or counts.c_2h == 0:
        raise EstimatorError("insufficient counts: both twofold coincidences must be nonzero")
    value = counts.s_h * counts.c_12h / (counts.c_1h * counts.c_2h)
    rel_var = 1.0 / counts.s_h + 1.0 / counts.c_1h + 1.0 / counts.c_2h
    if counts.c_12h > 0:
        rel_var += 1.0 / counts.c_12h
    sigma = value * math.sqrt(rel_var)
    return value, sigma


def klyshko_efficiency(counts: CountRecord) -> float:
    """Coincidence-to-singles herald efficiency (c_1h + c_2h) / (s_1 + s_2)."""
    denominator = counts.s_1 + counts.s_2
    if denominator == 0:
        raise EstimatorError("no signal singles recorded; Klyshko ratio undefined")
    return (counts.c_1h + counts.c_2h) / denominator


def klyshko_intercept(points: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """Least-squares line through (pump power, Klyshko estimate) points.

    Returns (intercept, slope); the intercept is the squeezing-independent
    herald efficiency.
    """
    if len(points) < 2:
        raise EstimatorError("need at least two points for the intercept fit")
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.unique(x).size < 2:
        raise EstimatorError("degenerate fit: need at least two distinct pump powers")
    x_mean = x.mean()
    y_mean = y.mean()
    slope = float(np.sum((x - x_mean) * (y - y_mean)) / np.sum((x - x_mean) ** 2))
    intercept = float(y_mean - slope * x_mean)
    return intercept, slope
