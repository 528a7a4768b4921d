"""Synthetic detector-pulse waveforms whose rising-edge slope encodes photon number.

The generative model is a flat baseline, a linear rise to a fixed peak voltage
at a slope drawn from the photon-number-dependent normal distribution, an
exponential recovery tail, and additive white noise. The peak is fixed because
the nanowire saturates at the same level regardless of how many photons
triggered it; the photon number shows up only in how fast the edge rises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import ConfigError


@dataclass(frozen=True)
class Trace:
    """One uniformly sampled detector pulse (voltages in mV, time step in ps)."""

    samples: np.ndarray
    dt_ps: float
    true_photon_number: int | None = None

    def __post_init__(self):
        v = np.asarray(self.samples, dtype=float)
        if v.ndim != 1 or v.size < 2:
            raise ConfigError("a trace needs at least two samples")
        if not np.all(np.isfinite(v)):
            raise ConfigError("trace samples must be finite")
        if not (self.dt_ps > 0):
            raise ConfigError(f"time step must be positive, got {self.dt_ps}")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "samples", v)

    @property
    def dt_ns(self) -> float:
        return self.dt_ps / 1000.0


@dataclass(frozen=True)
class TraceSynthConfig:
    """Waveform generator parameters.

    slope_means/slope_sigmas give the per-photon-number slope distribution in
    mV/ns, indexed from one photon upward; photon numbers beyond the table use
    its last entry. rise_time_ps is the nominal edge duration used for
    validation and sizing; the actual rise of each trace lasts
    amplitude / drawn slope.
    """

    rise_time_ps: float = 400.0
    slope_means_mv_ns: tuple[float, ...] = (0.40, 0.76, 1.06, 1.32)
    slope_sigmas_mv_ns: tuple[float, ...] = (0.075, 0.075, 0.080, 0.085)
    amplitude_mv: float = 0.45
    noise_rms_mv: float = 0.008
    sample_rate_gsps: float = 25.0
    pre_edge_ns: float = 2.0
    length_ns: float = 10.0
    decay_ns: float = 3.0

    def __post_init__(self):
        means = self.slope_means_mv_ns
        sigmas = self.slope_sigmas_mv_ns
        if len(means) == 0 or len(means) != len(sigmas):
            raise ConfigError("slope means and sigmas must be non-empty and equally long")
        if any(b <= a for a, b in zip(means, means[1:])):
            raise ConfigError("slope means must be strictly increasing in photon number")
        if means[0] <= 0 or any(s <= 0 for s in sigmas):
            raise ConfigError("slope means must be positive and sigmas strictly positive")
        for name in ("rise_time_ps", "amplitude_mv", "sample_rate_gsps", "decay_ns"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.noise_rms_mv < 0:
            raise ConfigError("noise_rms_mv must be non-negative")
        edge_samples = self.sample_rate_gsps * self.rise_time_ps / 1000.0
        if edge_samples < 5:
            raise ConfigError(
                f"only {edge_samples:.1f} samples on the nominal edge; need >= 5"
            )
        if not (0 < self.pre_edge_ns < self.length_ns):
            raise ConfigError("pre-edge region must fit inside the trace length")

    @property
    def dt_ps(self) -> float:
        return 1000.0 / self.sample_rate_gsps

    @property
    def num_samples(self) -> int:
        return int(round(self.length_ns * self.sample_rate_gsps))

    def slope_params(self, photon_number: int) -> tuple[float, float]:
        """(mean, sigma) of the slope for a photon number, capped at the table end."""
        if photon_number < 1:
            raise ConfigError(f"photon number must be >= 1, got {photon_number}")
        idx = min(photon_number, len(self.slope_means_mv_ns)) - 1
        return self.slope_means_mv_ns[idx], self.slope_sigmas_mv_ns[idx]


def _waveforms(config: TraceSynthConfig, slopes: np.ndarray,
               rng: np.random.Generator) -> np.ndarray:
    t = np.arange(config.num_samples) * (config.dt_ps / 1000.0)
    rise = (t[None, :] - config.pre_edge_ns) * slopes[:, None]
    rise_end = config.pre_edge_ns + config.amplitude_mv / slopes[:, None]
    tail = config.amplitude_mv * np.exp(-(t[None, :] - rise_end) / config.decay_ns)
    v = np.where(t[None, :] < config.pre_edge_ns, 0.0,
                 np.where(t[None, :] < rise_end, rise, tail))
    if config.noise_rms_mv > 0:
        v = v + rng.normal(0.0, config.noise_rms_mv, v.shape)
    return v


def _draw_slopes(config: TraceSynthConfig, photon_numbers: np.ndarray,
                 rng: np.random.Generator) -> np.ndarray:
    idx = np.minimum(photon_numbers, len(config.slope_means_mv_ns)) - 1
    means = np.asarray(config.slope_means_mv_ns)[idx]
    sigmas = np.asarray(config.slope_sigmas_mv_ns)[idx]
    slopes = rng.normal(means, sigmas)
    # keep pathological draws from stretching the rise past the trace end
    floor = 0.25 * config.slope_means_mv_ns[0]
    return np.maximum(slopes, floor)


def synthesize_trace(config: TraceSynthConfig, photon_number: int,
                     rng: np.random.Generator) -> Trace:
    """One pulse for the given detected photon number; metadata records it."""
    config.slope_params(photon_number)  # validates photon_number >= 1
    slopes = _draw_slopes(config, np.array([photon_number]), rng)
    samples = _waveforms(config, slopes, rng)[0]
    return Trace(samples, config.dt_ps, true_photon_number=photon_number)


def synthesize_traces(config: TraceSynthConfig, photon_numbers: Sequence[int],
                      rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Batch of pulses; returns (waveform matrix, drawn slopes).

    Rows follow the input photon numbers. Equivalent in distribution to
    repeated synthesize_trace calls, but drawn in two vectorized passes.
    """
    labels = np.asarray(photon_numbers, dtype=np.int64)
    if labels.size == 0:
        raise ConfigError("need at least one photon number")
    if np.any(labels < 1):
        raise ConfigError("photon numbers must be >= 1")
    slopes = _draw_slopes(config, labels, rng)
    return _waveforms(config, slopes, rng), slopes
