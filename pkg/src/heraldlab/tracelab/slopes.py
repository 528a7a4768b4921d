"""Rising-edge slope extraction by linear fit between fractional edge levels.

The fit window covers the samples between the 10% and 60% levels of each
pulse's rising edge (relative to its own baseline and peak), which is the
linear region of the edge. The baseline is the median of the pre-edge samples;
the window starts at the last excursion below the lower level before the edge
first crosses the upper level, which keeps isolated noise spikes in the
baseline from hijacking the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import TraceError
from .synth import Trace


@dataclass(frozen=True)
class SlopeSample:
    """Fitted slope of one trace's rising edge (mV/ns)."""

    slope_mv_per_ns: float
    fit_intercept_mv: float
    fit_residual_rms_mv: float
    source_trace_id: int


@dataclass(frozen=True)
class SlopeExtraction:
    """Vectorized extraction result; invalid rows hold NaN."""

    slopes: np.ndarray
    intercepts: np.ndarray
    residual_rms: np.ndarray
    n_points: np.ndarray
    edge_found: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.edge_found & (self.n_points >= 3)


def extract_slopes(samples: np.ndarray, dt_ps: float,
                   lower_frac: float = 0.10, upper_frac: float = 0.60, *,
                   edge_threshold_mv: float = 0.15,
                   baseline_frac: float = 0.20) -> SlopeExtraction:
    """Fit the rising-edge slope of every row of a waveform matrix."""
    if not (0.0 <= lower_frac < upper_frac < 1.0):
        raise TraceError(
            f"need 0 <= lower < upper < 1 for the edge levels, got {lower_frac}, {upper_frac}"
        )
    v = np.atleast_2d(np.asarray(samples, dtype=float))
    num, n = v.shape
    dt_ns = dt_ps / 1000.0

    n_base = max(1, int(n * baseline_frac))
    base = np.median(v[:, :n_base], axis=1)
    peak = v.max(axis=1)
    span = peak - base
    edge_found = span >= edge_threshold_mv

    lo = base + lower_frac * span
    hi = base + upper_frac * span

    over_hi = v > hi[:, None]
    # peak > hi whenever an edge exists, so argmax finds the first crossing
    i_hi = over_hi.argmax(axis=1)
    idx = np.arange(n)
    below_lo_before = (v < lo[:, None]) & (idx[None, :] < i_hi[:, None])
    has_dip = below_lo_before.any(axis=1)
    last_dip = n - 1 - below_lo_before[:, ::-1].argmax(axis=1)
    i0 = np.where(has_dip, last_dip + 1, 0)

    window = (idx[None, :] >= i0[:, None]) & (idx[None, :] < i_hi[:, None])
    n_pts = window.sum(axis=1)

    t = idx * dt_ns
    w = window.astype(float)
    sum_w = np.maximum(n_pts, 1)
    sx = (t[None, :] * w).sum(axis=1)
    sy = (v * w).sum(axis=1)
    sxx = (t[None, :] ** 2 * w).sum(axis=1)
    sxy = (t[None, :] * v * w).sum(axis=1)
    denom = sum_w * sxx - sx * sx
    safe = denom > 0
    slope = np.full(num, np.nan)
    intercept = np.full(num, np.nan)
    rms = np.full(num, np.nan)
    slope[safe] = (sum_w[safe] * sxy[safe] - sx[safe] * sy[safe]) / denom[safe]
    intercept[safe] = (sy[safe] - slope[safe] * sx[safe]) / sum_w[safe]
    resid = (v - slope[:, None] * t[None, :] - intercept[:, None]) * w
    rms[safe] = np.sqrt((resid[safe] ** 2).sum(axis=1) / sum_w[safe])

    usable = edge_found & (n_pts >= 3)
    slope[~usable] = np.nan
    intercept[~usable] = np.nan
    rms[~usable] = np.nan
    return SlopeExtraction(slope, intercept, rms, n_pts, edge_found)


def extract_slope(trace: Trace, lower_frac: float = 0.10, upper_frac: float = 0.60, *,
                  edge_threshold_mv: float = 0.15, baseline_frac: float = 0.20,
                  trace_id: int = 0) -> SlopeSample:
    """Fit one trace's rising edge; raises TraceError when no usable edge exists."""
    result = extract_slopes(trace.samples[None, :], trace.dt_ps, lower_frac, upper_frac,
                            edge_threshold_mv=edge_threshold_mv,
                            baseline_frac=baseline_frac)
    if not result.edge_found[0]:
        raise TraceError(
            f"no rising edge: peak-to-baseline span below {edge_threshold_mv} mV"
        )
    if result.n_points[0] < 3:
        raise TraceError(
            f"too few samples in the {lower_frac:.0%}-{upper_frac:.0%} window "
            f"({int(result.n_points[0])} < 3)"
        )
    return SlopeSample(
        slope_mv_per_ns=float(result.slopes[0]),
        fit_intercept_mv=float(result.intercepts[0]),
        fit_residual_rms_mv=float(result.residual_rms[0]),
        source_trace_id=trace_id,
    )
