"""Discrimination-threshold sweep: trade heralded g2 against event rate.

Each herald event carries the slope of its recorded pulse and the two HBT
click flags of the same shot. Tightening the acceptance edge (keeping only
slopes at or below it) rejects more multiphoton heralds, lowering g2 at the
cost of retained events; an edge above every slope reproduces the unfiltered
estimate exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, EmptyAcceptanceError
from ..montecarlo import CountRecord, g2_empirical


@dataclass(frozen=True)
class SweepPoint:
    edge: float
    g2: float
    g2_sigma: float
    retained_fraction: float
    retained_events: int


def quantile_edge_grid(slopes: np.ndarray, steps: int,
                       lo_quantile: float = 0.25) -> np.ndarray:
    """Edge candidates at evenly spaced slope quantiles up to the maximum.

    Quantile spacing guarantees events between consecutive edges, so the
    retained fraction decreases strictly across the grid.
    """
    if steps < 2:
        raise ConfigError("need at least two quantile steps")
    if not (0.0 <= lo_quantile < 1.0):
        raise ConfigError("lo_quantile must lie in [0, 1)")
    levels = np.linspace(lo_quantile, 1.0, steps)
    edges = np.quantile(np.asarray(slopes, dtype=float), levels)
    if np.any(np.diff(edges) <= 0):
        edges = np.unique(edges)
    return edges


def threshold_sweep(slopes, d1_clicks, d2_clicks, edge_range: tuple[float, float],
                    steps: int) -> list[SweepPoint]:
    """Recompute the coincidence g2 for each acceptance edge in a linear grid.

    Returns points in ascending edge order. Raises EmptyAcceptanceError if an
    edge accepts no events at all.
    """
    slopes = np.asarray(slopes, dtype=float)
    d1 = np.asarray(d1_clicks, dtype=bool)
    d2 = np.asarray(d2_clicks, dtype=bool)
    if not (slopes.size == d1.size == d2.size) or slopes.size == 0:
        raise ConfigError("slopes and click flags must be non-empty and aligned")
    lo, hi = edge_range
    if not (lo <= hi) or steps < 1:
        raise ConfigError(f"invalid edge range {edge_range} or steps {steps}")
    edges = np.linspace(lo, hi, steps) if steps > 1 else np.array([lo])
    return sweep_at_edges(slopes, d1, d2, edges)


def sweep_at_edges(slopes: np.ndarray, d1: np.ndarray, d2: np.ndarray,
                   edges: np.ndarray) -> list[SweepPoint]:
    """Tally and estimate g2 at each given acceptance edge."""
    total = slopes.size
    s_1 = int(d1.sum())
    s_2 = int(d2.sum())
    points = []
    for edge in np.asarray(edges, dtype=float):
        accepted = slopes <= edge
        retained = int(accepted.sum())
        if retained == 0:
            raise EmptyAcceptanceError(
                f"edge {edge:.6g} mV/ns accepts no herald events"
            )
        counts = CountRecord(
            shots=total,
            s_h=retained,
            c_1h=int((accepted & d1).sum()),
            c_2h=int((accepted & d2).sum()),
            c_12h=int((accepted & d1 & d2).sum()),
            s_1=s_1,
            s_2=s_2,
        )
        value, sigma = g2_empirical(counts)
        points.append(SweepPoint(float(edge), value, sigma, retained / total, retained))
    return points
