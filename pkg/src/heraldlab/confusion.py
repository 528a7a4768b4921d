"""Detector confusion matrices over the resolved photon-number range.

A confusion matrix collects the conditional probabilities P(report m | detected n)
for counts n, m in 1..n_res. Rows are indexed by the true detected count, columns
by the reported count; each row is a probability distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SchemaError

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class ConfusionMatrix:
    """Row-stochastic matrix entries[n-1, m-1] = P(report m | detected n)."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise SchemaError(f"confusion matrix must be square and non-empty, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0.0):
            raise ConfigError("confusion entries must be finite and non-negative")
        row_sums = m.sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > ROW_SUM_TOL):
            raise ConfigError(f"confusion rows must sum to 1 within {ROW_SUM_TOL}, got {row_sums}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)

    @property
    def n_res(self) -> int:
        """Largest resolved photon number (matrix covers counts 1..n_res)."""
        return self.entries.shape[0]

    def prob(self, reported: int, detected: int) -> float:
        """P(report `reported` | detected `detected`), counts 1-indexed."""
        if not (1 <= detected <= self.n_res and 1 <= reported <= self.n_res):
            raise ConfigError(f"counts must lie in 1..{self.n_res}")
        return float(self.entries[detected - 1, reported - 1])

    @classmethod
    def identity(cls, n_res: int = 4) -> "ConfusionMatrix":
        return cls(np.eye(n_res))

    @classmethod
    def from_conditionals(cls, p_report1_given2: float, p_report2_given1: float,
                          n_res: int = 4) -> "ConfusionMatrix":
        """Matrix with only the two leading misassignment channels populated.

        Higher-order conditionals are taken as zero; rows 3.. are identity.
        """
        if n_res < 2:
            raise ConfigError("need n_res >= 2 to host P(1|2) and P(2|1)")
        for name, p in (("P(1|2)", p_report1_given2), ("P(2|1)", p_report2_given1)):
            if not (0.0 <= p <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        m = np.eye(n_res)
        m[0, 0] = 1.0 - p_report2_given1
        m[0, 1] = p_report2_given1
        m[1, 0] = p_report1_given2
        m[1, 1] = 1.0 - p_report1_given2
        return cls(m)

    def sample_reported(self, detected: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Draw reported counts for an array of detected counts.

        Counts outside 1..n_res (zero, or beyond the resolved range) pass
        through unchanged.
        """
        detected = np.asarray(detected)
        reported = detected.copy()
        in_range = (detected >= 1) & (detected <= self.n_res)
        if not np.any(in_range):
            return reported
        rows = np.cumsum(self.entries, axis=1)
        u = rng.random(int(in_range.sum()))
        row_idx = detected[in_range] - 1
        # reported count = 1 + number of cumulative cells strictly below u
        drawn = 1 + (u[:, None] > rows[row_idx]).sum(axis=1)
        reported[in_range] = np.minimum(drawn, self.n_res)
        return reported
