"""Truncated Fock-series model of a pulsed photon-pair source and its heralds.

The source emits photon pairs with a thermal (geometric) number distribution
controlled by a squeezing amplitude ``lam``; ``x = lam**2`` is the per-pulse
pair-generation parameter. Detectors are described by diagonal coefficient
vectors ``c_n`` (one per measurement outcome): the probability that a detector
produces the outcome when ``n`` photons arrive. Three families are provided:

* click: fires on one or more photons, efficiency ``eta``;
* pseudo-PNR: the beam split evenly over ``M`` click detectors, the outcome is
  the number of detectors that fired;
* PNR: true number resolution with binomial loss at efficiency ``eta``.

All series run over the retained Fock levels 0..n_max and are accumulated with
compensated summation so the consistency contracts hold at 1e-12. Operations
that combine a squeezing value with a coefficient vector raise TruncationError
when the thermal tail above n_max exceeds the tolerance; use
``FockTruncation.adequate`` when sweeping to high squeezing.

All values here are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .confusion import ConfusionMatrix
from .errors import (
    ConfigError,
    DivergentRatioError,
    SchemaError,
    TruncationError,
    UndefinedG2Error,
    ZeroHeraldError,
)

DEFAULT_N_MAX = 50
DEFAULT_TAIL_TOL = 1e-12
_NORM_TOL = 1e-10
_COEFF_SLACK = 1e-9


@dataclass(frozen=True)
class SqueezingParam:
    """Dimensionless squeezing amplitude of the pair source, in [0, 1)."""

    lam: float

    def __post_init__(self):
        if not (0.0 <= self.lam < 1.0):
            raise ConfigError(f"squeezing amplitude must lie in [0, 1), got {self.lam}")

    @property
    def pair_param(self) -> float:
        """Per-pulse pair-generation parameter x = lam**2."""
        return self.lam * self.lam

    @property
    def mean_pairs(self) -> float:
        """Mean pairs per pulse, x / (1 - x)."""
        x = self.pair_param
        return x / (1.0 - x)

    @classmethod
    def from_pair_param(cls, x: float) -> "SqueezingParam":
        if not (0.0 <= x < 1.0):
            raise ConfigError(f"pair parameter must lie in [0, 1), got {x}")
        return cls(math.sqrt(x))


@dataclass(frozen=True)
class FockTruncation:
    """Retained Fock range 0..n_max with a thermal tail-mass tolerance."""

    n_max: int = DEFAULT_N_MAX
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if not isinstance(self.n_max, (int, np.integer)) or self.n_max < 0:
            raise ConfigError(f"n_max must be a non-negative integer, got {self.n_max}")
        if not (0.0 < self.tail_tol < 1.0):
            raise ConfigError(f"tail tolerance must lie in (0, 1), got {self.tail_tol}")

    def thermal_tail(self, squeezing: SqueezingParam) -> float:
        """Thermal probability mass above n_max: x**(n_max + 1)."""
        return squeezing.pair_param ** (self.n_max + 1)

    def check(self, squeezing: SqueezingParam) -> None:
        tail = self.thermal_tail(squeezing)
        if tail > self.tail_tol:
            raise TruncationError(
                f"thermal tail {tail:.3e} above n_max={self.n_max} exceeds "
                f"tolerance {self.tail_tol:.1e}; increase n_max"
            )

    @classmethod
    def adequate(cls, squeezing: SqueezingParam, tail_tol: float = DEFAULT_TAIL_TOL,
                 n_min: int = DEFAULT_N_MAX) -> "FockTruncation":
        """Smallest truncation (at least n_min) whose thermal tail is below tol."""
        x = squeezing.pair_param
        if x == 0.0:
            return cls(n_min, tail_tol)
        needed = math.ceil(math.log(tail_tol) / math.log(x) - 1.0) + 2
        return cls(max(n_min, needed), tail_tol)


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Normalized probabilities P(n) on the truncated Fock range."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ConfigError("probabilities must form a non-empty 1-D vector")
        if not np.all(np.isfinite(p)) or np.any(p < -_COEFF_SLACK):
            raise ConfigError("probabilities must be finite and non-negative")
        p = np.clip(p, 0.0, None)
        total = math.fsum(p.tolist())
        if abs(total - 1.0) > _NORM_TOL:
            raise ConfigError(f"probabilities must sum to 1 within {_NORM_TOL}, got {total}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "PhotonNumberDistribution":
        """Normalize a non-negative weight vector into a distribution."""
        w = np.asarray(weights, dtype=float)
        total = math.fsum(w.tolist())
        if total <= 0.0:
            raise ConfigError("weights must have positive total mass")
        return cls(w / total)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    def mean(self) -> float:
        n = np.arange(self.probs.size)
        return math.fsum((n * self.probs).tolist())

    def second_factorial_moment(self) -> float:
        n = np.arange(self.probs.size)
        return math.fsum((n * (n - 1) * self.probs).tolist())


@dataclass(frozen=True)
class PovmCoefficients:
    """Diagonal coefficients c_n of one detector outcome on Fock levels 0..n_max."""

    label: str
    outcome: int
    efficiency: float
    coefficients: np.ndarray
    num_detectors: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.efficiency <= 1.0):
            raise ConfigError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        c = np.asarray(self.coefficients, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise ConfigError("coefficients must form a non-empty 1-D vector")
        if not np.all(np.isfinite(c)):
            raise ConfigError("coefficients must be finite")
        if np.any(c < -_COEFF_SLACK) or np.any(c > 1.0 + _COEFF_SLACK):
            raise ConfigError("coefficients must lie in [0, 1]")
        c = np.clip(c, 0.0, 1.0)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n_max(self) -> int:
        return self.coefficients.size - 1


def thermal_distribution(squeezing: SqueezingParam,
                         trunc: FockTruncation = FockTruncation()) -> PhotonNumberDistribution:
    """Thermal pair-number distribution P(k) = (1 - x) x**k on 0..n_max.

    Renormalized over the truncated range; raises TruncationError when the
    discarded tail exceeds the truncation's tolerance.
    """
    trunc.check(squeezing)
    x = squeezing.pair_param
    k = np.arange(trunc.n_max + 1)
    return PhotonNumberDistribution.from_weights((1.0 - x) * x ** k)


def povm_click(fire: bool, eta: float,
               trunc: FockTruncation = FockTruncation()) -> PovmCoefficients:
    """Click-detector outcome: c_n = 1 - (1-eta)**n if fired, else (1-eta)**n."""
    _check_eta(eta)
    n = np.arange(trunc.n_max + 1)
    no_click = (1.0 - eta) ** n
    c = 1.0 - no_click if fire else no_click
    label = "click_fire" if fire else "click_vacuum"
    return PovmCoefficients(label, int(fire), eta, c)


def povm_pnr(m: int, eta: float,
             trunc: FockTruncation = FockTruncation()) -> PovmCoefficients:
    """Number-resolving outcome m: c_n = C(n, m) (1-eta)**(n-m) eta**m for n >= m."""
    _check_eta(eta)
    if m < 0:
        raise ConfigError(f"outcome m must be non-negative, got {m}")
    c = np.zeros(trunc.n_max + 1)
    for n in range(m, trunc.n_max + 1):
        c[n] = math.comb(n, m) * (1.0 - eta) ** (n - m) * eta**m
    return PovmCoefficients(f"pnr_{m}", m, eta, c)


def povm_ppnr(m: int, eta: float, num_detectors: int,
              trunc: FockTruncation = FockTruncation()) -> PovmCoefficients:
    """Pseudo-PNR outcome: m of num_detectors click detectors fire.

    c_n = C(M, m) * sum_j (-1)**j C(m, j) ((1-eta) + eta (m-j) / M)**n, zero
    below n = m. The incoming state is split evenly over the M detectors.
    """
    _check_eta(eta)
    if num_detectors < 1:
        raise ConfigError(f"num_detectors must be positive, got {num_detectors}")
    if not (0 <= m <= num_detectors):
        raise ConfigError(f"outcome m must lie in 0..{num_detectors}, got {m}")
    n = np.arange(trunc.n_max + 1)
    terms = np.zeros((m + 1, trunc.n_max + 1))
    for j in range(m + 1):
        base = (1.0 - eta) + eta * (m - j) / num_detectors
        terms[j] = (-1.0) ** j * math.comb(m, j) * base**n
    c = math.comb(num_detectors, m) * np.array(
        [math.fsum(terms[:, i].tolist()) for i in range(trunc.n_max + 1)]
    )
    c[:m] = 0.0  # exactly zero analytically; clears rounding residue
    return PovmCoefficients(f"ppnr_{m}of{num_detectors}", m, eta, c,
                            num_detectors=num_detectors)


def click_outcomes(eta: float, trunc: FockTruncation = FockTruncation()) -> list[PovmCoefficients]:
    return [povm_click(False, eta, trunc), povm_click(True, eta, trunc)]


def ppnr_outcomes(eta: float, num_detectors: int,
                  trunc: FockTruncation = FockTruncation()) -> list[PovmCoefficients]:
    return [povm_ppnr(m, eta, num_detectors, trunc) for m in range(num_detectors + 1)]


def pnr_outcomes(eta: float, trunc: FockTruncation = FockTruncation()) -> list[PovmCoefficients]:
    return [povm_pnr(m, eta, trunc) for m in range(trunc.n_max + 1)]


def apply_confusion(povm_set: Sequence[PovmCoefficients],
                    confusion: ConfusionMatrix | np.ndarray) -> list[PovmCoefficients]:
    """Mix outcome coefficients through a reporting confusion matrix.

    Row d of the matrix gives P(report r | detected outcome d) over the input
    outcome list; the returned list holds the reported-outcome coefficients
    c'_n(r) = sum_d P(r | d) c_n(d). Completeness of the set is preserved.
    """
    matrix = confusion.entries if isinstance(confusion, ConfusionMatrix) else np.asarray(confusion, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise SchemaError(f"confusion matrix must be square, got shape {matrix.shape}")
    if matrix.shape[0] != len(povm_set):
        raise SchemaError(
            f"confusion has {matrix.shape[0]} rows but {len(povm_set)} outcomes were given"
        )
    row_sums = matrix.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-9) or np.any(matrix < 0.0):
        raise ConfigError("confusion rows must be distributions over reported outcomes")
    sizes = {p.coefficients.size for p in povm_set}
    if len(sizes) != 1:
        raise SchemaError("all outcomes must share one truncation")
    stacked = np.stack([p.coefficients for p in povm_set])
    mixed = matrix.T @ stacked
    out = []
    for r, povm in enumerate(povm_set):
        out.append(PovmCoefficients(
            f"{povm.label}_reported", povm.outcome, povm.efficiency,
            np.clip(mixed[r], 0.0, 1.0), num_detectors=povm.num_detectors,
        ))
    return out


def povm_pnr_reported(m: int, eta: float, confusion: ConfusionMatrix,
                      trunc: FockTruncation = FockTruncation()) -> PovmCoefficients:
    """PNR outcome as seen after imperfect count discrimination.

    c'_n(report m) = sum_{d=1..n_res} P(m | d) c_n(PNR d). Reports outside the
    resolved range fall back to the ideal PNR outcome.
    """
    if m < 1 or m > confusion.n_res:
        return povm_pnr(m, eta, trunc)
    c = np.zeros(trunc.n_max + 1)
    for d in range(1, confusion.n_res + 1):
        p = confusion.prob(m, d)
        if p > 0.0:
            c += p * povm_pnr(d, eta, trunc).coefficients
    return PovmCoefficients(f"pnr_{m}_reported", m, eta, np.clip(c, 0.0, 1.0))


def _check_eta(eta: float) -> None:
    if not (0.0 <= eta <= 1.0):
        raise ConfigError(f"efficiency must lie in [0, 1], got {eta}")


def _series_sums(squeezing: SqueezingParam, povm: PovmCoefficients) -> tuple[float, float, float]:
    """Compensated sums of c_n x**n, n c_n x**n and n(n-1) c_n x**n."""
    x = squeezing.pair_param
    tail = x ** (povm.n_max + 1)
    if tail > DEFAULT_TAIL_TOL:
        raise TruncationError(
            f"thermal tail {tail:.3e} above the outcome's n_max={povm.n_max} "
            f"exceeds {DEFAULT_TAIL_TOL:.1e}; rebuild the outcome with a larger truncation"
        )
    n = np.arange(povm.n_max + 1)
    terms = povm.coefficients * x**n
    s0 = math.fsum(terms.tolist())
    s1 = math.fsum((n * terms).tolist())
    s2 = math.fsum((n * (n - 1) * terms).tolist())
    return s0, s1, s2


def herald_probability(squeezing: SqueezingParam, povm: PovmCoefficients) -> float:
    """Probability the herald detector produces this outcome: (1 - x) sum c_n x**n."""
    s0, _, _ = _series_sums(squeezing, povm)
    return (1.0 - squeezing.pair_param) * s0


@dataclass(frozen=True)
class HeraldedState:
    """Signal-arm photon-number populations conditioned on a herald outcome."""

    distribution: PhotonNumberDistribution
    herald_probability: float

    def __post_init__(self):
        if not (0.0 <= self.herald_probability <= 1.0):
            raise ConfigError(
                f"herald probability must lie in [0, 1], got {self.herald_probability}"
            )


def heralded_state(squeezing: SqueezingParam, povm: PovmCoefficients) -> HeraldedState:
    """Conditional state P(n) = c_n x**n / sum_k c_k x**k plus the herald probability."""
    x = squeezing.pair_param
    n = np.arange(povm.n_max + 1)
    terms = povm.coefficients * x**n
    s0, _, _ = _series_sums(squeezing, povm)
    if s0 <= 0.0:
        raise ZeroHeraldError(
            f"outcome {povm.label} has zero probability at lam^2 = {x}; "
            "cannot condition on it"
        )
    p_h = min((1.0 - x) * s0, 1.0)
    return HeraldedState(PhotonNumberDistribution.from_weights(terms), p_h)


def g2_of_distribution(dist: PhotonNumberDistribution) -> float:
    """Zero-delay second-order correlation sum n(n-1)P(n) / (sum n P(n))**2."""
    mean = dist.mean()
    if mean <= 0.0:
        raise UndefinedG2Error("g2 undefined: mean photon number is zero")
    return dist.second_factorial_moment() / (mean * mean)


def g2_heralded(squeezing: SqueezingParam, povm: PovmCoefficients) -> float:
    """g2(0) of the heralded signal arm, evaluated directly from the series.

    Equals g2_of_distribution(heralded_state(...).distribution) to 1e-12.
    """
    s0, s1, s2 = _series_sums(squeezing, povm)
    if s0 <= 0.0:
        raise ZeroHeraldError(
            f"outcome {povm.label} has zero probability at lam^2 = {squeezing.pair_param}"
        )
    if s1 <= 0.0:
        raise UndefinedG2Error("g2 undefined: heralded mean photon number is zero")
    return s0 * s2 / (s1 * s1)


def improvement_ratio(squeezing: SqueezingParam, eta: float,
                      trunc: FockTruncation | None = None) -> float:
    """g2(click fire) / g2(PNR m=1) at matched squeezing and efficiency.

    Diverges at eta = 1, where the ideal PNR herald gives g2 = 0; that case
    raises DivergentRatioError so grid sweeps can substitute a sentinel.
    """
    _check_eta(eta)
    if eta == 1.0:
        raise DivergentRatioError("ideal-PNR ratio diverges at unit efficiency")
    if trunc is None:
        trunc = FockTruncation.adequate(squeezing)
    g2_click = g2_heralded(squeezing, povm_click(True, eta, trunc))
    g2_pnr = g2_heralded(squeezing, povm_pnr(1, eta, trunc))
    return g2_click / g2_pnr


def improvement_ratio_small_lam(eta: float) -> float:
    """Leading-order (lam -> 0) limit of the improvement ratio, (2-eta)/(2(1-eta))."""
    _check_eta(eta)
    if eta == 1.0:
        raise DivergentRatioError("ideal-PNR ratio diverges at unit efficiency")
    return (2.0 - eta) / (2.0 * (1.0 - eta))
