"""Photon-number binning of slope histograms via a sum-of-Gaussians fit.

The slope histogram shows one peak per detected photon number. A sum of
Gaussians is fitted to the binned counts (or, with the EM backend, directly to
the raw samples); the intersections between adjacent weighted Gaussians become
the bin edges, the lowest bin is photon number one, and the per-number overlap
integrals give the count-discrimination confusion matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import find_peaks
from scipy.special import ndtr

from ..confusion import ConfusionMatrix
from ..errors import ConfigError, MixtureFitError
from .slopes import SlopeSample

_MASS_TOL = 0.01


@dataclass(frozen=True)
class MixtureComponent:
    """One Gaussian component: event mass, mean and width in mV/ns."""

    weight: float
    mean: float
    std: float

    def __post_init__(self):
        if self.weight <= 0 or self.std <= 0:
            raise MixtureFitError(
                f"component must have positive weight and width, got {self}"
            )


@dataclass(frozen=True)
class BinEdges:
    """Discrimination thresholds between adjacent photon-number components.

    fallback marks edges where no weighted-Gaussian intersection existed inside
    the flanked interval and the equal-Mahalanobis point was used instead.
    """

    edges: tuple[float, ...]
    fallback: tuple[bool, ...] = ()

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise MixtureFitError(f"bin edges must increase strictly, got {self.edges}")
        if self.fallback and len(self.fallback) != len(self.edges):
            raise MixtureFitError("fallback flags must align with edges")

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class GaussianMixture:
    """Ordered sum-of-Gaussians model of the slope histogram."""

    components: tuple[MixtureComponent, ...]
    bin_edges: BinEdges
    fit_quality: float
    histogram_mass: float | None = None

    def __post_init__(self):
        if not self.components:
            raise MixtureFitError("a mixture needs at least one component")
        means = [c.mean for c in self.components]
        if any(b <= a for a, b in zip(means, means[1:])):
            raise MixtureFitError(f"component means must increase strictly, got {means}")
        if self.histogram_mass is not None:
            total = sum(c.weight for c in self.components)
            # 1% for large corpora; small samples get their statistical slack
            tol = max(_MASS_TOL, 4.0 / math.sqrt(self.histogram_mass))
            if abs(total - self.histogram_mass) > tol * self.histogram_mass:
                raise MixtureFitError(
                    f"component mass {total:.4g} deviates from histogram mass "
                    f"{self.histogram_mass:.4g} by more than {tol:.1%}"
                )

    @property
    def num_components(self) -> int:
        return len(self.components)

    def density(self, x: np.ndarray) -> np.ndarray:
        """Event-mass density (counts per unit slope) at x."""
        x = np.asarray(x, dtype=float)
        total = np.zeros_like(x)
        for c in self.components:
            total += (c.weight / (c.std * math.sqrt(2 * math.pi))
                      * np.exp(-0.5 * ((x - c.mean) / c.std) ** 2))
        return total


def _as_slope_array(slopes: Iterable) -> np.ndarray:
    values = [s.slope_mv_per_ns if isinstance(s, SlopeSample) else float(s) for s in slopes]
    arr = np.asarray(values, dtype=float)
    return arr[np.isfinite(arr)]


def _sum_of_gaussians(x, *params):
    y = np.zeros_like(x)
    for k in range(len(params) // 3):
        amp, mean, std = params[3 * k:3 * k + 3]
        y = y + amp * np.exp(-0.5 * ((x - mean) / std) ** 2)
    return y


def _histogram(slopes: np.ndarray, bin_rule: str):
    lo, hi = slopes.min(), slopes.max()
    if hi <= lo:
        raise MixtureFitError("slope sample has zero spread")
    if bin_rule == "fd":
        q75, q25 = np.percentile(slopes, [75, 25])
        width = 2.0 * (q75 - q25) / slopes.size ** (1.0 / 3.0)
        if width <= 0:
            width = (hi - lo) / (1 + math.ceil(math.log2(slopes.size)))
        nbins = int(np.clip(math.ceil((hi - lo) / width), 16, 4000))
    elif bin_rule == "sturges":
        nbins = 1 + math.ceil(math.log2(slopes.size))
    else:
        raise ConfigError(f"unknown bin rule {bin_rule!r}")
    counts, edges = np.histogram(slopes, bins=nbins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return counts.astype(float), centers, edges[1] - edges[0]


def _initial_peaks(counts: np.ndarray, centers: np.ndarray, bin_width: float):
    """Smoothed local maxima with a prominence floor, ordered by position."""
    kernel_sigma = 2.0
    half = int(4 * kernel_sigma)
    k = np.exp(-0.5 * (np.arange(-half, half + 1) / kernel_sigma) ** 2)
    smoothed = np.convolve(counts, k / k.sum(), mode="same")
    prominence = max(5.0, 0.002 * smoothed.max())
    peaks, props = find_peaks(smoothed, prominence=prominence,
                              distance=max(2, counts.size // 100))
    order = np.argsort(props["prominences"])[::-1]
    return peaks[order], smoothed


def _fit_histogram(slopes: np.ndarray, num_components, bin_rule: str):
    counts, centers, bin_width = _histogram(slopes, bin_rule)
    peaks, smoothed = _initial_peaks(counts, centers, bin_width)
    if num_components == "auto":
        k = max(1, len(peaks))
    else:
        k = int(num_components)

    if len(peaks) >= k:
        positions = list(np.sort(centers[peaks[:k]]))
    elif len(peaks) == 0:
        # nothing resolvable: spread the seeds over the sample quantiles
        positions = list(np.quantile(slopes, (np.arange(k) + 0.5) / k))
    else:
        # low-weight components hide below the prominence floor; continue the
        # peak ladder beyond the last maximum with the observed spacing
        positions = list(np.sort(centers[peaks]))
        spacing = (float(np.median(np.diff(positions))) if len(positions) > 1
                   else (centers[-1] - positions[0]) / (k - len(positions) + 1))
        while len(positions) < k:
            positions.append(positions[-1] + spacing)
    spacing = (float(np.diff(positions).mean()) if len(positions) > 1
               else (centers[-1] - centers[0]) / (k + 1))
    sigma0 = max(spacing / 4.0, 2.0 * bin_width)

    p0, lower, upper = [], [], []
    for pos in positions:
        amp = max(smoothed[np.abs(centers - pos).argmin()], 1.0)
        p0.extend([amp, pos, sigma0])
        lower.extend([0.0, centers[0] - spacing, bin_width / 2.0])
        upper.extend([counts.max() * 2.0, centers[-1] + spacing, centers[-1] - centers[0]])

    errors = np.sqrt(np.maximum(counts, 1.0))
    try:
        popt, _ = curve_fit(_sum_of_gaussians, centers, counts, p0=p0,
                            sigma=errors, bounds=(lower, upper), maxfev=20000)
    except (RuntimeError, ValueError) as exc:
        raise MixtureFitError(f"sum-of-Gaussians fit did not converge: {exc}") from exc

    fit = _sum_of_gaussians(centers, *popt)
    ndf = max(counts.size - 3 * k, 1)
    chi2_ndf = float(np.sum(((counts - fit) / errors) ** 2) / ndf)

    components = []
    for i in range(k):
        amp, mean, std = popt[3 * i:3 * i + 3]
        mass = amp * std * math.sqrt(2 * math.pi) / bin_width
        components.append(MixtureComponent(max(mass, 1e-12), float(mean), float(std)))
    return components, chi2_ndf


def _fit_em(slopes: np.ndarray, num_components, max_iter=300, tol=1e-10):
    if num_components == "auto":
        counts, centers, bin_width = _histogram(slopes, "fd")
        peaks, _ = _initial_peaks(counts, centers, bin_width)
        k = max(1, len(peaks))
        means = np.sort(centers[np.sort(peaks[:k])]) if len(peaks) else np.array([slopes.mean()])
    else:
        k = int(num_components)
        means = np.quantile(slopes, (np.arange(k) + 0.5) / k)
    stds = np.full(k, max(slopes.std() / max(k, 1), 1e-6))
    weights = np.full(k, 1.0 / k)

    log_likelihood = -np.inf
    for _ in range(max_iter):
        dens = (weights / (stds * math.sqrt(2 * math.pi))
                * np.exp(-0.5 * ((slopes[:, None] - means) / stds) ** 2))
        total = dens.sum(axis=1)
        total = np.maximum(total, 1e-300)
        new_ll = float(np.log(total).sum())
        resp = dens / total[:, None]
        mass = resp.sum(axis=0)
        if np.any(mass <= 0):
            raise MixtureFitError("EM responsibility for a component collapsed to zero")
        means = (resp * slopes[:, None]).sum(axis=0) / mass
        var = (resp * (slopes[:, None] - means) ** 2).sum(axis=0) / mass
        stds = np.sqrt(np.maximum(var, 1e-12))
        weights = mass / slopes.size
        if abs(new_ll - log_likelihood) < tol * abs(new_ll):
            break
        log_likelihood = new_ll

    order = np.argsort(means)
    components = [MixtureComponent(float(mass[i]), float(means[i]), float(stds[i]))
                  for i in order]
    return components, -new_ll / slopes.size


def fit_mixture(slopes: Iterable, num_components="auto", *,
                min_samples: int = 100, bin_rule: str = "fd",
                backend: str = "histogram") -> GaussianMixture:
    """Fit a sum of Gaussians to the slope distribution and derive bin edges.

    Parameters
    ----------
    slopes:
        Slope values in mV/ns, or SlopeSample records.
    num_components:
        Number of Gaussians, or "auto" to take the persistent local maxima of
        the smoothed histogram.
    backend:
        "histogram" fits binned counts by weighted least squares; "em" runs
        expectation-maximization on the raw samples. Both return the same
        structure.
    """
    if num_components != "auto" and int(num_components) < 1:
        raise ConfigError(f"num_components must be >= 1 or 'auto', got {num_components}")
    arr = _as_slope_array(slopes)
    if arr.size < min_samples:
        raise MixtureFitError(f"need at least {min_samples} slope samples, got {arr.size}")

    if backend == "histogram":
        components, quality = _fit_histogram(arr, num_components, bin_rule)
    elif backend == "em":
        components, quality = _fit_em(arr, num_components)
    else:
        raise ConfigError(f"unknown backend {backend!r}")

    components = sorted(components, key=lambda c: c.mean)
    means = [c.mean for c in components]
    span = arr.max() - arr.min()
    if any(b - a < 1e-6 * span for a, b in zip(means, means[1:])):
        raise MixtureFitError(f"component means collapsed together: {means}")

    provisional = GaussianMixture(tuple(components), BinEdges(()), quality,
                                  histogram_mass=float(arr.size))
    edges = compute_bin_edges(provisional)
    return GaussianMixture(tuple(components), edges, quality,
                           histogram_mass=float(arr.size))


def _intersection(c1: MixtureComponent, c2: MixtureComponent) -> float | None:
    """Solution of w1 N(x; m1, s1) = w2 N(x; m2, s2) inside (m1, m2), or None."""
    a = 0.5 / c2.std**2 - 0.5 / c1.std**2
    b = c1.mean / c1.std**2 - c2.mean / c2.std**2
    c = (c2.mean**2 / (2 * c2.std**2) - c1.mean**2 / (2 * c1.std**2)
         - math.log((c2.weight * c1.std) / (c1.weight * c2.std)))
    if abs(a) < 1e-300:
        if b == 0.0:
            return None
        roots = [-c / b]
    else:
        disc = b * b - 4 * a * c
        if disc < 0:
            return None
        sq = math.sqrt(disc)
        roots = [(-b - sq) / (2 * a), (-b + sq) / (2 * a)]
    inside = [r for r in roots if c1.mean < r < c2.mean]
    if not inside:
        return None
    if len(inside) == 1:
        return inside[0]
    # two crossings inside: keep the one nearest the density valley
    grid = np.linspace(c1.mean, c2.mean, 512)
    dens = (c1.weight / c1.std * np.exp(-0.5 * ((grid - c1.mean) / c1.std) ** 2)
            + c2.weight / c2.std * np.exp(-0.5 * ((grid - c2.mean) / c2.std) ** 2))
    valley = grid[dens.argmin()]
    return min(inside, key=lambda r: abs(r - valley))


def compute_bin_edges(mixture: GaussianMixture) -> BinEdges:
    """Thresholds between adjacent components at the weighted-Gaussian crossings.

    When no crossing lies strictly between two means, the equal-Mahalanobis
    point (m1 s2 + m2 s1) / (s1 + s2) is used and flagged. A single component
    yields no edges: every event is the lowest photon-number class.
    """
    comps = mixture.components
    edges, flags = [], []
    for c1, c2 in zip(comps, comps[1:]):
        root = _intersection(c1, c2)
        if root is None:
            root = (c1.mean * c2.std + c2.mean * c1.std) / (c1.std + c2.std)
            flags.append(True)
        else:
            flags.append(False)
        edges.append(float(root))
    return BinEdges(tuple(edges), tuple(flags))


def assign_photon_numbers(slopes: Iterable, edges: BinEdges | Sequence[float]) -> np.ndarray:
    """Photon number per slope: k when slope lies in (edge_{k-1}, edge_k].

    Ties land in the lower class (closed-right bins); slopes above the last
    edge take the highest class.
    """
    edge_values = np.asarray(edges.edges if isinstance(edges, BinEdges) else edges, dtype=float)
    if np.any(np.diff(edge_values) <= 0):
        raise ConfigError("edges must increase strictly")
    arr = np.asarray([s.slope_mv_per_ns if isinstance(s, SlopeSample) else float(s)
                      for s in slopes], dtype=float)
    return np.searchsorted(edge_values, arr, side="left") + 1


def confusion_from_mixture(mixture: GaussianMixture,
                           edges: BinEdges | Sequence[float]) -> ConfusionMatrix:
    """P(report m | true n) from the per-component mass inside each slope bin."""
    edge_values = np.asarray(edges.edges if isinstance(edges, BinEdges) else edges, dtype=float)
    bounds = np.concatenate(([-np.inf], edge_values, [np.inf]))
    rows = []
    for comp in mixture.components:
        cdf = ndtr((bounds - comp.mean) / comp.std)
        row = np.diff(cdf)
        rows.append(row / row.sum())
    return ConfusionMatrix(np.vstack(rows))


def total_variation_distance(p, q) -> float:
    """Half the L1 distance between two distributions; shorter one zero-padded."""
    p_arr = np.asarray(getattr(p, "probs", p), dtype=float)
    q_arr = np.asarray(getattr(q, "probs", q), dtype=float)
    size = max(p_arr.size, q_arr.size)
    p_pad = np.zeros(size)
    q_pad = np.zeros(size)
    p_pad[:p_arr.size] = p_arr
    q_pad[:q_arr.size] = q_arr
    return 0.5 * float(np.abs(p_pad - q_pad).sum())
