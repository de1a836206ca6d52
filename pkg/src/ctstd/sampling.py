"""Slice selection strategies: density-quantile, uniform and random.

The density strategy fits a Gaussian kernel density estimate to the
per-slice lung areas, inverts its closed-form CDF at evenly spaced
percentiles, and greedily maps each quantile to the slice with the
nearest area.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import CtStdError, ValidationError
from .spatial import LungMaskSet

SCOTT_FACTOR = 1.06
CDF_TOLERANCE = 1e-9
MAX_BISECTIONS = 200
STRATEGIES = ("kds", "uniform", "random")


@dataclass(frozen=True)
class DensityProfile:
    """Per-slice lung areas with a fitted Gaussian KDE and closed-form CDF."""

    areas: np.ndarray
    bandwidth_h: float

    def __post_init__(self):
        a = np.ascontiguousarray(np.asarray(self.areas, dtype=np.float64))
        if a.ndim != 1 or a.size < 1:
            raise ValidationError("areas must be a non-empty 1-D sequence")
        if (a < 0).any():
            raise ValidationError("areas must be non-negative")
        if not self.bandwidth_h > 0:
            raise ValidationError(f"bandwidth must be positive, got {self.bandwidth_h}")
        a.setflags(write=False)
        object.__setattr__(self, "areas", a)

    @property
    def n_slices(self) -> int:
        return self.areas.size

    def pdf(self, x):
        """Density estimate: mean of normal bumps of width h, unit integral."""
        x = np.asarray(x, dtype=np.float64)
        u = (x[..., None] - self.areas) / self.bandwidth_h
        norm = self.areas.size * self.bandwidth_h * math.sqrt(2.0 * math.pi)
        return np.exp(-0.5 * u * u).sum(axis=-1) / norm

    def cdf(self, x):
        """Cumulative distribution: mean of normal CDFs, range (0, 1)."""
        x = np.asarray(x, dtype=np.float64)
        u = (x[..., None] - self.areas) / self.bandwidth_h
        return ndtr(u).mean(axis=-1)


@dataclass(frozen=True)
class SliceSelection:
    """Ordered slice indices chosen by one strategy, with provenance."""

    indices: tuple
    strategy: str
    percentiles: tuple = ()
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "percentiles", tuple(float(p) for p in self.percentiles))
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        idx = self.indices
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValidationError("selected indices must be strictly increasing")
        if idx and idx[0] < 0:
            raise ValidationError("negative slice index")


def lung_area_profile(m: LungMaskSet) -> np.ndarray:
    """Count of mask pixels per slice, in slice order."""
    return m.masks.sum(axis=(1, 2), dtype=np.int64)


def scott_bandwidth(areas: np.ndarray) -> float:
    """Scott's-rule bandwidth 1.06 * std * s^(-1/5).

    Uses the sample standard deviation (n-1 normalization).  Degenerate
    profiles (one slice, or all areas equal) fall back to a floor of
    ``max(1, 1e-6 * mean)`` so the CDF stays invertible.
    """
    a = np.asarray(areas, dtype=np.float64)
    s = a.size
    std = float(a.std(ddof=1)) if s >= 2 else 0.0
    if std > 0.0:
        return SCOTT_FACTOR * std * s ** (-1.0 / 5.0)
    return max(1.0, 1e-6 * float(a.mean()))


def fit_kde(areas) -> DensityProfile:
    """Fit the Gaussian KDE with Scott's-rule bandwidth to an area profile."""
    a = np.asarray(areas, dtype=np.float64)
    if a.size == 0:
        raise ValidationError("cannot fit a density to an empty area profile")
    return DensityProfile(a, scott_bandwidth(a))


def invert_cdf(d: DensityProfile, p: float) -> float:
    """The area value q with F(q) = p, by bisection to 1e-9 in probability."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"percentile must lie in (0, 1), got {p}")
    h = d.bandwidth_h
    lo = float(d.areas.min()) - 10.0 * h
    hi = float(d.areas.max()) + 10.0 * h
    for _ in range(MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        f = float(d.cdf(mid))
        if abs(f - p) <= CDF_TOLERANCE:
            return mid
        if f < p:
            lo = mid
        else:
            hi = mid
    raise CtStdError(
        f"CDF inversion did not reach |F(q) - p| <= {CDF_TOLERANCE} for p={p}"
    )


def midpoint_percentiles(n: int) -> tuple:
    """Evenly spaced percentiles (2i - 1) / (2n) for i = 1..n."""
    return tuple((2 * i - 1) / (2 * n) for i in range(1, n + 1))


def select_kds(d: DensityProfile, count: int = 8, percentiles=None) -> SliceSelection:
    """Density-quantile selection with nearest-area greedy assignment.

    Each quantile claims the not-yet-selected slice whose area is nearest
    (ties to the lower slice index); the final index list is sorted.  When
    the scan has at most ``count`` slices, every slice is returned.
    """
    if percentiles is not None:
        ps = tuple(float(p) for p in percentiles)
        if any(not 0.0 < p < 1.0 for p in ps):
            raise ValidationError("percentiles must lie in (0, 1)")
    else:
        if count < 1:
            raise ValidationError(f"count must be >= 1, got {count}")
        ps = midpoint_percentiles(count)
    s = d.n_slices
    if s <= len(ps):
        return SliceSelection(tuple(range(s)), "kds", ps)
    areas = d.areas
    taken = np.zeros(s, dtype=bool)
    chosen = []
    for p in ps:
        q = invert_cdf(d, p)
        gaps = np.abs(areas - q)
        gaps[taken] = np.inf
        best = int(np.argmin(gaps))  # argmin returns the lowest index on ties
        taken[best] = True
        chosen.append(best)
    return SliceSelection(tuple(sorted(chosen)), "kds", ps)


def select_uniform(s: int, count: int = 8) -> SliceSelection:
    """Deterministic evenly spaced indices floor((2i + 1) * s / (2n))."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if s < 1:
        raise ValidationError(f"slice count must be >= 1, got {s}")
    if s <= count:
        return SliceSelection(tuple(range(s)), "uniform")
    indices = []
    prev = -1
    for i in range(count):
        idx = min((2 * i + 1) * s // (2 * count), s - 1)
        if idx <= prev:  # forward shift on collision; cannot occur for s > n
            idx = prev + 1
        indices.append(idx)
        prev = idx
    return SliceSelection(tuple(indices), "uniform")


def select_random(s: int, count: int = 8, seed: int = 0) -> SliceSelection:
    """Seeded draw of ``count`` distinct indices, reported sorted."""
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")
    if s < 1:
        raise ValidationError(f"slice count must be >= 1, got {s}")
    if s <= count:
        return SliceSelection(tuple(range(s)), "random", seed=seed)
    rng = np.random.default_rng(seed)
    picks = rng.choice(s, size=count, replace=False)
    return SliceSelection(tuple(sorted(int(i) for i in picks)), "random", seed=seed)
