"""Spatial standardization: lung-mask extraction and lung-centric cropping.

A scan is filtered with a normalized mean window, thresholded with Otsu's
method on the pooled whole-scan histogram, refined with a 3x3 opening plus
small-component removal, and finally cropped to the union bounding box of
the refined masks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateHistogram, EmptyBoundingBox, ValidationError
from .volume import ScanVolume


@dataclass(frozen=True)
class BoundingBox:
    """Inclusive pixel bounds of a rectangular region; may be empty."""

    row_min: int = 0
    row_max: int = -1
    col_min: int = 0
    col_max: int = -1
    empty: bool = True

    def __post_init__(self):
        if not self.empty:
            if self.row_min > self.row_max or self.col_min > self.col_max:
                raise ValidationError(f"inverted bounding box {self}")
            if min(self.row_min, self.col_min) < 0:
                raise ValidationError(f"negative bounding box corner {self}")

    @property
    def height(self) -> int:
        return 0 if self.empty else self.row_max - self.row_min + 1

    @property
    def width(self) -> int:
        return 0 if self.empty else self.col_max - self.col_min + 1

    def to_dict(self) -> dict:
        if self.empty:
            return {"empty": True}
        return {
            "empty": False,
            "row_min": self.row_min,
            "row_max": self.row_max,
            "col_min": self.col_min,
            "col_max": self.col_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundingBox":
        if d.get("empty", False):
            return cls()
        return cls(d["row_min"], d["row_max"], d["col_min"], d["col_max"], False)


@dataclass(frozen=True)
class LungMaskSet:
    """Per-slice binary masks plus the threshold and filter radius used."""

    masks: np.ndarray  # (n_slices, height, width) bool
    threshold_t: int
    filter_radius: int = 0

    def __post_init__(self):
        m = np.asarray(self.masks)
        if m.ndim != 3:
            raise ValidationError(f"masks must be 3-D, got ndim={m.ndim}")
        if m.dtype != np.bool_:
            if not np.isin(np.unique(m), (0, 1)).all():
                raise ValidationError("mask values must be 0 or 1")
            m = m.astype(bool)
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "masks", m)
        if self.threshold_t < 0:
            raise ValidationError(f"negative threshold {self.threshold_t}")

    @property
    def n_slices(self) -> int:
        return self.masks.shape[0]


def filter_slices(v: ScanVolume, radius: int = 1) -> ScanVolume:
    """Smooth every slice with a normalized (2k+1)^2 mean window.

    Borders are edge-replicated so dimensions are preserved; means are
    rounded half-up back to the volume's integer range.
    """
    if radius < 1:
        raise ValidationError(f"filter radius must be >= 1, got {radius}")
    if 2 * radius + 1 > min(v.width, v.height):
        raise ValidationError(
            f"filter window {2 * radius + 1} exceeds slice size "
            f"{v.height}x{v.width}"
        )
    return v.with_pixels(kernels.mean_filter(v.pixels, radius))


def adaptive_threshold(v_filtered: ScanVolume) -> int:
    """Otsu threshold on the pooled histogram of all filtered slices.

    Scans the full intensity range for the threshold maximizing
    between-class variance; when a run of thresholds ties (empty histogram
    gap), the median tied value is returned so the cut sits mid-gap.
    """
    levels = v_filtered.max_intensity + 1
    hist = np.bincount(v_filtered.pixels.ravel(), minlength=levels).astype(np.int64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateHistogram(
            "volume has fewer than two distinct intensity values"
        )
    values = np.arange(levels, dtype=np.int64)
    below_n = np.concatenate(([0], np.cumsum(hist)))[:-1]  # count of v < t
    below_s = np.concatenate(([0], np.cumsum(hist * values)))[:-1]
    total_n = int(hist.sum())
    total_s = int((hist * values).sum())
    above_n = total_n - below_n
    above_s = total_s - below_s
    with np.errstate(divide="ignore", invalid="ignore"):
        mu_below = below_s / below_n
        mu_above = above_s / above_n
        score = below_n.astype(np.float64) * above_n * (mu_above - mu_below) ** 2
    score[~np.isfinite(score)] = 0.0
    best = np.flatnonzero(score == score.max())
    return int(best[len(best) // 2])


def binarize(v_filtered: ScanVolume, t: int, filter_radius: int = 0) -> LungMaskSet:
    """Per-pixel mask: 1 where the filtered intensity is >= the threshold."""
    if not 0 <= t <= v_filtered.max_intensity:
        raise ValidationError(
            f"threshold {t} outside [0, {v_filtered.max_intensity}]"
        )
    return LungMaskSet(v_filtered.pixels >= t, t, filter_radius)


def refine_masks(m: LungMaskSet, min_component_fraction: float = 0.001) -> LungMaskSet:
    """One 3x3 opening pass, then removal of small 4-connected components.

    Components with fewer than ``min_component_fraction * width * height``
    pixels are dropped; the result is a subset of the opened mask.
    """
    if not 0 <= min_component_fraction < 1:
        raise ValidationError(
            f"min_component_fraction must be in [0, 1), got {min_component_fraction}"
        )
    opened = kernels.binary_opening(m.masks)
    min_size = min_component_fraction * m.masks.shape[1] * m.masks.shape[2]
    if min_size > 0:
        refined = kernels.remove_small_components(opened, min_size)
    else:
        refined = opened
    return LungMaskSet(refined, m.threshold_t, m.filter_radius)


def union_bounding_box(m: LungMaskSet) -> BoundingBox:
    """Tight box over the union of all masks; empty when no pixel is set."""
    union = m.masks.any(axis=0)
    rows = np.flatnonzero(union.any(axis=1))
    if rows.size == 0:
        return BoundingBox()
    cols = np.flatnonzero(union.any(axis=0))
    return BoundingBox(int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1]), False)


def crop_volume(v: ScanVolume, b: BoundingBox) -> ScanVolume:
    """Crop every slice to the bounding box, preserving pixel values."""
    if b.empty:
        raise EmptyBoundingBox("cannot crop to an empty bounding box")
    if b.row_max >= v.height or b.col_max >= v.width:
        raise ValidationError(
            f"bounding box {b} exceeds volume bounds {v.height}x{v.width}"
        )
    return v.with_pixels(
        v.pixels[:, b.row_min : b.row_max + 1, b.col_min : b.col_max + 1]
    )
