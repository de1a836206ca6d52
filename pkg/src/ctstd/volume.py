"""Volumetric data model: an ordered stack of grayscale slices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

_DTYPES = {8: np.uint8, 16: np.uint16}


@dataclass(frozen=True)
class ScanVolume:
    """An ordered stack of equally sized grayscale slices.

    ``pixels`` has shape ``(n_slices, height, width)``; index 0 is the first
    acquired slice.  Intensities must fit the declared bit depth.
    """

    pixels: np.ndarray
    bit_depth: int = 8
    scan_id: str = ""
    source_id: int = 0

    def __post_init__(self):
        if self.bit_depth not in _DTYPES:
            raise ValidationError(f"bit_depth must be 8 or 16, got {self.bit_depth}")
        px = np.asarray(self.pixels)
        if px.ndim != 3:
            raise ValidationError(
                f"pixels must be a (n_slices, height, width) array, got ndim={px.ndim}"
            )
        if px.shape[0] < 1 or px.shape[1] < 1 or px.shape[2] < 1:
            raise ValidationError(f"degenerate volume shape {px.shape}")
        want = _DTYPES[self.bit_depth]
        if px.dtype != want:
            if not np.issubdtype(px.dtype, np.integer):
                raise ValidationError(f"pixels must be integer-typed, got {px.dtype}")
            if px.min() < 0 or px.max() > self.max_intensity:
                raise ValidationError(
                    f"intensities outside [0, {self.max_intensity}] for "
                    f"bit_depth={self.bit_depth}"
                )
            px = px.astype(want)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def n_slices(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]

    @property
    def max_intensity(self) -> int:
        return (1 << self.bit_depth) - 1

    def with_pixels(self, pixels: np.ndarray) -> "ScanVolume":
        """A copy of this volume carrying new pixel data."""
        return ScanVolume(pixels, self.bit_depth, self.scan_id, self.source_id)


def volume_stats(v: ScanVolume) -> dict:
    """Aggregate intensity statistics over every pixel of the volume."""
    px = v.pixels
    return {
        "min": int(px.min()),
        "max": int(px.max()),
        "mean": float(px.mean(dtype=np.float64)),
        "n_slices": v.n_slices,
    }
