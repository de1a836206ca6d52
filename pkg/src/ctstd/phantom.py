"""Synthetic lung phantoms with exactly known masks, areas and bounding box.

Each slice carries two disjoint bright elliptical regions.  Pixels are
filled in order of elliptical distance from each lung center, so the
rendered pixel count per slice equals the rounded target area exactly and
the recorded ground truth is exact by construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .spatial import BoundingBox
from .volume import ScanVolume

# Scan counts per (source: covid, non_covid) for the default desk-scale
# corpus: one tenth of the full four-source distribution, rounded.
DEFAULT_CORPUS_SCANS = ((22, 21), (22, 21), (4, 21), (22, 21))


@dataclass(frozen=True)
class PhantomSpec:
    """Recipe for one synthetic scan volume."""

    n_slices: int
    width: int
    height: int
    lung_profile: tuple
    noise_sigma: float = 0.0
    background_level: int = 30
    lung_level: int = 200
    seed: int = 0
    bit_depth: int = 8
    scan_id: str = "phantom"
    source_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lung_profile", tuple(float(f) for f in self.lung_profile))
        if self.n_slices < 1:
            raise ValidationError("n_slices must be >= 1")
        if self.width < 16 or self.height < 16:
            raise ValidationError(
                f"degenerate dimensions {self.width}x{self.height}; need >= 16"
            )
        if len(self.lung_profile) != self.n_slices:
            raise ValidationError(
                f"lung_profile length {len(self.lung_profile)} != n_slices {self.n_slices}"
            )
        if any(not 0.0 <= f <= 1.0 for f in self.lung_profile):
            raise ValidationError("lung_profile entries must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.bit_depth not in (8, 16):
            raise ValidationError("bit_depth must be 8 or 16")
        top = (1 << self.bit_depth) - 1
        for name, level in (("background_level", self.background_level),
                            ("lung_level", self.lung_level)):
            if not 0 <= level <= top:
                raise ValidationError(f"{name}={level} outside [0, {top}]")

    @classmethod
    def from_json(cls, text: str) -> "PhantomSpec":
        doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ValidationError("phantom spec JSON must be an object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown phantom spec fields: {sorted(unknown)}")
        missing = {"n_slices", "width", "height", "lung_profile"} - set(doc)
        if missing:
            raise ValidationError(f"phantom spec missing fields: {sorted(missing)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {
            "n_slices": self.n_slices,
            "width": self.width,
            "height": self.height,
            "lung_profile": list(self.lung_profile),
            "noise_sigma": self.noise_sigma,
            "background_level": self.background_level,
            "lung_level": self.lung_level,
            "seed": self.seed,
            "bit_depth": self.bit_depth,
            "scan_id": self.scan_id,
            "source_id": self.source_id,
        }


@dataclass(frozen=True)
class PhantomGroundTruth:
    """Exact lung-pixel counts and tight bounding box, recorded pre-noise."""

    bbox: BoundingBox
    area_per_slice: tuple


class _LungSite:
    """Fill order and capacity for one lung's pixel region."""

    def __init__(self, row_c, col_c, half_w, half_h, height, width):
        self.r0 = max(int(np.ceil(row_c - half_h)), 0)
        self.r1 = min(int(np.floor(row_c + half_h)), height - 1)
        self.c0 = max(int(np.ceil(col_c - half_w)), 0)
        self.c1 = min(int(np.floor(col_c + half_w)), width - 1)
        rows = np.arange(self.r0, self.r1 + 1, dtype=np.float64)
        cols = np.arange(self.c0, self.c1 + 1, dtype=np.float64)
        dist = (
            ((cols[None, :] - col_c) / half_w) ** 2
            + ((rows[:, None] - row_c) / half_h) ** 2
        )
        flat = dist.ravel()
        # stable sort: equidistant pixels fill in row-major order
        self.order = np.argsort(flat, kind="stable")
        self.capacity = int(np.count_nonzero(flat <= 1.0))
        self.box_width = self.c1 - self.c0 + 1

    def paint(self, mask: np.ndarray, count: int) -> None:
        sel = self.order[:count]
        mask[self.r0 + sel // self.box_width, self.c0 + sel % self.box_width] = True


def _lung_sites(width: int, height: int) -> tuple:
    row_c = (height - 1) / 2.0
    col_left = 0.3 * (width - 1)
    col_right = 0.7 * (width - 1)
    sep = col_right - col_left
    half_w = max(min(int(0.19 * width), int((sep - 1.0) / 2)), 2)
    half_h = max(int(0.45 * height), 2)
    return (
        _LungSite(row_c, col_left, half_w, half_h, height, width),
        _LungSite(row_c, col_right, half_w, half_h, height, width),
    )


def generate_phantom(spec: PhantomSpec):
    """Render the phantom volume and its exact ground truth.

    Returns ``(ScanVolume, PhantomGroundTruth)``.  The per-slice lung pixel
    count equals ``round(fraction * width * height)`` exactly; noise is
    added afterwards and never alters the recorded truth.
    """
    left, right = _lung_sites(spec.width, spec.height)
    slice_pixels = spec.width * spec.height
    targets = [int(round(f * slice_pixels)) for f in spec.lung_profile]
    for i, total in enumerate(targets):
        m_left = total // 2
        m_right = total - m_left
        if m_left > left.capacity or m_right > right.capacity:
            raise ValidationError(
                f"lung_profile[{i}]={spec.lung_profile[i]} exceeds the phantom "
                f"lung capacity ({(left.capacity + right.capacity) / slice_pixels:.3f} "
                "of the slice)"
            )

    canvas = np.full(
        (spec.n_slices, spec.height, spec.width), spec.background_level, dtype=np.int64
    )
    union = np.zeros((spec.height, spec.width), dtype=bool)
    for i, total in enumerate(targets):
        if total == 0:
            continue
        mask = np.zeros((spec.height, spec.width), dtype=bool)
        left.paint(mask, total // 2)
        right.paint(mask, total - total // 2)
        canvas[i][mask] = spec.lung_level
        union |= mask

    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        noisy = canvas + rng.normal(0.0, spec.noise_sigma, canvas.shape)
        canvas = np.clip(np.rint(noisy), 0, (1 << spec.bit_depth) - 1).astype(np.int64)

    volume = ScanVolume(canvas, spec.bit_depth, spec.scan_id, spec.source_id)

    rows = np.flatnonzero(union.any(axis=1))
    if rows.size == 0:
        bbox = BoundingBox()
    else:
        cols = np.flatnonzero(union.any(axis=0))
        bbox = BoundingBox(int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1]), False)
    return volume, PhantomGroundTruth(bbox, tuple(targets))


def default_phantom_spec(seed: int = 7, scan_id: str = "phantom-0000",
                         source_id: int = 0) -> PhantomSpec:
    """A 40-slice 64x64 phantom with a bell-shaped lung-area profile."""
    n = 40
    phase = (np.arange(n) + 0.5) / n
    profile = 0.35 * np.sin(np.pi * phase) ** 2
    return PhantomSpec(
        n_slices=n,
        width=64,
        height=64,
        lung_profile=tuple(profile.tolist()),
        noise_sigma=4.0,
        background_level=30,
        lung_level=200,
        seed=seed,
        scan_id=scan_id,
        source_id=source_id,
    )


def default_corpus_entries(n_slices: int = 24, width: int = 64, height: int = 64,
                           base_seed: int = 0) -> list:
    """Phantom specs mirroring the desk-scale four-source corpus.

    Returns ``(label, PhantomSpec)`` pairs; scan counts per source follow
    ``DEFAULT_CORPUS_SCANS``.  All variation derives from ``base_seed``.
    """
    entries = []
    rng = np.random.default_rng(base_seed)
    for source_id, (n_covid, n_non) in enumerate(DEFAULT_CORPUS_SCANS):
        for label, count in (("covid", n_covid), ("non_covid", n_non)):
            for k in range(count):
                peak = float(rng.uniform(0.2, 0.4))
                phase = (np.arange(n_slices) + 0.5) / n_slices
                profile = peak * np.sin(np.pi * phase) ** 2
                spec = PhantomSpec(
                    n_slices=n_slices,
                    width=width,
                    height=height,
                    lung_profile=tuple(profile.tolist()),
                    noise_sigma=float(rng.uniform(0.0, 5.0)),
                    background_level=30,
                    lung_level=200,
                    seed=int(rng.integers(0, 2**63 - 1)),
                    scan_id=f"s{source_id}_{label}_{k:03d}",
                    source_id=source_id,
                )
                entries.append((label, spec))
    return entries
