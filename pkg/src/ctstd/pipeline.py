"""End-to-end orchestration of cropping and slice sampling over scan trees.

Scans are independent work units; outputs are deterministic functions of
(input, config, seed) regardless of scheduling, and one failing scan never
affects the others.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CtStdError, DegenerateHistogram, EmptyBoundingBox, ValidationError
from .io import (
    FORMAT_VERSION,
    load_volume,
    read_json,
    save_volume,
    write_json,
)
from .sampling import (
    STRATEGIES,
    SliceSelection,
    fit_kde,
    lung_area_profile,
    select_kds,
    select_random,
    select_uniform,
)
from .spatial import (
    BoundingBox,
    adaptive_threshold,
    binarize,
    crop_volume,
    filter_slices,
    refine_masks,
    union_bounding_box,
)
from .volume import ScanVolume

SPATIAL_SIDECAR = "spatial.json"
SELECTION_SIDECAR = "selection.json"
MANIFEST_NAME = "manifest.json"
RUN_MANIFEST_NAME = "run.json"


@dataclass(frozen=True)
class RunConfig:
    """Resolved pipeline settings, echoed into every manifest."""

    radius: int = 1
    invert: bool = False
    min_component_fraction: float = 0.001
    strategy: str = "kds"
    n_slices: int = 8
    percentiles: tuple | None = None
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.radius < 1:
            raise ValidationError("radius must be >= 1")
        if not 0 <= self.min_component_fraction < 1:
            raise ValidationError("min_component_fraction must be in [0, 1)")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"strategy must be one of {STRATEGIES}")
        if self.n_slices < 1:
            raise ValidationError("n_slices must be >= 1")
        if self.jobs < 1:
            raise ValidationError("jobs must be >= 1")
        if self.percentiles is not None:
            object.__setattr__(
                self, "percentiles", tuple(float(p) for p in self.percentiles)
            )

    def to_dict(self) -> dict:
        # jobs is an execution knob, not a content parameter: outputs must be
        # byte-identical at any parallelism, so it never enters a manifest
        return {
            "radius": self.radius,
            "invert": self.invert,
            "min_component_fraction": self.min_component_fraction,
            "strategy": self.strategy,
            "n_slices": self.n_slices,
            "percentiles": list(self.percentiles) if self.percentiles else None,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class CropResult:
    cropped: ScanVolume
    threshold_t: int
    bbox: BoundingBox
    areas: np.ndarray  # refined-mask pixel counts per slice


def crop_scan(volume: ScanVolume, config: RunConfig) -> CropResult:
    """Filter, threshold, refine and crop one scan.

    A constant volume has no separable lung structure, so the degenerate
    histogram is reported as the scan-level empty-bounding-box failure.
    """
    filtered = filter_slices(volume, config.radius)
    if config.invert:
        filtered = filtered.with_pixels(filtered.max_intensity - filtered.pixels)
    try:
        t = adaptive_threshold(filtered)
    except DegenerateHistogram as exc:
        raise EmptyBoundingBox(f"no lung structure separable: {exc}") from exc
    masks = binarize(filtered, t, config.radius)
    refined = refine_masks(masks, config.min_component_fraction)
    bbox = union_bounding_box(refined)
    if bbox.empty:
        raise EmptyBoundingBox("refined lung mask is empty across all slices")
    cropped = crop_volume(volume, bbox)
    areas = lung_area_profile(refined)
    return CropResult(cropped, t, bbox, areas)


def make_selection(areas, config: RunConfig):
    """Build the configured slice selection for one scan.

    Returns ``(SliceSelection, bandwidth_h or None)``.
    """
    areas = np.asarray(areas)
    s = int(areas.size)
    if config.strategy == "kds":
        profile = fit_kde(areas)
        sel = select_kds(profile, config.n_slices, config.percentiles)
        return sel, profile.bandwidth_h
    if config.strategy == "uniform":
        return select_uniform(s, config.n_slices), None
    return select_random(s, config.n_slices, config.seed), None


def _scan_manifest(scan_id, source_id, input_path, out_dir, n_slices_in, config,
                   threshold_t=None, bbox=None, selection=None, bandwidth_h=None,
                   output_paths=()):
    sel_indices = list(selection.indices) if selection is not None else None
    return {
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "scan_id": scan_id,
        "source_id": source_id,
        "input_path": os.path.relpath(os.fspath(input_path), os.fspath(out_dir)),
        "n_slices_in": n_slices_in,
        "threshold_t": threshold_t,
        "bbox": bbox.to_dict() if bbox is not None else None,
        "strategy": selection.strategy if selection is not None else None,
        "selected_indices": sel_indices,
        "bandwidth_h": bandwidth_h,
        "seed": config.seed,
        "output_paths": list(output_paths),
        "config": config.to_dict(),
    }


def discover_scans(root) -> list:
    """Scan directories under ``root``: subdirectories holding numbered PNGs."""
    root = Path(root)
    if not root.is_dir():
        raise CtStdError(f"input root {root} is not a directory")
    scans = []
    for child in sorted(root.iterdir()):
        if child.is_dir() and any(
            f.suffix.lower() == ".png" and f.stem.isdigit() for f in child.iterdir()
        ):
            scans.append(child)
    if not scans:
        raise CtStdError(f"no scan directories under {root}")
    return scans


def _slice_names(volume: ScanVolume) -> list:
    pad = max(4, len(str(volume.n_slices)))
    return [f"{i + 1:0{pad}d}.png" for i in range(volume.n_slices)]


def process_crop(scan_dir: Path, out_dir: Path, config: RunConfig) -> dict:
    volume = load_volume(scan_dir)
    result = crop_scan(volume, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_volume(result.cropped, out_dir)
    write_json(
        {
            "format_version": FORMAT_VERSION,
            "threshold_t": result.threshold_t,
            "bbox": result.bbox.to_dict(),
            "mask_areas": [int(a) for a in result.areas],
        },
        out_dir / SPATIAL_SIDECAR,
    )
    manifest = _scan_manifest(
        volume.scan_id, volume.source_id, scan_dir, out_dir, volume.n_slices,
        config, threshold_t=result.threshold_t, bbox=result.bbox,
        output_paths=_slice_names(result.cropped),
    )
    write_json(manifest, out_dir / MANIFEST_NAME)
    return manifest


def _load_areas(scan_dir: Path, config: RunConfig):
    """Per-slice mask areas: from the spatial sidecar, else recomputed."""
    sidecar = scan_dir / SPATIAL_SIDECAR
    if sidecar.exists():
        return [int(a) for a in read_json(sidecar)["mask_areas"]]
    volume = load_volume(scan_dir)
    filtered = filter_slices(volume, config.radius)
    if config.invert:
        filtered = filtered.with_pixels(filtered.max_intensity - filtered.pixels)
    try:
        t = adaptive_threshold(filtered)
    except DegenerateHistogram as exc:
        raise EmptyBoundingBox(f"no lung structure separable: {exc}") from exc
    refined = refine_masks(binarize(filtered, t, config.radius),
                           config.min_component_fraction)
    return [int(a) for a in lung_area_profile(refined)]


def process_sample(scan_dir: Path, out_dir: Path, config: RunConfig) -> dict:
    volume = load_volume(scan_dir)
    areas = _load_areas(scan_dir, config)
    if len(areas) != volume.n_slices:
        raise CtStdError(
            f"sidecar lists {len(areas)} areas but volume has {volume.n_slices} slices"
        )
    selection, bandwidth = make_selection(areas, config)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_json(_selection_sidecar(volume.scan_id, areas, selection, bandwidth, config),
               out_dir / SELECTION_SIDECAR)
    manifest = _scan_manifest(
        volume.scan_id, volume.source_id, scan_dir, out_dir, volume.n_slices,
        config, selection=selection, bandwidth_h=bandwidth,
    )
    write_json(manifest, out_dir / MANIFEST_NAME)
    return manifest


def _selection_sidecar(scan_id, areas, selection: SliceSelection, bandwidth, config):
    return {
        "format_version": FORMAT_VERSION,
        "scan_id": scan_id,
        "strategy": selection.strategy,
        # a percentile override redefines how many slices were requested
        "n": len(selection.percentiles) or config.n_slices,
        "percentiles": list(selection.percentiles) or None,
        "bandwidth_h": bandwidth,
        "areas": [int(a) for a in areas],
        "selected_indices": list(selection.indices),
        "seed": selection.seed,
    }


def process_pipeline(scan_dir: Path, out_dir: Path, config: RunConfig) -> dict:
    volume = load_volume(scan_dir)
    result = crop_scan(volume, config)
    selection, bandwidth = make_selection(result.areas, config)
    standardized = result.cropped.with_pixels(
        result.cropped.pixels[list(selection.indices)]
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    save_volume(standardized, out_dir)
    write_json(
        {
            "format_version": FORMAT_VERSION,
            "threshold_t": result.threshold_t,
            "bbox": result.bbox.to_dict(),
            "mask_areas": [int(a) for a in result.areas],
        },
        out_dir / SPATIAL_SIDECAR,
    )
    write_json(
        _selection_sidecar(volume.scan_id, result.areas, selection, bandwidth, config),
        out_dir / SELECTION_SIDECAR,
    )
    manifest = _scan_manifest(
        volume.scan_id, volume.source_id, scan_dir, out_dir, volume.n_slices,
        config, threshold_t=result.threshold_t, bbox=result.bbox,
        selection=selection, bandwidth_h=bandwidth,
        output_paths=_slice_names(standardized),
    )
    write_json(manifest, out_dir / MANIFEST_NAME)
    return manifest


_PROCESSORS = {
    "crop": process_crop,
    "sample": process_sample,
    "pipeline": process_pipeline,
}


def run_batch(command: str, input_root, output_root, config: RunConfig) -> dict:
    """Process every scan under ``input_root``; one failure never stops the rest.

    Writes per-scan outputs plus a top-level run manifest and returns it.
    """
    processor = _PROCESSORS[command]
    scans = discover_scans(input_root)
    output_root = Path(output_root)
    output_root.mkdir(parents=True, exist_ok=True)

    def _one(scan_dir: Path) -> dict:
        try:
            processor(scan_dir, output_root / scan_dir.name, config)
            return {"scan": scan_dir.name, "status": "ok", "error": None}
        except Exception as exc:  # isolate per-scan failures
            return {
                "scan": scan_dir.name,
                "status": "failed",
                "error": f"{type(exc).__name__}: {exc}",
            }

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_one, scans))
    else:
        results = [_one(s) for s in scans]
    results.sort(key=lambda r: r["scan"])

    run_manifest = {
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "command": command,
        "config": config.to_dict(),
        "n_scans": len(results),
        "n_failed": sum(r["status"] == "failed" for r in results),
        "scans": results,
    }
    write_json(run_manifest, output_root / RUN_MANIFEST_NAME)
    return run_manifest
