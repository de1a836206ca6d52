"""Persistence: scan volumes as PNG stacks, embeddings CSV, canonical JSON.

All JSON sidecars are written canonically (sorted keys, floats at 12
significant digits) so identical runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
import re
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    EmbeddingFormatError,
    MixedBitDepth,
    MixedDimensions,
    RaggedRow,
    ValidationError,
    VolumeIOError,
)
from .metrics import CLASS_LABELS, EmbeddingSet
from .volume import ScanVolume

FORMAT_VERSION = 1
VOLUME_STUB_NAME = "volume.json"

_16BIT_MODES = {"I", "I;16", "I;16B", "I;16L", "I;16N"}


def canonical_json(obj) -> str:
    """Deterministic JSON text: sorted keys, floats at 12 significant digits.

    Non-finite numbers are rejected so the finiteness invariants of the
    serialized objects cannot be silently violated.
    """
    pieces = []
    _encode(obj, pieces)
    return "".join(pieces)


def _encode(obj, out: list) -> None:
    if obj is None or obj is True or obj is False:
        out.append({None: "null", True: "true", False: "false"}[obj])
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise ValidationError(f"non-finite number {x} cannot be serialized")
        out.append(format(x, ".12g"))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ValidationError(f"JSON object keys must be strings, got {key!r}")
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=False))
            out.append(":")
            _encode(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _encode(item, out)
        out.append("]")
    else:
        raise ValidationError(f"cannot serialize object of type {type(obj).__name__}")


def write_json(obj, path) -> None:
    """Write an object as canonical JSON plus a trailing newline."""
    text = canonical_json(obj)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


# kept as the documented names for the manifest/report writers
write_manifest = write_json
write_report = write_json


def save_volume(v: ScanVolume, path) -> None:
    """Write one lossless grayscale PNG per slice plus a manifest stub.

    Files are named with 1-based zero-padded integers so numeric order is
    anatomical order.
    """
    dest = Path(path)
    dest.mkdir(parents=True, exist_ok=True)
    pad = max(4, len(str(v.n_slices)))
    for i in range(v.n_slices):
        Image.fromarray(v.pixels[i]).save(dest / f"{i + 1:0{pad}d}.png")
    write_json(
        {
            "format_version": FORMAT_VERSION,
            "scan_id": v.scan_id,
            "source_id": v.source_id,
            "bit_depth": v.bit_depth,
            "n_slices": v.n_slices,
            "height": v.height,
            "width": v.width,
        },
        dest / VOLUME_STUB_NAME,
    )


def _slice_files(directory: Path) -> list:
    files = []
    for f in directory.iterdir():
        if f.suffix.lower() == ".png" and re.fullmatch(r"\d+", f.stem):
            files.append((int(f.stem), f))
    files.sort()
    return [f for _, f in files]


def load_volume(path) -> ScanVolume:
    """Load a scan directory written by :func:`save_volume`.

    Slices are ordered by the numeric value of their file names; bit depth
    is inferred from the image mode and must be uniform.
    """
    directory = Path(path)
    if not directory.is_dir():
        raise VolumeIOError(f"not a scan directory: {directory}")
    files = _slice_files(directory)
    if not files:
        raise VolumeIOError(f"no numbered .png slices in {directory}")

    slices = []
    bit_depth = None
    shape = None
    for f in files:
        try:
            img = Image.open(f)
            img.load()
        except (UnidentifiedImageError, OSError) as exc:
            raise VolumeIOError(f"unreadable slice image {f}: {exc}") from exc
        if img.mode == "L":
            depth = 8
        elif img.mode in _16BIT_MODES:
            depth = 16
        else:
            raise VolumeIOError(f"{f}: unsupported image mode {img.mode!r}")
        arr = np.asarray(img)
        if bit_depth is None:
            bit_depth, shape = depth, arr.shape
        elif depth != bit_depth:
            raise MixedBitDepth(
                f"{f}: bit depth {depth} differs from first slice ({bit_depth})"
            )
        elif arr.shape != shape:
            raise MixedDimensions(
                f"{f}: dimensions {arr.shape} differ from first slice {shape}"
            )
        slices.append(arr.astype(np.uint8 if depth == 8 else np.uint16))

    scan_id = directory.name
    source_id = 0
    stub = directory / VOLUME_STUB_NAME
    if stub.exists():
        meta = read_json(stub)
        scan_id = meta.get("scan_id", scan_id)
        source_id = int(meta.get("source_id", source_id))
        if meta.get("bit_depth", bit_depth) != bit_depth:
            raise MixedBitDepth(
                f"{stub}: declared bit depth {meta['bit_depth']} does not match "
                f"slice images ({bit_depth})"
            )
    return ScanVolume(np.stack(slices), bit_depth, scan_id, source_id)


def load_embeddings(path) -> EmbeddingSet:
    """Parse the embeddings CSV: scan_id,source_id,label,f_0,...,f_{d-1}."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmbeddingFormatError(1, "empty embeddings file") from None
        if header[:3] != ["scan_id", "source_id", "label"]:
            raise EmbeddingFormatError(
                1, f"header must start with scan_id,source_id,label, got {header[:3]}"
            )
        expected = ["f_%d" % i for i in range(len(header) - 3)]
        if header[3:] != expected or not expected:
            raise EmbeddingFormatError(
                1, "feature columns must be named f_0..f_{d-1} with d >= 1"
            )
        d = len(expected)

        scan_ids, sources, labels, rows = [], [], [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != d + 3:
                raise RaggedRow(
                    line_no, f"expected {d + 3} fields, found {len(row)}"
                )
            if row[2] not in CLASS_LABELS:
                raise EmbeddingFormatError(
                    line_no, f"unknown label token {row[2]!r}"
                )
            try:
                source = int(row[1])
            except ValueError:
                raise EmbeddingFormatError(
                    line_no, f"non-numeric source_id {row[1]!r}"
                ) from None
            try:
                vec = [float(x) for x in row[3:]]
            except ValueError:
                raise EmbeddingFormatError(
                    line_no, "non-numeric feature field"
                ) from None
            scan_ids.append(row[0])
            sources.append(source)
            labels.append(row[2])
            rows.append(vec)

    if not rows:
        raise EmbeddingFormatError(2, "no embedding rows")
    return EmbeddingSet(
        np.asarray(rows, dtype=np.float64),
        tuple(labels),
        tuple(sources),
        tuple(scan_ids),
    )


def save_embeddings(e: EmbeddingSet, path) -> None:
    """Write an embedding set in the documented CSV format."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scan_id", "source_id", "label"] + [f"f_{i}" for i in range(e.dimension)]
        )
        ids = e.scan_ids or tuple(f"scan_{i}" for i in range(len(e.labels)))
        for i in range(len(e.labels)):
            writer.writerow(
                [ids[i], e.sources[i], e.labels[i]]
                + [format(x, ".17g") for x in e.vectors[i]]
            )
