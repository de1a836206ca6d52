"""Command-line front end: crop, sample, pipeline, analyze, phantom."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import CtStdError
from .io import FORMAT_VERSION, load_embeddings, save_volume, write_json
from .metrics import analyze as analyze_embeddings
from .phantom import PhantomSpec, default_corpus_entries, default_phantom_spec, generate_phantom
from .pipeline import RUN_MANIFEST_NAME, RunConfig, run_batch

_CONFIG_KEYS = (
    "radius",
    "invert",
    "min_component_fraction",
    "strategy",
    "n_slices",
    "percentiles",
    "seed",
    "jobs",
)


def _parse_percentiles(text: str):
    try:
        values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad percentile list {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty percentile list")
    return values


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="root directory of scan directories")
    p.add_argument("--output", required=True, help="run output directory")
    p.add_argument("--radius", type=int, default=None, help="mean filter half-width k")
    p.add_argument("--invert", action="store_true", default=None,
                   help="invert intensities before thresholding (dark lungs)")
    p.add_argument("--min-component-fraction", type=float, default=None,
                   dest="min_component_fraction",
                   help="drop mask components smaller than this slice fraction")
    p.add_argument("--strategy", choices=("kds", "uniform", "random"), default=None)
    p.add_argument("--n-slices", type=int, default=None, dest="n_slices",
                   help="number of slices to select")
    p.add_argument("--percentiles", type=_parse_percentiles, default=None,
                   help="comma-separated percentile override for the kds strategy")
    p.add_argument("--seed", type=int, default=None, help="seed for the random strategy")
    p.add_argument("--jobs", type=int, default=None, help="parallel scans")
    p.add_argument("--config", default=None, help="JSON config file (flags win)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctstd",
        description="Standardize multi-source CT volumes: lung-centric cropping "
        "and density-based slice sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (
        ("crop", "crop every scan to its lung bounding box"),
        ("sample", "select slices from cropped scans"),
        ("pipeline", "crop then sample in one pass"),
    ):
        _add_pipeline_flags(sub.add_parser(name, help=text))

    pa = sub.add_parser("analyze", help="compute embedding metrics from a CSV")
    pa.add_argument("--input", required=True, help="embeddings CSV path")
    pa.add_argument("--output", required=True, help="metrics report JSON path")

    pp = sub.add_parser("phantom", help="generate synthetic phantom scans")
    pp.add_argument("--input", default=None,
                    help="phantom spec JSON (object or list); default spec if omitted")
    pp.add_argument("--output", required=True, help="destination root directory")
    pp.add_argument("--corpus", action="store_true",
                    help="generate the built-in desk-scale four-source corpus")
    return parser


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file and flags; flags take precedence."""
    merged = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        unknown = set(doc) - set(_CONFIG_KEYS)
        if unknown:
            raise CtStdError(f"unknown config keys: {sorted(unknown)}")
        merged.update(doc)
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if "percentiles" in merged and merged["percentiles"] is not None:
        merged["percentiles"] = tuple(merged["percentiles"])
    return RunConfig(**merged)


def _cmd_batch(command: str, args: argparse.Namespace) -> int:
    config = _resolve_config(args)
    manifest = run_batch(command, args.input, args.output, config)
    for entry in manifest["scans"]:
        if entry["status"] == "failed":
            print(f"FAILED {entry['scan']}: {entry['error']}", file=sys.stderr)
    ok = manifest["n_scans"] - manifest["n_failed"]
    print(
        f"{command}: {ok}/{manifest['n_scans']} scans ok; "
        f"run manifest at {Path(args.output) / RUN_MANIFEST_NAME}"
    )
    return 0 if manifest["n_failed"] == 0 else 1


def _cmd_analyze(args: argparse.Namespace) -> int:
    embeddings = load_embeddings(args.input)
    report = analyze_embeddings(embeddings)
    doc = report.to_dict()
    doc["format_version"] = FORMAT_VERSION
    write_json(doc, args.output)
    isv = report.inter_source_variance
    fmt = lambda x: "n/a" if x is None else f"{x:.4f}"
    header = ["fisher_score", "separability", "isv_covid", "isv_non_covid"]
    row = [
        f"{report.fisher_score:.4f}",
        f"{report.separability:.4f}",
        fmt(isv["covid"]),
        fmt(isv["non_covid"]),
    ]
    widths = [max(len(h), len(v)) for h, v in zip(header, row)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    print("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return 0


def _phantom_entries(args: argparse.Namespace) -> list:
    if args.corpus:
        return [spec for _, spec in default_corpus_entries()]
    if args.input is None:
        return [default_phantom_spec()]
    doc = json.loads(Path(args.input).read_text(encoding="utf-8"))
    if isinstance(doc, list):
        return [PhantomSpec(**entry) for entry in doc]
    return [PhantomSpec.from_json(json.dumps(doc))]


def _cmd_phantom(args: argparse.Namespace) -> int:
    root = Path(args.output)
    root.mkdir(parents=True, exist_ok=True)
    entries = _phantom_entries(args)
    names = [spec.scan_id for spec in entries]
    if len(set(names)) != len(names):
        raise CtStdError("duplicate scan_id in phantom spec list")
    for spec in entries:
        volume, truth = generate_phantom(spec)
        scan_dir = root / spec.scan_id
        save_volume(volume, scan_dir)
        write_json(
            {
                "format_version": FORMAT_VERSION,
                "spec": spec.to_dict(),
                "bbox": truth.bbox.to_dict(),
                "area_per_slice": list(truth.area_per_slice),
            },
            scan_dir / "ground_truth.json",
        )
    print(f"phantom: wrote {len(entries)} scan(s) under {root}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("crop", "sample", "pipeline"):
            return _cmd_batch(args.command, args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        return _cmd_phantom(args)
    except CtStdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
