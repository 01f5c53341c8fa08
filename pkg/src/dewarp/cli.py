"""Command-line interface: `dewarp run`, `dewarp batch`, `dewarp eval`.

Exit codes:
    0  success
    1  internal error
    2  bad arguments or invalid config
    3  missing input file / unreadable manifest
    4  degenerate mask or geometry (no document to dewarp)
    5  grid failure (document geometry unrecoverable)
    6  batch finished with some failures
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import imgio, metrics
from .config import PipelineConfig, load_config, save_config
from .errors import (DegenerateGeometryError, DegenerateInputError,
                     DewarpError, DimensionMismatchError, EmptyMaskError,
                     GridFailureError, MissingInputError)
from .pipeline import dewarp_batch, dewarp_one

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_BAD_ARGS = 2
EXIT_MISSING_INPUT = 3
EXIT_DEGENERATE = 4
EXIT_GRID_FAILURE = 5
EXIT_PARTIAL = 6

_DEGENERATE = (DegenerateInputError, DegenerateGeometryError, EmptyMaskError,
               DimensionMismatchError)


def _add_config_flags(parser):
    group = parser.add_argument_group("pipeline overrides")
    group.add_argument("--config", help="flat key = value config file")
    group.add_argument("--grid-rows", type=int, dest="grid_rows")
    group.add_argument("--grid-cols", type=int, dest="grid_cols")
    group.add_argument("--dp-tolerance", type=float, dest="dp_tolerance",
                       help="contour simplification tolerance as a fraction of perimeter")
    group.add_argument("--sg-window", type=int, dest="sg_window")
    group.add_argument("--sg-order", type=int, dest="sg_order")
    group.add_argument("--extrapolation-margin", type=float, dest="extrapolation_margin")
    group.add_argument("--intersection-threshold", type=float,
                       dest="intersection_threshold_frac",
                       help="intersection acceptance distance as a fraction of max dimension")
    group.add_argument("--output-format", choices=["png", "jpeg"], dest="output_format")


def build_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if args.config:
        if not os.path.exists(args.config):
            raise MissingInputError(f"config file not found: {args.config}")
        config = load_config(args.config, config)
    overrides = {}
    for f in dataclasses.fields(PipelineConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config.validate()


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dewarp",
        description="Geometric rectification of photographed documents from a "
                    "document-region probability mask.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="dewarp a single image")
    p_run.add_argument("--image", required=True)
    p_run.add_argument("--mask", required=True,
                       help="document probability mask (8-bit grayscale PNG)")
    p_run.add_argument("--output", help="output image path")
    p_run.add_argument("--debug-dir",
                       help="write contour/grid JSON, grid overlay and displacement dump here")
    _add_config_flags(p_run)

    p_batch = sub.add_parser("batch", help="dewarp a manifest of image/mask pairs")
    p_batch.add_argument("--manifest", required=True,
                         help='JSON array of {"image", "mask", "output"} records')
    p_batch.add_argument("--out", help="write the run manifest (JSON) here")
    p_batch.add_argument("--workers", type=int, default=1,
                         help="parallel workers (DEWARP_WORKERS env overrides)")
    _add_config_flags(p_batch)

    p_eval = sub.add_parser("eval", help="compute restoration metrics for dewarped/reference pairs")
    p_eval.add_argument("--pairs", required=True,
                        help='JSON array of {"dewarped", "reference", "hyp_text", "ref_text"}')
    p_eval.add_argument("--out", required=True, help="JSON-lines report path")
    p_eval.add_argument("--no-resize", action="store_true",
                        help="fail on dimension mismatch instead of resizing to the reference")

    p_cfg = sub.add_parser("write-config", help="write the default config file")
    p_cfg.add_argument("--out", required=True)
    return parser


def _load_manifest(path):
    if not os.path.exists(path):
        raise MissingInputError(f"manifest not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            entries = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MissingInputError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(entries, list):
        raise MissingInputError(f"manifest {path} must be a JSON array")
    return entries


def _read_text(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def cmd_run(args) -> int:
    config = build_config(args)
    record = dewarp_one(args.image, args.mask, args.output, config,
                        debug_dir=args.debug_dir)
    print(json.dumps(record))
    return EXIT_OK


def cmd_batch(args) -> int:
    config = build_config(args)
    entries = _load_manifest(args.manifest)
    manifest = dewarp_batch(entries, config, workers=args.workers)
    rendered = json.dumps(manifest, indent=2, sort_keys=True)
    if args.out:
        imgio.write_json(args.out, manifest)
    print(rendered)
    return EXIT_OK if manifest["n_failed"] == 0 else EXIT_PARTIAL


def cmd_eval(args) -> int:
    pairs = _load_manifest(args.pairs)
    resize = not args.no_resize
    lines = []
    per_metric = {name: [] for name in ("ssim", "mse", "nrmse", "ld", "jw", "cer")}
    n_failed = 0
    for entry in pairs:
        record = {k: entry.get(k) for k in ("dewarped", "reference", "hyp_text", "ref_text")}
        try:
            dewarped = imgio.read_image(entry["dewarped"])
            reference = imgio.read_image(entry["reference"])
            hyp_text = _read_text(entry["hyp_text"])
            ref_text = _read_text(entry["ref_text"])
            geometry, text = metrics.evaluate_pair(dewarped, reference,
                                                   hyp_text, ref_text, resize=resize)
            record.update(metrics.report_dict(geometry, text))
            for name in per_metric:
                per_metric[name].append(record[name])
        except Exception as exc:
            record["error"] = f"{type(exc).__name__}: {exc}"
            n_failed += 1
        lines.append(record)

    aggregate = {
        "aggregate": True,
        "count": len(lines) - n_failed,
        "failed": n_failed,
        "median": {k: float(np.median(v)) for k, v in per_metric.items() if v},
        "mean": {k: float(np.mean(v)) for k, v in per_metric.items() if v},
        "ssim_params": {"window": metrics.SSIM_WINDOW,
                        "c1": metrics.SSIM_C1, "c2": metrics.SSIM_C2,
                        "luminance": "rec601", "resize_to_reference": resize},
    }
    lines.append(aggregate)

    payload = "\n".join(json.dumps(line, sort_keys=True) for line in lines) + "\n"
    tmp = str(args.out) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(payload)
    os.replace(tmp, args.out)
    print(json.dumps(aggregate, sort_keys=True))
    return EXIT_OK


def cmd_write_config(args) -> int:
    save_config(PipelineConfig(), args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "batch": cmd_batch, "eval": cmd_eval,
                "write-config": cmd_write_config}
    try:
        return handlers[args.command](args)
    except MissingInputError as exc:
        print(f"error (missing input): {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except _DEGENERATE as exc:
        print(f"error (degenerate input): {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except GridFailureError as exc:
        print(f"error (grid failure): {exc}", file=sys.stderr)
        return EXIT_GRID_FAILURE
    except ValueError as exc:
        print(f"error (bad arguments): {exc}", file=sys.stderr)
        return EXIT_BAD_ARGS
    except DewarpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
