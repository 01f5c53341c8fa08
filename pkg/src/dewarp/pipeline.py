"""Full dewarping pipeline: refined mask -> contour -> grid -> remap.

`dewarp_arrays` runs the geometry stages on in-memory arrays and returns all
intermediates; `dewarp_one` adds file I/O and debug dumps; `dewarp_batch`
processes a manifest with optional process-level parallelism (results are
independent of worker count).
"""

import concurrent.futures
import os
import time
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import contour_geometry as cg
from . import grid_builder as gb
from . import imgio, mask_pipeline, remapper
from .config import PipelineConfig
from .errors import DimensionMismatchError, MissingInputError

# side polylines are resampled to this many arc-length-uniform points before
# blending (enough for the smoothing window and the cubic fits at any
# configured grid density)
MIN_SIDE_SAMPLES = 25


@dataclass
class DewarpResult:
    output: np.ndarray
    contour: cg.Contour
    sides: cg.SideSet
    warp: gb.WarpGrid
    uniform: remapper.UniformGrid
    displacement: remapper.DisplacementField
    stage_ms: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


class _StageClock:
    def __init__(self):
        self.stage_ms = {}
        self._t0 = time.perf_counter()

    def lap(self, name: str):
        t1 = time.perf_counter()
        self.stage_ms[name] = (t1 - self._t0) * 1000.0
        self._t0 = t1


def dewarp_arrays(image: np.ndarray, mask: np.ndarray,
                  config: Optional[PipelineConfig] = None) -> DewarpResult:
    """Dewarp an in-memory image given its document probability mask."""
    config = (config or PipelineConfig()).validate()
    image = np.asarray(image)
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != image.shape[:2]:
        raise DimensionMismatchError(
            f"mask dimensions {mask.shape} != image dimensions {image.shape[:2]}")

    clock = _StageClock()
    caught = []
    with warnings.catch_warnings(record=True) as wlog:
        warnings.simplefilter("always")

        refined = mask_pipeline.guided_filter(mask, image)
        clock.lap("mask_refine")
        _, binary = mask_pipeline.otsu_binarize(refined)
        del refined
        binary = mask_pipeline.select_largest_component(binary)
        clock.lap("binarize")

        contour = cg.extract_contour(binary)
        del binary
        tolerance = config.dp_tolerance * cg.perimeter(contour.points)
        simplified = cg.simplify_contour(contour, tolerance)
        hull = cg.convex_hull(simplified.points)
        quad = cg.detect_corners(hull)
        sides = cg.segment_sides(contour, quad)
        clock.lap("contour")

        n_side = max(MIN_SIDE_SAMPLES, config.grid_rows, config.grid_cols)
        oriented = sides.oriented()
        top = gb.resample_side(oriented["top"], n_side)
        bottom = gb.resample_side(oriented["bottom"], n_side)
        left = gb.resample_side(oriented["left"], n_side)
        right = gb.resample_side(oriented["right"], n_side)

        h_lines = gb.interpolate_family(top, bottom, config.grid_rows, gb.HORIZONTAL)
        v_lines = gb.interpolate_family(left, right, config.grid_cols, gb.VERTICAL)
        dense_h, dense_v = [], []
        for line, bucket in [(l, dense_h) for l in h_lines] + [(l, dense_v) for l in v_lines]:
            smoothed = gb.smooth_line(line.samples, config.sg_window, config.sg_order)
            poly = gb.fit_cubic(smoothed)
            dense = gb.extrapolate_line(poly, config.extrapolation_margin)
            bucket.append(gb.GridLine(samples=dense, family=line.family,
                                      index=line.index, poly=poly))
        clock.lap("grid_lines")

        h, w = image.shape[:2]
        warp = gb.find_intersections(dense_h, dense_v, w, h,
                                     threshold_frac=config.intersection_threshold_frac)
        clock.lap("intersections")

        uniform = remapper.make_uniform_grid(warp)
        displacement = remapper.build_displacement_field(warp, uniform)
        clock.lap("field")
        output = remapper.remap_image(image, displacement)
        clock.lap("remap")

        caught = [f"{w.category.__name__}: {w.message}" for w in wlog]
    for message in caught:
        warnings.warn(message, stacklevel=2)

    return DewarpResult(output=output, contour=contour, sides=sides, warp=warp,
                        uniform=uniform, displacement=displacement,
                        stage_ms=clock.stage_ms, warnings=caught)


def draw_grid_overlay(image: np.ndarray, warp: gb.WarpGrid) -> np.ndarray:
    """Render warp grid rows (green) and columns (red) on a copy of the image."""
    canvas = np.asarray(image)
    if canvas.ndim == 2:
        canvas = np.stack([canvas] * 3, axis=-1)
    canvas = canvas.copy()
    h, w = canvas.shape[:2]

    def draw_polyline(points, color):
        for k in range(len(points) - 1):
            x0, y0 = points[k]
            x1, y1 = points[k + 1]
            steps = int(max(abs(x1 - x0), abs(y1 - y0))) + 1
            xs = np.clip(np.rint(np.linspace(x0, x1, steps)), 0, w - 1).astype(int)
            ys = np.clip(np.rint(np.linspace(y0, y1, steps)), 0, h - 1).astype(int)
            canvas[ys, xs] = color

    for i in range(warp.rows):
        draw_polyline(warp.nodes[i], (0, 200, 0))
    for j in range(warp.cols):
        draw_polyline(warp.nodes[:, j], (220, 0, 0))
    return canvas


def _debug_paths(debug_dir, stem):
    return {
        "contour": os.path.join(debug_dir, f"{stem}.contour.json"),
        "grid": os.path.join(debug_dir, f"{stem}.grid.json"),
        "overlay": os.path.join(debug_dir, f"{stem}.overlay.png"),
        "displacement": os.path.join(debug_dir, f"{stem}.displacement.dwrp"),
    }


def dewarp_one(image_path, mask_path, output_path=None,
               config: Optional[PipelineConfig] = None,
               debug_dir=None) -> dict:
    """Dewarp one image/mask file pair; returns the run-manifest record."""
    config = (config or PipelineConfig()).validate()
    if not os.path.exists(str(mask_path)):
        raise MissingInputError(
            f"mask not found: {mask_path} — produce one with the detector adapter "
            f"(frontend 'detect' tool) or supply --mask")
    t0 = time.perf_counter()
    image = imgio.read_image(image_path)
    mask = imgio.read_probability_mask(mask_path)

    result = dewarp_arrays(image, mask, config)

    if output_path is None:
        stem, _ = os.path.splitext(str(image_path))
        suffix = "jpg" if config.output_format == "jpeg" else "png"
        output_path = f"{stem}.dewarped.{suffix}"
    imgio.write_image(output_path, result.output, config.output_format)

    if debug_dir is not None or config.dump_debug:
        debug_dir = debug_dir or os.path.dirname(str(output_path)) or "."
        os.makedirs(debug_dir, exist_ok=True)
        stem = os.path.splitext(os.path.basename(str(output_path)))[0]
        paths = _debug_paths(debug_dir, stem)
        imgio.write_json(paths["contour"], result.sides.debug_dict(result.contour))
        imgio.write_json(paths["grid"], result.warp.to_dict())
        imgio.write_image(paths["overlay"], draw_grid_overlay(image, result.warp))
        imgio.write_displacement(paths["displacement"],
                                 result.displacement.dx, result.displacement.dy)

    total_ms = (time.perf_counter() - t0) * 1000.0
    return {
        "input": str(image_path),
        "mask": str(mask_path),
        "output": str(output_path),
        "output_size": [result.output.shape[1], result.output.shape[0]],
        "stage_ms": {k: round(v, 3) for k, v in result.stage_ms.items()},
        "total_ms": round(total_ms, 3),
        "warnings": result.warnings,
    }


def _batch_worker(entry_config):
    entry, config = entry_config
    try:
        record = dewarp_one(entry["image"], entry["mask"],
                            entry.get("output"), config)
        record["status"] = "ok"
        return record
    except Exception as exc:  # per-image failures must not stop the batch
        return {
            "input": str(entry.get("image")),
            "mask": str(entry.get("mask")),
            "status": "error",
            "error": f"{type(exc).__name__}: {exc}",
        }


def resolve_workers(requested: Optional[int]) -> int:
    """Worker count: DEWARP_WORKERS env overrides the flag; default 1."""
    env = os.environ.get("DEWARP_WORKERS")
    if env:
        return max(1, int(env))
    return max(1, requested or 1)


def dewarp_batch(entries, config: Optional[PipelineConfig] = None,
                 workers: Optional[int] = None) -> dict:
    """Process image/mask pairs, continuing past per-image failures.

    Returns the run manifest: per-image records plus aggregate timing stats
    (mean/median/min/max over successful runs).
    """
    config = (config or PipelineConfig()).validate()
    workers = resolve_workers(workers)
    jobs = [(entry, config) for entry in entries]

    if workers == 1 or len(jobs) <= 1:
        records = [_batch_worker(job) for job in jobs]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_batch_worker, jobs))

    ok = [r for r in records if r["status"] == "ok"]
    timing = {}
    if ok:
        totals = np.array([r["total_ms"] for r in ok])
        timing = {
            "mean_ms": float(totals.mean()),
            "median_ms": float(np.median(totals)),
            "min_ms": float(totals.min()),
            "max_ms": float(totals.max()),
        }
    return {
        "records": records,
        "n_total": len(records),
        "n_ok": len(ok),
        "n_failed": len(records) - len(ok),
        "timing": timing,
        "workers": workers,
    }
