"""Displacement-field construction and bicubic image remapping.

The warp grid is treated as samples of the output-to-source coordinate map
at the uniform grid's node positions; a separable Catmull-Rom interpolation
densifies it to one source coordinate per output pixel, and the image is
pulled backward through that map with the bicubic kernel.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateGeometryError, FoldWarning
from .grid_builder import WarpGrid, grid_is_monotone


@dataclass
class UniformGrid:
    """Evenly spaced target lattice covering the output document rectangle."""

    rows: int
    cols: int
    width: int    # output pixels
    height: int

    def nodes(self) -> np.ndarray:
        xs = np.arange(self.cols, dtype=np.float64) * (self.width - 1) / (self.cols - 1)
        ys = np.arange(self.rows, dtype=np.float64) * (self.height - 1) / (self.rows - 1)
        out = np.empty((self.rows, self.cols, 2), dtype=np.float64)
        out[:, :, 0] = xs[None, :]
        out[:, :, 1] = ys[:, None]
        return out


@dataclass
class DisplacementField:
    """Per-pixel source sampling coordinates for the output image.

    The displacement planes are derived views: dx = source_x - x and
    dy = source_y - y hold per pixel by construction.
    """

    source_x: np.ndarray  # (H, W) float64
    source_y: np.ndarray

    @property
    def height(self) -> int:
        return self.source_x.shape[0]

    @property
    def width(self) -> int:
        return self.source_x.shape[1]

    @property
    def dx(self) -> np.ndarray:
        return self.source_x - np.arange(self.width, dtype=np.float64)[None, :]

    @property
    def dy(self) -> np.ndarray:
        return self.source_y - np.arange(self.height, dtype=np.float64)[:, None]


def polyline_length(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=np.float64)
    return float(np.hypot(*np.diff(pts, axis=0).T).sum())


def make_uniform_grid(warp: WarpGrid) -> UniformGrid:
    """Size the output rectangle from the warp grid's boundary arc lengths.

    An N-px arc through pixel centres spans N+1 pixels, so the output
    dimension is the rounded mean boundary length plus one.
    """
    top = polyline_length(warp.nodes[0])
    bottom = polyline_length(warp.nodes[-1])
    left = polyline_length(warp.nodes[:, 0])
    right = polyline_length(warp.nodes[:, -1])
    if min(top, bottom, left, right) <= 0.0:
        raise DegenerateGeometryError("warp grid has a zero-length boundary")
    width = int(round((top + bottom) / 2.0)) + 1
    height = int(round((left + right) / 2.0)) + 1
    return UniformGrid(rows=warp.rows, cols=warp.cols, width=width, height=height)


def _axis_weights(positions: np.ndarray, spacing: float, n_nodes: int):
    """Catmull-Rom weights and tap indices (into a 1-ring padded axis)."""
    u = positions / spacing
    base = np.floor(u)
    t = u - base
    t2 = t * t
    t3 = t2 * t
    w = (
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    )
    ib = base.astype(np.int64)
    # tap k sits at node ib-1+k, i.e. padded index ib+k; clipping only ever
    # triggers where the corresponding weight is zero (t == 0 at the far edge)
    idx = [np.clip(ib + k, 0, n_nodes + 1) for k in range(4)]
    return w, idx


def _pad_linear(values: np.ndarray) -> np.ndarray:
    """Extend a node plane by one linearly extrapolated ring.

    Keeps the Catmull-Rom interpolant exact for linear node data all the way
    to the grid boundary (edge replication would bend it in boundary cells).
    """
    r, c = values.shape
    padded = np.empty((r + 2, c + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = values
    padded[0, 1:-1] = 2.0 * values[0] - values[1]
    padded[-1, 1:-1] = 2.0 * values[-1] - values[-2]
    padded[:, 0] = 2.0 * padded[:, 1] - padded[:, 2]
    padded[:, -1] = 2.0 * padded[:, -2] - padded[:, -3]
    return padded


def _interpolate_node_plane(values: np.ndarray, wx, ix, wy, iy) -> np.ndarray:
    """Separable two-pass tensor evaluation of one coordinate plane."""
    padded = _pad_linear(values)
    rows_pass = ((padded[:, ix[0]] * wx[0] + padded[:, ix[1]] * wx[1])
                 + padded[:, ix[2]] * wx[2]) + padded[:, ix[3]] * wx[3]    # (R+2, W)
    out = ((rows_pass[iy[0]] * wy[0][:, None] + rows_pass[iy[1]] * wy[1][:, None])
           + rows_pass[iy[2]] * wy[2][:, None]) + rows_pass[iy[3]] * wy[3][:, None]
    return out


def build_displacement_field(warp: WarpGrid, uniform: UniformGrid) -> DisplacementField:
    """Interpolate warp node coordinates to per-pixel source coordinates.

    The interpolant reproduces node values exactly at uniform node positions.
    A non-monotone (folded) warp grid raises FoldWarning and the resulting
    maps are clamped to the node bounding box.
    """
    if (warp.rows, warp.cols) != (uniform.rows, uniform.cols):
        raise ValueError("warp and uniform grids must have equal rows/cols")
    folded = not grid_is_monotone(warp)
    if folded:
        warnings.warn("warp grid is non-monotone (fold); interpolation clamped",
                      FoldWarning, stacklevel=2)

    sx = (uniform.width - 1) / (uniform.cols - 1)
    sy = (uniform.height - 1) / (uniform.rows - 1)
    wx, ix = _axis_weights(np.arange(uniform.width, dtype=np.float64), sx, warp.cols)
    wy, iy = _axis_weights(np.arange(uniform.height, dtype=np.float64), sy, warp.rows)

    source_x = _interpolate_node_plane(warp.nodes[:, :, 0], wx, ix, wy, iy)
    source_y = _interpolate_node_plane(warp.nodes[:, :, 1], wx, ix, wy, iy)
    if folded:
        np.clip(source_x, warp.nodes[:, :, 0].min(), warp.nodes[:, :, 0].max(), out=source_x)
        np.clip(source_y, warp.nodes[:, :, 1].min(), warp.nodes[:, :, 1].max(), out=source_y)
    if not (np.isfinite(source_x).all() and np.isfinite(source_y).all()):
        raise ValueError("displacement field contains non-finite values")
    return DisplacementField(source_x=source_x, source_y=source_y)


def _sample_to_uint8(source: np.ndarray, map_x: np.ndarray, map_y: np.ndarray) -> np.ndarray:
    """Bicubic-sample and quantize, one channel at a time to bound peak memory."""
    src = np.asarray(source)
    if src.ndim == 2:
        sampled = _kernels.bicubic_sample(src.astype(np.float64), map_x, map_y)
        return np.clip(np.rint(sampled), 0, 255).astype(np.uint8)
    out = np.empty(map_x.shape + (src.shape[2],), dtype=np.uint8)
    for c in range(src.shape[2]):
        sampled = _kernels.bicubic_sample(src[:, :, c].astype(np.float64), map_x, map_y)
        out[:, :, c] = np.clip(np.rint(sampled), 0, 255).astype(np.uint8)
    return out


def remap_image(source: np.ndarray, field: DisplacementField) -> np.ndarray:
    """Backward-warp the source through the field with bicubic sampling.

    Out-of-bounds samples replicate edge pixels; output channels are rounded
    and clamped to [0, 255] uint8.  Integer source coordinates reproduce
    source pixels exactly.
    """
    return _sample_to_uint8(source, field.source_x, field.source_y)


def resize_bicubic(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bicubic resize with the half-pixel-centre convention."""
    src = np.asarray(image)
    h, w = src.shape[:2]
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5
    map_x = np.broadcast_to(xs[None, :], (out_h, out_w)).copy()
    map_y = np.broadcast_to(ys[:, None], (out_h, out_w)).copy()
    return _sample_to_uint8(src, map_x, map_y)
