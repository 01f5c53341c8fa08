"""Distorted topological grid construction.

Curve families are blended between opposite document sides, smoothed,
fitted with cubic polynomials, extrapolated past the document edges, and
intersected pairwise to form the warp lattice.  Horizontal lines are indexed
top-to-bottom with samples running left-to-right; vertical lines are indexed
left-to-right with samples running top-to-bottom.
"""

import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import (DegenerateGeometryError, GridFailureError,
                     RankDeficientFitWarning, ShortWindowWarning)

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass
class CubicPoly:
    """value = a t^3 + b t^2 + c t + d, with t the independent coordinate.

    `coefficients` holds (a, b, c, d) in the raw coordinate basis.  The fit
    itself runs on a centred/rescaled variable for conditioning at image
    scale; evaluation goes through the stable centred form.
    """

    coefficients: np.ndarray
    axis: str                  # "y_of_x" or "x_of_y"
    domain: tuple
    residual_rms: float
    center: float = 0.0
    scale: float = 1.0
    scaled_coefficients: Optional[np.ndarray] = None

    def __call__(self, t):
        u = (np.asarray(t, dtype=np.float64) - self.center) / self.scale
        coeffs = (self.scaled_coefficients if self.scaled_coefficients is not None
                  else self.coefficients)
        return np.polyval(coeffs, u)


@dataclass
class GridLine:
    samples: np.ndarray        # (n, 2) points
    family: str                # HORIZONTAL or VERTICAL
    index: int
    poly: Optional[CubicPoly] = None


@dataclass
class WarpGrid:
    rows: int
    cols: int
    nodes: np.ndarray          # (rows, cols, 2)
    valid: np.ndarray          # (rows, cols) bool: intersection found

    def to_dict(self):
        return {
            "rows": self.rows,
            "cols": self.cols,
            "nodes": self.nodes.reshape(-1, 2).tolist(),
            "valid": self.valid.reshape(-1).tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        rows, cols = int(data["rows"]), int(data["cols"])
        nodes = np.asarray(data["nodes"], dtype=np.float64).reshape(rows, cols, 2)
        valid = np.asarray(data["valid"], dtype=bool).reshape(rows, cols)
        return cls(rows=rows, cols=cols, nodes=nodes, valid=valid)


def resample_side(side: np.ndarray, n: int) -> np.ndarray:
    """Resample a polyline to n points uniform in cumulative arc length.

    Endpoints are preserved exactly.
    """
    pts = np.asarray(side, dtype=np.float64)
    if len(pts) < 2:
        raise DegenerateGeometryError("side needs at least 2 points")
    if n < 2:
        raise ValueError("resample count must be >= 2")
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.diff(pts, axis=0) != 0.0, axis=1)
    pts = pts[keep]
    if len(pts) < 2:
        raise DegenerateGeometryError("zero-length side")
    seg = np.hypot(*np.diff(pts, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cum[-1] == 0.0:
        raise DegenerateGeometryError("zero-length side")
    target = np.linspace(0.0, cum[-1], n)
    out = np.column_stack([np.interp(target, cum, pts[:, 0]),
                           np.interp(target, cum, pts[:, 1])])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def interpolate_family(side_a: np.ndarray, side_b: np.ndarray, k: int,
                       family: str = HORIZONTAL) -> List[GridLine]:
    """Blend k lines between two corresponding sides.

    Line m uses blend weight m/(k-1): weight 0 reproduces side_a exactly and
    weight 1 side_b.  Sides must already be resampled to equal counts and
    oriented the same way so index i pairs corresponding points.
    """
    a = np.asarray(side_a, dtype=np.float64)
    b = np.asarray(side_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"side sample counts differ: {a.shape} vs {b.shape}")
    if k < 2:
        raise ValueError("need at least 2 lines (both boundaries)")
    lines = []
    for m in range(k):
        lam = m / (k - 1)
        samples = (1.0 - lam) * a + lam * b
        lines.append(GridLine(samples=samples, family=family, index=m))
    return lines


def savgol_coefficients(window: int, order: int) -> np.ndarray:
    """Least-squares smoothing weights for the window centre."""
    if window % 2 != 1:
        raise ValueError("window must be odd")
    if order >= window:
        raise ValueError("order must be smaller than window")
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    design = np.vander(offsets, order + 1, increasing=True)
    # centre-point evaluation row of the pseudo-inverse
    return np.linalg.pinv(design)[0]


def _fit_window_edges(values: np.ndarray, window: int, order: int, head: bool) -> np.ndarray:
    """Polynomial fit over the one-sided end window, evaluated at the end positions."""
    half = window // 2
    idx = np.arange(window, dtype=np.float64)
    chunk = values[:window] if head else values[-window:]
    coeffs = np.polyfit(idx, chunk, order)
    where = idx[:half] if head else idx[-half:]
    return np.polyval(coeffs, where)


def smooth_line(samples: np.ndarray, window: int = 9, order: int = 3) -> np.ndarray:
    """Savitzky-Golay smoothing of both coordinates over the sample index.

    End points are handled by polynomial fits on the one-sided window, so
    output length equals input length.  Too few samples: returned unchanged
    with a ShortWindowWarning.
    """
    pts = np.asarray(samples, dtype=np.float64)
    if window % 2 != 1 or window <= order:
        raise ValueError("window must be odd and greater than order")
    if len(pts) < window:
        warnings.warn(f"only {len(pts)} samples for window {window}; smoothing skipped",
                      ShortWindowWarning, stacklevel=2)
        return pts.copy()
    weights = savgol_coefficients(window, order)
    half = window // 2
    out = np.empty_like(pts)
    for c in range(2):
        col = pts[:, c]
        out[half:len(pts) - half, c] = np.correlate(col, weights, mode="valid")
        out[:half, c] = _fit_window_edges(col, window, order, head=True)
        out[len(pts) - half:, c] = _fit_window_edges(col, window, order, head=False)
    return out


def fit_cubic(samples: np.ndarray) -> CubicPoly:
    """Least-squares cubic through the samples.

    The independent variable is the coordinate with the larger range (so
    near-vertical lines become x = f(y)).  Rank-deficient designs fall back
    to a ridge solve with a RankDeficientFitWarning.
    """
    pts = np.asarray(samples, dtype=np.float64)
    if len(pts) < 4:
        raise ValueError(f"cubic fit needs at least 4 samples, got {len(pts)}")
    ranges = pts.max(axis=0) - pts.min(axis=0)
    if ranges[0] >= ranges[1]:
        axis, t, v = "y_of_x", pts[:, 0], pts[:, 1]
    else:
        axis, t, v = "x_of_y", pts[:, 1], pts[:, 0]
    lo, hi = float(t.min()), float(t.max())
    if hi == lo:
        raise DegenerateGeometryError("all abscissae identical; cannot fit a curve")

    center = (lo + hi) / 2.0
    scale = (hi - lo) / 2.0
    u = (t - center) / scale
    design = np.vander(u, 4)  # columns u^3, u^2, u, 1
    solution, _, rank, _ = np.linalg.lstsq(design, v, rcond=None)
    if rank < 4:
        warnings.warn("rank-deficient cubic fit; using ridge regularization",
                      RankDeficientFitWarning, stacklevel=2)
        gram = design.T @ design + 1e-8 * np.eye(4)
        solution = np.linalg.solve(gram, design.T @ v)

    residual = design @ solution - v
    rms = float(np.sqrt(np.mean(residual**2)))

    alpha, beta, gamma, delta = solution
    m, s = center, scale
    raw = np.array([
        alpha / s**3,
        beta / s**2 - 3.0 * alpha * m / s**3,
        gamma / s - 2.0 * beta * m / s**2 + 3.0 * alpha * m**2 / s**3,
        delta - gamma * m / s + beta * m**2 / s**2 - alpha * m**3 / s**3,
    ])
    return CubicPoly(coefficients=raw, axis=axis, domain=(lo, hi), residual_rms=rms,
                     center=center, scale=scale, scaled_coefficients=solution)


def extrapolate_line(poly: CubicPoly, margin: float) -> np.ndarray:
    """Densely sample the polynomial over its domain extended by margin per end.

    Samples sit at integer positions of the independent variable plus the
    exact extended endpoints, so spacing never exceeds 1 px.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    lo, hi = poly.domain
    length = hi - lo
    a = lo - margin * length
    b = hi + margin * length
    interior = np.arange(np.ceil(a), np.floor(b) + 1.0)
    ts = np.unique(np.concatenate([[a], interior, [b]]))
    vals = poly(ts)
    if poly.axis == "y_of_x":
        return np.column_stack([ts, vals])
    return np.column_stack([vals, ts])


def _line_samples(line) -> np.ndarray:
    return line.samples if isinstance(line, GridLine) else np.asarray(line, dtype=np.float64)


def _complete_invalid(nodes: np.ndarray, valid: np.ndarray) -> None:
    """Fill invalid nodes from valid row/column neighbours (in place).

    Linear interpolation along the row and along the column in index space,
    averaged when both are available; iterates for nodes with no valid
    neighbour on any axis yet.
    """
    rows, cols = valid.shape
    filled = valid.copy()
    for _ in range(rows * cols):
        missing = np.argwhere(~filled)
        if len(missing) == 0:
            return
        progressed = False
        for i, j in missing:
            estimates = []
            row_valid = np.flatnonzero(filled[i])
            left = row_valid[row_valid < j]
            right = row_valid[row_valid > j]
            if len(left) and len(right):
                j0, j1 = left[-1], right[0]
                w = (j - j0) / (j1 - j0)
                estimates.append((1 - w) * nodes[i, j0] + w * nodes[i, j1])
            elif len(left) or len(right):
                jn = left[-1] if len(left) else right[0]
                estimates.append(nodes[i, jn])
            col_valid = np.flatnonzero(filled[:, j])
            up = col_valid[col_valid < i]
            down = col_valid[col_valid > i]
            if len(up) and len(down):
                i0, i1 = up[-1], down[0]
                w = (i - i0) / (i1 - i0)
                estimates.append((1 - w) * nodes[i0, j] + w * nodes[i1, j])
            elif len(up) or len(down):
                inn = up[-1] if len(up) else down[0]
                estimates.append(nodes[inn, j])
            if estimates:
                nodes[i, j] = np.mean(estimates, axis=0)
                filled[i, j] = True
                progressed = True
        if not progressed:
            raise GridFailureError("cannot complete grid: no valid nodes to interpolate from")


def find_intersections(h_family, v_family, img_w: int, img_h: int,
                       threshold_frac: float = 0.01,
                       tree_on: str = HORIZONTAL) -> WarpGrid:
    """Locate all pairwise intersections between the two line families.

    Node (i, j) is the midpoint of the closest sample pair between
    horizontal line i and vertical line j, accepted when the pair distance
    is at most threshold_frac * max(img_w, img_h) and the midpoint lies
    within the image bounds inflated by 10%.  Nearest-pair search uses a
    k-d tree over one family's samples (`tree_on` picks which; the result
    is the same either way).  Rejected nodes are filled from valid
    neighbours; more than 10% rejected raises GridFailureError.
    """
    h_samples = [_line_samples(l) for l in h_family]
    v_samples = [_line_samples(l) for l in v_family]
    rows, cols = len(h_samples), len(v_samples)
    if rows < 2 or cols < 2:
        raise ValueError("need at least 2 lines per family")
    threshold = threshold_frac * max(img_w, img_h)

    nodes = np.zeros((rows, cols, 2), dtype=np.float64)
    dists = np.zeros((rows, cols), dtype=np.float64)
    if tree_on == HORIZONTAL:
        for i in range(rows):
            tree = cKDTree(h_samples[i])
            for j in range(cols):
                dd, ii = tree.query(v_samples[j])
                k = int(np.argmin(dd))
                nodes[i, j] = (v_samples[j][k] + h_samples[i][ii[k]]) / 2.0
                dists[i, j] = dd[k]
    elif tree_on == VERTICAL:
        for j in range(cols):
            tree = cKDTree(v_samples[j])
            for i in range(rows):
                dd, ii = tree.query(h_samples[i])
                k = int(np.argmin(dd))
                nodes[i, j] = (h_samples[i][k] + v_samples[j][ii[k]]) / 2.0
                dists[i, j] = dd[k]
    else:
        raise ValueError(f"tree_on must be '{HORIZONTAL}' or '{VERTICAL}'")

    in_bounds = ((nodes[:, :, 0] >= -0.1 * img_w) & (nodes[:, :, 0] <= 1.1 * img_w)
                 & (nodes[:, :, 1] >= -0.1 * img_h) & (nodes[:, :, 1] <= 1.1 * img_h))
    valid = (dists <= threshold) & in_bounds

    n_invalid = int((~valid).sum())
    if n_invalid > 0.1 * rows * cols:
        raise GridFailureError(
            f"{n_invalid}/{rows * cols} grid nodes have no acceptable intersection")
    if n_invalid:
        _complete_invalid(nodes, valid)
    return WarpGrid(rows=rows, cols=cols, nodes=nodes, valid=valid)


def grid_is_monotone(grid: WarpGrid, tol: float = 1e-9) -> bool:
    """Row x-coordinates increase with column index and column y-coordinates
    increase with row index (the no-fold condition)."""
    dx = np.diff(grid.nodes[:, :, 0], axis=1)
    dy = np.diff(grid.nodes[:, :, 1], axis=0)
    return bool((dx > -tol).all() and (dy > -tol).all())
