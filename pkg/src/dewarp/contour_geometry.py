"""Document outline extraction and partitioning into four sides.

Coordinates are (x, y) pixel positions with y pointing down.  Throughout the
module "counter-clockwise" means counter-clockwise as displayed on screen,
which with y-down corresponds to negative shoelace signed area.  All
orientation-sensitive steps (corner sorting, side naming) rely on that one
convention.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateGeometryError, DewarpError, EmptyMaskError

# Moore neighborhood in clockwise screen order starting West, as (dx, dy)
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_MOORE_INDEX = {d: i for i, d in enumerate(_MOORE)}

CORNER_SNAP_TOLERANCE = 2.0  # px: max corner-to-contour distance in segment_sides


@dataclass
class Contour:
    points: np.ndarray  # (N, 2) float64 (x, y)
    closed: bool = True

    def __len__(self):
        return len(self.points)


@dataclass
class CornerQuad:
    corners: np.ndarray   # (4, 2), increasing angle from +Y about the centroid
    centroid: np.ndarray  # (2,), arithmetic mean of the source hull vertices


@dataclass
class SideSet:
    """Contour split into four sides; every side starts and ends at a corner.

    Sides are stored in contour-traversal order from their starting corner.
    ``oriented()`` re-orders them into the grid-building convention.
    """

    top: np.ndarray
    right: np.ndarray
    bottom: np.ndarray
    left: np.ndarray
    quad: CornerQuad

    def oriented(self):
        """Sides re-oriented: top/bottom left-to-right, left/right top-to-bottom.

        A counter-clockwise contour traverses the top side toward the
        top-left corner and the right side toward the top-right corner, so
        those two are reversed.
        """
        return {
            "top": self.top[::-1],
            "bottom": self.bottom,
            "left": self.left,
            "right": self.right[::-1],
        }

    def debug_dict(self, contour: Contour):
        return {
            "contour": np.asarray(contour.points).tolist(),
            "corners": np.asarray(self.quad.corners).tolist(),
            "sides": {
                "top": np.asarray(self.top).tolist(),
                "right": np.asarray(self.right).tolist(),
                "bottom": np.asarray(self.bottom).tolist(),
                "left": np.asarray(self.left).tolist(),
            },
        }


def signed_area(points: np.ndarray) -> float:
    """Shoelace signed area; negative for screen counter-clockwise (y down)."""
    pts = np.asarray(points, dtype=np.float64)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def perimeter(points: np.ndarray, closed: bool = True) -> float:
    pts = np.asarray(points, dtype=np.float64)
    diffs = np.diff(pts, axis=0)
    total = float(np.hypot(diffs[:, 0], diffs[:, 1]).sum())
    if closed and len(pts) > 1:
        total += float(np.hypot(*(pts[0] - pts[-1])))
    return total


def ensure_ccw(points: np.ndarray) -> np.ndarray:
    """Reverse a closed point loop if it is clockwise; keeps the start point."""
    pts = np.asarray(points, dtype=np.float64)
    if signed_area(pts) > 0:
        pts = np.concatenate([pts[:1], pts[:0:-1]], axis=0)
    return pts


def extract_contour(binary: np.ndarray) -> Contour:
    """Trace the closed outer border of the single foreground component.

    Moore-neighbor tracing with Jacob's stopping criterion; visits exactly
    the foreground pixels that have a background 4-neighbor, one step per
    border move (thin necks are visited once per pass).  The result is
    oriented counter-clockwise.

    Raises:
        EmptyMaskError: no foreground.
        DegenerateGeometryError: component too small to bound (under 3 border
            points).
        ValueError: more than one 4-connected component.
    """
    from scipy import ndimage

    bits = np.asarray(binary)
    if bits.ndim != 2 or bits.size == 0:
        raise EmptyMaskError("binary mask must be non-empty 2-D")
    fg = bits > 0
    if not fg.any():
        raise EmptyMaskError("binary mask has no foreground pixels")
    _, n_comp = ndimage.label(fg, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    if n_comp != 1:
        raise ValueError(f"expected exactly one component, found {n_comp}")

    h, w = fg.shape
    ys, xs = np.nonzero(fg)
    first = np.lexsort((xs, ys))[0]  # topmost, then leftmost
    start = (int(xs[first]), int(ys[first]))

    def neighbor(px, py, d):
        nx, ny = px + _MOORE[d][0], py + _MOORE[d][1]
        if 0 <= nx < w and 0 <= ny < h and fg[ny, nx]:
            return nx, ny
        return None

    def advance(px, py, back_dir):
        # scan clockwise starting just past the backtrack cell
        for k in range(1, 9):
            d = (back_dir + k) % 8
            hit = neighbor(px, py, d)
            if hit is not None:
                bg_dir = (back_dir + k - 1) % 8
                bg = (px + _MOORE[bg_dir][0], py + _MOORE[bg_dir][1])
                new_back = _MOORE_INDEX[(bg[0] - hit[0], bg[1] - hit[1])]
                return hit, new_back
        return None, None

    trace = [start]
    nxt, back = advance(start[0], start[1], 0)
    if nxt is None:
        raise DegenerateGeometryError("contour too small: isolated pixel")
    first_move = (start, nxt)

    cur = nxt
    trace.append(nxt)
    limit = 4 * int(fg.sum()) + 8
    for _ in range(limit):
        nxt, back = advance(cur[0], cur[1], back)
        if (cur, nxt) == first_move:
            break
        trace.append(nxt)
        cur = nxt
    else:
        raise DewarpError("contour tracing failed to close")

    if trace[-1] == trace[0]:
        trace.pop()
    if len(set(trace)) < 3:
        raise DegenerateGeometryError(f"contour too small: {len(set(trace))} border points")

    return Contour(points=ensure_ccw(np.array(trace, dtype=np.float64)), closed=True)


def _segment_distances(points, a, b):
    """Distance from each point to the segment a-b."""
    pts = np.asarray(points, dtype=np.float64)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.hypot(pts[:, 0] - a[0], pts[:, 1] - a[1])
    t = np.clip(((pts - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.hypot(pts[:, 0] - proj[:, 0], pts[:, 1] - proj[:, 1])


def simplify_polyline(points: np.ndarray, tolerance: float) -> np.ndarray:
    """Douglas-Peucker on an open polyline (point-to-segment distances).

    Returns a subsequence of the input; every removed point lies within
    `tolerance` of the simplified polyline.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    if n <= 2:
        return pts.copy()
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        d = _segment_distances(pts[i + 1:j], pts[i], pts[j])
        k = int(np.argmax(d))
        if d[k] > tolerance:
            idx = i + 1 + k
            keep[idx] = True
            stack.append((i, idx))
            stack.append((idx, j))
    return pts[keep]


def simplify_contour(contour: Contour, tolerance: float) -> Contour:
    """Douglas-Peucker for a closed contour: split at the point farthest from
    the start, simplify both arcs, and rejoin."""
    if not contour.closed:
        raise ValueError("simplify_contour requires a closed contour")
    pts = np.asarray(contour.points, dtype=np.float64)
    if len(pts) < 3:
        raise DegenerateGeometryError("closed contour needs at least 3 points")
    dist = np.hypot(pts[:, 0] - pts[0, 0], pts[:, 1] - pts[0, 1])
    split = int(np.argmax(dist))
    if split == 0:
        raise DegenerateGeometryError("contour collapsed to a point")
    arc1 = simplify_polyline(pts[: split + 1], tolerance)
    arc2 = simplify_polyline(np.concatenate([pts[split:], pts[:1]], axis=0), tolerance)
    merged = np.concatenate([arc1[:-1], arc2[:-1]], axis=0)
    if len(merged) < 3:
        raise DegenerateGeometryError("contour degenerated during simplification")
    return Contour(points=merged, closed=True)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: np.ndarray) -> Contour:
    """Convex hull (monotone chain), counter-clockwise, strict turns only.

    Raises DegenerateGeometryError when all points are collinear.
    """
    pts = np.unique(np.asarray(points, dtype=np.float64), axis=0)
    if len(pts) < 3:
        raise DegenerateGeometryError("convex hull needs at least 3 distinct points")
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(iterable):
        chain = []
        for p in iterable:
            while len(chain) > 1 and _cross(chain[-2], chain[-1], p) <= 0:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1], dtype=np.float64)
    if len(hull) < 3:
        raise DegenerateGeometryError("all points are collinear")
    hull = ensure_ccw(hull)
    start = np.lexsort((hull[:, 1], hull[:, 0]))[0]
    return Contour(points=np.roll(hull, -start, axis=0), closed=True)


def corner_angles(corners: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    """Angle of each centroid->corner direction from the +Y axis, in [0, 2pi)."""
    d = np.asarray(corners, dtype=np.float64) - np.asarray(centroid, dtype=np.float64)
    return np.mod(np.arctan2(d[:, 0], d[:, 1]), 2.0 * np.pi)


def _quad_area(pts):
    return abs(signed_area(pts))

# hull sizes up to this use exhaustive 4-subset search; beyond it, the
# one-vertex-at-a-time refinement
_EXHAUSTIVE_HULL = 12


def _best_quad_indices(hull: np.ndarray) -> tuple:
    m = len(hull)
    if m == 4:
        return (0, 1, 2, 3)
    if m <= _EXHAUSTIVE_HULL:
        best, best_area = None, -1.0
        for combo in combinations(range(m), 4):
            area = _quad_area(hull[list(combo)])
            if area > best_area:
                best, best_area = combo, area
        return best

    # refinement: seed with diagonal extremes, then improve one slot at a time
    s = hull[:, 0] + hull[:, 1]
    d = hull[:, 0] - hull[:, 1]
    seed = []
    for idx in (int(np.argmin(s)), int(np.argmax(d)), int(np.argmax(s)), int(np.argmin(d))):
        if idx not in seed:
            seed.append(idx)
    for idx in range(m):
        if len(seed) >= 4:
            break
        if idx not in seed:
            seed.append(idx)
    current = tuple(sorted(seed))

    def area_of(indices):
        return _quad_area(hull[list(indices)])

    best_area = area_of(current)
    for _ in range(50):
        improved = False
        for slot in range(4):
            others = [current[i] for i in range(4) if i != slot]
            for candidate in range(m):
                if candidate in others:
                    continue
                trial = tuple(sorted(others + [candidate]))
                area = area_of(trial)
                if area > best_area + 1e-12:
                    current, best_area = trial, area
                    improved = True
        if not improved:
            break
    return current


def detect_corners(hull) -> CornerQuad:
    """Pick the 4 hull vertices enclosing maximal quadrilateral area and sort
    them by increasing angle about the hull centroid, measured from +Y.

    Angle ties resolve by distance from the centroid.
    """
    pts = hull.points if isinstance(hull, Contour) else np.asarray(hull, dtype=np.float64)
    if len(pts) < 4:
        raise DegenerateGeometryError(f"need at least 4 hull vertices, got {len(pts)}")
    centroid = pts.mean(axis=0)

    chosen = pts[list(_best_quad_indices(pts))]
    ang = corner_angles(chosen, centroid)
    dist = np.hypot(chosen[:, 0] - centroid[0], chosen[:, 1] - centroid[1])
    order = np.lexsort((dist, ang))
    corners = chosen[order]

    # reject quads with (near-)collinear corner triples
    for k in range(4):
        if abs(_cross(corners[k], corners[(k + 1) % 4], corners[(k + 2) % 4])) < 1e-9:
            raise DegenerateGeometryError("selected corners are collinear")
    return CornerQuad(corners=corners, centroid=centroid)


def _locate_on_contour(pts: np.ndarray, corner: np.ndarray) -> int:
    d = np.hypot(pts[:, 0] - corner[0], pts[:, 1] - corner[1])
    idx = int(np.argmin(d))
    if d[idx] > CORNER_SNAP_TOLERANCE:
        raise DewarpError(
            f"corner {corner.tolist()} is {d[idx]:.2f}px from the contour "
            f"(tolerance {CORNER_SNAP_TOLERANCE}px)")
    return idx


def segment_sides(contour: Contour, quad: CornerQuad) -> SideSet:
    """Assign contour points to the four sides via diagonal cross products.

    The two diagonals (corner0-corner2, corner1-corner3) split the plane in
    four sectors; a point's sector is the sign pair of its cross products
    against them.  Points exactly on a diagonal inherit the previous point's
    side, which keeps sides contiguous.  Each side is returned in traversal
    order and padded with its two corner endpoints.
    """
    pts = ensure_ccw(np.asarray(contour.points, dtype=np.float64))
    c = quad.corners
    corner_idx = [_locate_on_contour(pts, c[k]) for k in range(4)]
    if len(set(corner_idx)) != 4:
        raise DegenerateGeometryError("two corners snap to the same contour point")

    # name edges: the corner pair with the smallest mean y is the top side;
    # a CCW traversal then visits left, bottom, right
    edge_mean_y = [(c[k][1] + c[(k + 1) % 4][1]) / 2.0 for k in range(4)]
    k_top = int(np.argmin(edge_mean_y))
    edge_names = {k_top: "top", (k_top + 1) % 4: "left",
                  (k_top + 2) % 4: "bottom", (k_top + 3) % 4: "right"}

    d1_origin, d1_vec = c[0], c[2] - c[0]
    d2_origin, d2_vec = c[1], c[3] - c[1]

    def signature(p):
        s1 = d1_vec[0] * (p[1] - d1_origin[1]) - d1_vec[1] * (p[0] - d1_origin[0])
        s2 = d2_vec[0] * (p[1] - d2_origin[1]) - d2_vec[1] * (p[0] - d2_origin[0])
        return np.sign(s1), np.sign(s2)

    sig_to_edge = {}
    for k in range(4):
        mid = (c[k] + c[(k + 1) % 4]) / 2.0
        sig = signature(mid)
        if 0.0 in sig or sig in sig_to_edge:
            raise DegenerateGeometryError("quad too degenerate to partition by diagonals")
        sig_to_edge[sig] = k

    start = corner_idx[k_top]
    rotated = np.roll(pts, -start, axis=0)
    rotated_corner_pos = {(idx - start) % len(pts): k for k, idx in enumerate(corner_idx)}

    per_edge = {k: [] for k in range(4)}
    previous_edge = k_top
    for pos, p in enumerate(rotated):
        if pos in rotated_corner_pos:
            continue
        sig = signature(p)
        if 0.0 in sig:
            edge = previous_edge
        else:
            edge = sig_to_edge[sig]
        per_edge[edge].append(p)
        previous_edge = edge

    sides = {}
    for k in range(4):
        seq = [c[k]] + per_edge[k] + [c[(k + 1) % 4]]
        sides[edge_names[k]] = np.array(seq, dtype=np.float64)
    return SideSet(top=sides["top"], right=sides["right"],
                   bottom=sides["bottom"], left=sides["left"], quad=quad)
