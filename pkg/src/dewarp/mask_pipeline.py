"""Refine a raw document probability mask into one clean binary region.

Stages: edge-preserving refinement against the photo (local linear model),
histogram threshold selection minimizing within-class variance, then
largest-connected-component selection.  Masks are float64 arrays with values
in [0, 1]; binary masks are uint8 arrays with values {0, 1}.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .errors import DegenerateInputError, DimensionMismatchError, EmptyMaskError
from .imgio import luminance

# 4-connectivity: diagonal contact does not join components
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.uint8)


@dataclass
class GuidedFilterParams:
    """Window radius and regularizer for the local linear refinement.

    The per-window linear coefficient fields are retained only when the
    filter is run with ``keep_coefficients=True`` (debug/analysis use).
    """

    radius: int
    epsilon: float
    a: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None


@dataclass(frozen=True)
class OtsuResult:
    threshold: float            # intensity in [0, 1] (quantized level / 255)
    omega0: float               # background class probability
    omega1: float               # foreground class probability
    sigma0_sq: float            # background class variance
    sigma1_sq: float            # foreground class variance
    within_class_variance: float


def default_guided_params(width: int, height: int) -> GuidedFilterParams:
    """Radius = 1% of the minimum mask dimension (at least 1), epsilon = radius/2."""
    radius = max(1, int(0.01 * min(width, height) + 0.5))
    return GuidedFilterParams(radius=radius, epsilon=radius / 2.0)


def _validate_mask(mask: np.ndarray) -> np.ndarray:
    arr = np.asarray(mask, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise EmptyMaskError(f"probability mask must be non-empty 2-D, got shape {arr.shape}")
    if arr.min() < -1e-9 or arr.max() > 1.0 + 1e-9:
        raise ValueError("probability mask values must lie in [0, 1]")
    return np.clip(arr, 0.0, 1.0)


def _window_bounds(n: int, radius: int):
    lo = np.clip(np.arange(n) - radius, 0, n)
    hi = np.clip(np.arange(n) + radius + 1, 0, n)
    return lo, hi


def box_mean(arr: np.ndarray, radius: int) -> np.ndarray:
    """Mean over the (2r+1)^2 window clipped to the image (O(N) integral image)."""
    arr = np.asarray(arr, dtype=np.float64)
    h, w = arr.shape
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = arr.cumsum(axis=0).cumsum(axis=1)
    y0, y1 = _window_bounds(h, radius)
    x0, x1 = _window_bounds(w, radius)
    sums = (integral[np.ix_(y1, x1)] - integral[np.ix_(y0, x1)]
            - integral[np.ix_(y1, x0)] + integral[np.ix_(y0, x0)])
    counts = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return sums / counts


def guided_filter(
    mask: np.ndarray,
    guide: np.ndarray,
    params: Optional[GuidedFilterParams] = None,
    keep_coefficients: bool = False,
) -> np.ndarray:
    """Refine `mask` as a local linear function of the guide image.

    The guide is reduced to Rec. 601 luminance when 3-channel; defaults
    follow the radius/epsilon rule of :func:`default_guided_params`.
    Output is clamped to [0, 1].
    """
    p = _validate_mask(mask)
    guide_arr = np.asarray(guide)
    if guide_arr.shape[:2] != p.shape:
        raise DimensionMismatchError(
            f"guide dimensions {guide_arr.shape[:2]} != mask dimensions {p.shape}")
    i = luminance(guide_arr)

    h, w = p.shape
    if params is None:
        params = default_guided_params(w, h)
    if params.radius < 1:
        raise ValueError("guided filter radius must be >= 1")
    if params.epsilon <= 0:
        raise ValueError("guided filter epsilon must be > 0")

    r, eps = params.radius, params.epsilon
    mean_i = box_mean(i, r)
    mean_p = box_mean(p, r)
    var_i = box_mean(i * i, r) - mean_i * mean_i
    cov_ip = box_mean(i * p, r) - mean_i * mean_p
    del p

    a = cov_ip / (var_i + eps)
    del cov_ip, var_i
    b = mean_p - a * mean_i
    del mean_p, mean_i
    if keep_coefficients:
        params.a = a
        params.b = b

    refined = box_mean(a, r) * i + box_mean(b, r)
    return np.clip(refined, 0.0, 1.0)


def otsu_binarize(mask: np.ndarray):
    """Threshold a probability mask at the level minimizing within-class variance.

    The mask is quantized to 256 levels (q = round(255 v)); the exhaustive
    search assigns levels <= t to the background class.  Ties on the
    within-class variance resolve to the smallest threshold.

    Returns:
        (OtsuResult, binary uint8 mask with 1 where the mask exceeds the threshold)

    Raises:
        DegenerateInputError: all values fall into one quantized level, so no
            foreground/background split exists.
    """
    p = _validate_mask(mask)
    q = np.rint(p * 255.0).astype(np.int64)
    hist = np.bincount(q.ravel(), minlength=256)
    if np.count_nonzero(hist) < 2:
        raise DegenerateInputError("constant mask: no threshold separates two classes")

    # The histogram is integer data, so the criterion is rational; selecting
    # the argmin in exact arithmetic keeps the smallest-threshold tie rule
    # meaningful (float summation order would decide near-ties instead).
    counts = [int(c) for c in hist]
    n_total = sum(counts)
    cum_n = cum_s1 = cum_s2 = 0
    tot_s1 = sum(c * v for v, c in enumerate(counts))
    tot_s2 = sum(c * v * v for v, c in enumerate(counts))

    best_t = 0
    best_num = best_den = None  # sigma_w as an exact ratio num/den
    stats = None
    for t in range(256):
        cum_n += counts[t]
        cum_s1 += counts[t] * t
        cum_s2 += counts[t] * t * t
        n0, n1 = cum_n, n_total - cum_n
        # class variance v_c = (n_c * S2_c - S1_c^2) / n_c^2; weight n_c / N
        a0 = n0 * cum_s2 - cum_s1 * cum_s1
        a1 = n1 * (tot_s2 - cum_s2) - (tot_s1 - cum_s1) ** 2
        if n0 and n1:
            num = a0 * n1 + a1 * n0
            den = n0 * n1
        elif n0:
            num, den = a0, n0
        else:
            num, den = a1, n1
        # compare num/den < best_num/best_den without division
        if best_num is None or num * best_den < best_num * den:
            best_t, best_num, best_den = t, num, den
            stats = (n0, n1, a0, a1)

    n0, n1, a0, a1 = stats
    scale = 255.0 * 255.0  # report variances in intensity^2 ([0,1] scale)
    result = OtsuResult(
        threshold=best_t / 255.0,
        omega0=n0 / n_total,
        omega1=n1 / n_total,
        sigma0_sq=(a0 / (n0 * n0) if n0 else 0.0) / scale,
        sigma1_sq=(a1 / (n1 * n1) if n1 else 0.0) / scale,
        within_class_variance=(best_num / best_den / n_total) / scale,
    )
    binary = (q > best_t).astype(np.uint8)
    return result, binary


def select_largest_component(binary: np.ndarray) -> np.ndarray:
    """Keep only the largest 4-connected foreground component.

    Area ties resolve to the component whose first foreground pixel comes
    earliest in row-major order.
    """
    bits = np.asarray(binary)
    if bits.ndim != 2 or bits.size == 0:
        raise EmptyMaskError(f"binary mask must be non-empty 2-D, got shape {bits.shape}")
    if not np.isin(bits, (0, 1)).all():
        raise ValueError("binary mask values must be exactly 0 or 1")
    labels, count = ndimage.label(bits, structure=_CROSS)
    if count == 0:
        raise EmptyMaskError("binary mask has no foreground pixels")

    areas = np.bincount(labels.ravel())
    areas[0] = 0
    best_area = areas.max()
    candidates = np.flatnonzero(areas == best_area)
    if len(candidates) == 1:
        chosen = candidates[0]
    else:
        flat = labels.ravel()
        chosen = min(candidates, key=lambda lab: int(np.argmax(flat == lab)))
    return (labels == chosen).astype(np.uint8)
