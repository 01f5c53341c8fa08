"""Geometry-restoration and text-readability metrics.

Geometry metrics (SSIM / MSE / NRMSE) run on Rec. 601 luminance in [0, 255];
when dimensions differ and resizing is enabled, the second image is resized
to the first (reference) with the package's bicubic sampler.  Text metrics
operate on Unicode scalar values; evaluate_pair strips all whitespace before
comparison.
"""

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatchError
from .imgio import luminance
from .remapper import resize_bicubic

SSIM_WINDOW = 7
SSIM_C1 = (0.01 * 255.0) ** 2
SSIM_C2 = (0.03 * 255.0) ** 2


@dataclass(frozen=True)
class GeometryReport:
    ssim: float
    mse: float
    nrmse: float


@dataclass(frozen=True)
class TextReport:
    ld: int
    jw: float
    cer: float
    char_count_hyp: int
    char_count_ref: int


def _aligned_luminance(reference, other, resize: bool):
    a = luminance(reference)
    b = np.asarray(other)
    if b.shape[:2] != a.shape[:2]:
        if not resize:
            raise DimensionMismatchError(
                f"image dimensions differ: {a.shape[:2]} vs {b.shape[:2]}")
        b = resize_bicubic(b, a.shape[0], a.shape[1])
    return a, luminance(b)


def mse(reference, image, resize: bool = False) -> float:
    """Mean squared intensity difference (intensities in [0, 255])."""
    a, b = _aligned_luminance(reference, image, resize)
    return float(np.mean((a - b) ** 2))


def nrmse(reference, image, resize: bool = False) -> float:
    """Root of MSE normalized by the reference's Euclidean intensity norm."""
    a, b = _aligned_luminance(reference, image, resize)
    denom = np.sqrt(np.mean(a**2))
    if denom == 0.0:
        raise ValueError("all-zero reference image: NRMSE undefined")
    return float(np.sqrt(np.mean((a - b) ** 2)) / denom)


def _window_means(arr: np.ndarray, k: int) -> np.ndarray:
    """Means over all k*k windows fully inside the image (integral image)."""
    h, w = arr.shape
    integral = np.zeros((h + 1, w + 1), dtype=np.float64)
    integral[1:, 1:] = arr.cumsum(axis=0).cumsum(axis=1)
    sums = (integral[k:, k:] - integral[:-k, k:] - integral[k:, :-k] + integral[:-k, :-k])
    return sums / (k * k)


def ssim(reference, image, resize: bool = False) -> float:
    """Mean local structural similarity, 7x7 uniform window, standard constants.

    Local statistics use population variance; the score is the mean over all
    fully-contained windows.
    """
    a, b = _aligned_luminance(reference, image, resize)
    k = SSIM_WINDOW
    if a.shape[0] < k or a.shape[1] < k:
        raise ValueError(f"images must be at least {k}x{k} for SSIM")

    mu_a = _window_means(a, k)
    mu_b = _window_means(b, k)
    mean_aa = _window_means(a * a, k)
    mean_bb = _window_means(b * b, k)
    mean_ab = _window_means(a * b, k)
    var_a = mean_aa - mu_a * mu_a
    var_b = mean_bb - mu_b * mu_b
    cov = mean_ab - mu_a * mu_b

    num = (2.0 * mu_a * mu_b + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_a * mu_a + mu_b * mu_b + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def levenshtein(ref: str, hyp: str) -> int:
    """Minimal unit-cost insert/delete/substitute count over Unicode scalars."""
    if ref == hyp:
        return 0
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    prev = list(range(len(hyp) + 1))
    for i, cr in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, ch in enumerate(hyp, start=1):
            cur[j] = min(prev[j] + 1,           # delete
                         cur[j - 1] + 1,        # insert
                         prev[j - 1] + (cr != ch))  # substitute / match
        prev = cur
    return prev[-1]


def jaro_winkler(ref: str, hyp: str) -> float:
    """Jaro similarity with the standard Winkler prefix bonus (p=0.1, len<=4)."""
    if ref == hyp:
        return 1.0
    la, lb = len(ref), len(hyp)
    if la == 0 or lb == 0:
        return 0.0

    window = max(max(la, lb) // 2 - 1, 0)
    matched_a = [False] * la
    matched_b = [False] * lb
    matches = 0
    for i, ca in enumerate(ref):
        lo = max(0, i - window)
        hi = min(lb, i + window + 1)
        for j in range(lo, hi):
            if not matched_b[j] and hyp[j] == ca:
                matched_a[i] = matched_b[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0

    a_run = [c for c, m in zip(ref, matched_a) if m]
    b_run = [c for c, m in zip(hyp, matched_b) if m]
    transpositions = sum(x != y for x, y in zip(a_run, b_run)) // 2

    jaro = (matches / la + matches / lb + (matches - transpositions) / matches) / 3.0
    prefix = 0
    for ca, cb in zip(ref, hyp):
        if ca != cb or prefix == 4:
            break
        prefix += 1
    return jaro + prefix * 0.1 * (1.0 - jaro)


def cer(ref: str, hyp: str) -> float:
    """Character error rate: edit distance over reference length, unclamped
    (can exceed 1 when the hypothesis is much longer than the reference)."""
    if not ref:
        raise ValueError("CER undefined for an empty reference")
    return levenshtein(ref, hyp) / len(ref)


def strip_whitespace(text: str) -> str:
    return "".join(text.split())


def evaluate_pair(dewarped, reference, hyp_text: str, ref_text: str,
                  resize: bool = True):
    """All metrics for one document pair.

    Texts are whitespace-stripped before comparison; geometry metrics compare
    the dewarped image against the reference (resized to the reference's
    dimensions when `resize`).
    """
    geometry = GeometryReport(
        ssim=ssim(reference, dewarped, resize=resize),
        mse=mse(reference, dewarped, resize=resize),
        nrmse=nrmse(reference, dewarped, resize=resize),
    )
    ref_stripped = strip_whitespace(ref_text)
    hyp_stripped = strip_whitespace(hyp_text)
    text = TextReport(
        ld=levenshtein(ref_stripped, hyp_stripped),
        jw=jaro_winkler(ref_stripped, hyp_stripped),
        cer=cer(ref_stripped, hyp_stripped),
        char_count_hyp=len(hyp_stripped),
        char_count_ref=len(ref_stripped),
    )
    return geometry, text


def report_dict(geometry: GeometryReport, text: TextReport) -> dict:
    out = asdict(geometry)
    out.update(asdict(text))
    return out
