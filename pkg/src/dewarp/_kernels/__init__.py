"""Resampling kernels: compiled extension when available, numpy fallback otherwise.

Set ``DEWARP_NO_EXT=1`` to force the fallback.  Both backends produce
bit-identical float64 results (see tests/test_kernels.py), so backend choice
never changes pipeline output.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("DEWARP_NO_EXT"):
    _ext = None
else:
    try:
        from . import _bicubic as _ext
    except ImportError:
        _ext = None

BACKEND = "cython" if _ext is not None else "numpy"

__all__ = ["BACKEND", "bicubic_sample"]


def bicubic_sample(src, map_x, map_y):
    """Sample `src` at real-valued coordinates with a Catmull-Rom cubic kernel.

    Args:
        src: (H, W) or (H, W, C) array, converted to float64.
        map_x, map_y: (H', W') float64 source coordinates per output pixel.
            Samples outside the source use replicated edge values.

    Returns:
        float64 array of shape (H', W') or (H', W', C).
    """
    if map_x.shape != map_y.shape:
        raise ValueError(f"coordinate map shapes differ: {map_x.shape} vs {map_y.shape}")
    squeeze = src.ndim == 2
    src3 = np.ascontiguousarray(src[..., None] if squeeze else src, dtype=np.float64)
    if src3.ndim != 3:
        raise ValueError(f"source must be 2-D or 3-D, got shape {src.shape}")
    mx = np.ascontiguousarray(map_x, dtype=np.float64)
    my = np.ascontiguousarray(map_y, dtype=np.float64)

    out = np.empty(mx.shape + (src3.shape[2],), dtype=np.float64)
    if _ext is not None:
        _ext.bicubic_sample(src3, mx, my, out)
    else:
        _fallback.bicubic_sample(src3, mx, my, out)
    return out[..., 0] if squeeze else out
