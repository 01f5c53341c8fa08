"""Pure-numpy bicubic sampling, bit-compatible with the compiled kernel.

Term ordering matches ``_bicubic.pyx`` exactly so the two backends agree to
the last bit; keep both in sync when touching either.  Output rows are
processed in chunks to bound the size of the gather temporaries.
"""

import numpy as np

_CHUNK_ROWS = 256


def _weights(t):
    t2 = t * t
    t3 = t2 * t
    w0 = -0.5 * t3 + t2 - 0.5 * t
    w1 = 1.5 * t3 - 2.5 * t2 + 1.0
    w2 = -1.5 * t3 + 2.0 * t2 + 0.5 * t
    w3 = 0.5 * t3 - 0.5 * t2
    return w0, w1, w2, w3


def bicubic_sample(src, map_x, map_y, out):
    h, w = src.shape[0], src.shape[1]
    channels = src.shape[2]
    oh = out.shape[0]

    for r0 in range(0, oh, _CHUNK_ROWS):
        r1 = min(r0 + _CHUNK_ROWS, oh)
        sx = map_x[r0:r1]
        sy = map_y[r0:r1]

        fx = np.floor(sx)
        fy = np.floor(sy)
        tx = sx - fx
        ty = sy - fy
        ix = fx.astype(np.int64)
        iy = fy.astype(np.int64)

        wx = _weights(tx)
        wy = _weights(ty)
        xs = [np.clip(ix + k - 1, 0, w - 1) for k in range(4)]
        ys = [np.clip(iy + k - 1, 0, h - 1) for k in range(4)]

        for c in range(channels):
            plane = src[:, :, c]
            rows = []
            for a in range(4):
                ya = ys[a]
                acc = ((plane[ya, xs[0]] * wx[0] + plane[ya, xs[1]] * wx[1])
                       + plane[ya, xs[2]] * wx[2]) + plane[ya, xs[3]] * wx[3]
                rows.append(acc)
            out[r0:r1, :, c] = ((rows[0] * wy[0] + rows[1] * wy[1])
                                + rows[2] * wy[2]) + rows[3] * wy[3]
