# Catmull-Rom bicubic sampling with replicate-edge padding.
#
# Arithmetic mirrors _fallback.bicubic_sample term for term (same
# association order, compiled with -ffp-contract=off), so both backends
# produce bit-identical float64 output.

from libc.math cimport floor


def bicubic_sample(const double[:, :, ::1] src,
                   const double[:, ::1] map_x,
                   const double[:, ::1] map_y,
                   double[:, :, ::1] out):
    cdef Py_ssize_t h = src.shape[0]
    cdef Py_ssize_t w = src.shape[1]
    cdef Py_ssize_t ch = src.shape[2]
    cdef Py_ssize_t oh = out.shape[0]
    cdef Py_ssize_t ow = out.shape[1]

    cdef Py_ssize_t y, x, c, ix, iy
    cdef Py_ssize_t x0, x1, x2, x3, y0, y1, y2, y3
    cdef double sx, sy, fx, fy, tx, ty, t2, t3
    cdef double wx0, wx1, wx2, wx3, wy0, wy1, wy2, wy3
    cdef double r0, r1, r2, r3

    for y in range(oh):
        for x in range(ow):
            sx = map_x[y, x]
            sy = map_y[y, x]
            fx = floor(sx)
            fy = floor(sy)
            tx = sx - fx
            ty = sy - fy
            ix = <Py_ssize_t> fx
            iy = <Py_ssize_t> fy

            t2 = tx * tx
            t3 = t2 * tx
            wx0 = -0.5 * t3 + t2 - 0.5 * tx
            wx1 = 1.5 * t3 - 2.5 * t2 + 1.0
            wx2 = -1.5 * t3 + 2.0 * t2 + 0.5 * tx
            wx3 = 0.5 * t3 - 0.5 * t2

            t2 = ty * ty
            t3 = t2 * ty
            wy0 = -0.5 * t3 + t2 - 0.5 * ty
            wy1 = 1.5 * t3 - 2.5 * t2 + 1.0
            wy2 = -1.5 * t3 + 2.0 * t2 + 0.5 * ty
            wy3 = 0.5 * t3 - 0.5 * t2

            x0 = ix - 1
            x1 = ix
            x2 = ix + 1
            x3 = ix + 2
            if x0 < 0: x0 = 0
            elif x0 > w - 1: x0 = w - 1
            if x1 < 0: x1 = 0
            elif x1 > w - 1: x1 = w - 1
            if x2 < 0: x2 = 0
            elif x2 > w - 1: x2 = w - 1
            if x3 < 0: x3 = 0
            elif x3 > w - 1: x3 = w - 1

            y0 = iy - 1
            y1 = iy
            y2 = iy + 1
            y3 = iy + 2
            if y0 < 0: y0 = 0
            elif y0 > h - 1: y0 = h - 1
            if y1 < 0: y1 = 0
            elif y1 > h - 1: y1 = h - 1
            if y2 < 0: y2 = 0
            elif y2 > h - 1: y2 = h - 1
            if y3 < 0: y3 = 0
            elif y3 > h - 1: y3 = h - 1

            for c in range(ch):
                r0 = ((src[y0, x0, c] * wx0 + src[y0, x1, c] * wx1)
                      + src[y0, x2, c] * wx2) + src[y0, x3, c] * wx3
                r1 = ((src[y1, x0, c] * wx0 + src[y1, x1, c] * wx1)
                      + src[y1, x2, c] * wx2) + src[y1, x3, c] * wx3
                r2 = ((src[y2, x0, c] * wx0 + src[y2, x1, c] * wx1)
                      + src[y2, x2, c] * wx2) + src[y2, x3, c] * wx3
                r3 = ((src[y3, x0, c] * wx0 + src[y3, x1, c] * wx1)
                      + src[y3, x2, c] * wx2) + src[y3, x3, c] * wx3
                out[y, x, c] = ((r0 * wy0 + r1 * wy1) + r2 * wy2) + r3 * wy3
