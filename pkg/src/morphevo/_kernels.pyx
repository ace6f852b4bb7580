# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment-distance kernels.

Arithmetic order matches ``_kernels_py`` operation for operation so both
backends return bit-identical results.
"""

import numpy as np

from libc.math cimport sqrt
from libc.stdint cimport int64_t

cdef double EPS = 1e-12


cdef inline double _clamp01(double v) noexcept nogil:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


cdef inline bint _before(const double* p0, const double* p1,
                         const double* q0, const double* q1) noexcept nogil:
    # lexicographic order on (p0, p1) vs (q0, q1); True if p <= q
    cdef int k
    for k in range(3):
        if p0[k] != q0[k]:
            return p0[k] < q0[k]
    for k in range(3):
        if p1[k] != q1[k]:
            return p1[k] < q1[k]
    return True


cdef inline double _point_seg2(const double* p, const double* a, double dx, double dy,
                               double dz, double len2) noexcept nogil:
    # squared distance from p to the segment a + t * d
    cdef double t = _clamp01(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy + (p[2] - a[2]) * dz) / len2)
    cdef double cx = p[0] - (a[0] + dx * t)
    cdef double cy = p[1] - (a[1] + dy * t)
    cdef double cz = p[2] - (a[2] + dz * t)
    return cx * cx + cy * cy + cz * cz


cdef double _seg_dist_ordered(const double* p0, const double* p1,
                              const double* q0, const double* q1) noexcept nogil:
    cdef double d1x = p1[0] - p0[0], d1y = p1[1] - p0[1], d1z = p1[2] - p0[2]
    cdef double d2x = q1[0] - q0[0], d2y = q1[1] - q0[1], d2z = q1[2] - q0[2]
    cdef double rx = p0[0] - q0[0], ry = p0[1] - q0[1], rz = p0[2] - q0[2]
    cdef double a = d1x * d1x + d1y * d1y + d1z * d1z
    cdef double e = d2x * d2x + d2y * d2y + d2z * d2z
    cdef double f = d2x * rx + d2y * ry + d2z * rz
    cdef double s, t, b, c, denom, cx, cy, cz, best
    if a <= EPS and e <= EPS:
        return sqrt(rx * rx + ry * ry + rz * rz)
    if a <= EPS:
        s = 0.0
        t = _clamp01(f / e)
    else:
        c = d1x * rx + d1y * ry + d1z * rz
        if e <= EPS:
            t = 0.0
            s = _clamp01(-c / a)
        else:
            b = d1x * d2x + d1y * d2y + d1z * d2z
            denom = a * e - b * b
            if denom <= EPS * a * e:
                # near-parallel: the interior solve is ill-conditioned, so take
                # the closest endpoint-to-segment distance instead
                best = _point_seg2(p0, q0, d2x, d2y, d2z, e)
                best = min(best, _point_seg2(p1, q0, d2x, d2y, d2z, e))
                best = min(best, _point_seg2(q0, p0, d1x, d1y, d1z, a))
                best = min(best, _point_seg2(q1, p0, d1x, d1y, d1z, a))
                return sqrt(best)
            s = _clamp01((b * f - c * e) / denom)
            t = (b * s + f) / e
            if t < 0.0:
                t = 0.0
                s = _clamp01(-c / a)
            elif t > 1.0:
                t = 1.0
                s = _clamp01((b - c) / a)
    cx = (p0[0] + d1x * s) - (q0[0] + d2x * t)
    cy = (p0[1] + d1y * s) - (q0[1] + d2y * t)
    cz = (p0[2] + d1z * s) - (q0[2] + d2z * t)
    return sqrt(cx * cx + cy * cy + cz * cz)


cdef inline double _seg_dist(const double* p0, const double* p1,
                             const double* q0, const double* q1) noexcept nogil:
    if _before(p0, p1, q0, q1):
        return _seg_dist_ordered(p0, p1, q0, q1)
    return _seg_dist_ordered(q0, q1, p0, p1)


def segment_distance(p0, p1, q0, q1):
    """Minimum distance between segments [p0, p1] and [q0, q1]."""
    cdef double a[3]
    cdef double b[3]
    cdef double c[3]
    cdef double d[3]
    cdef int k
    for k in range(3):
        a[k] = p0[k]
        b[k] = p1[k]
        c[k] = q0[k]
        d[k] = q1[k]
    return _seg_dist(a, b, c, d)


def pair_distances(const double[:, ::1] starts, const double[:, ::1] ends,
                   const int64_t[:, ::1] pairs):
    """Segment distances for each row ``(i, j)`` of ``pairs``."""
    cdef Py_ssize_t n = pairs.shape[0], k
    cdef int64_t i, j
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for k in range(n):
            i = pairs[k, 0]
            j = pairs[k, 1]
            res[k] = _seg_dist(&starts[i, 0], &ends[i, 0], &starts[j, 0], &ends[j, 0])
    return out
