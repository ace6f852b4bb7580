"""Pure-Python segment-distance kernels (fallback for ``_kernels``)."""

from __future__ import annotations

from math import sqrt

import numpy as np

EPS = 1e-12


def _clamp01(v: float) -> float:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


def _point_seg2(p, a, dx, dy, dz, len2) -> float:
    # squared distance from p to the segment a + t * d
    t = _clamp01(((p[0] - a[0]) * dx + (p[1] - a[1]) * dy + (p[2] - a[2]) * dz) / len2)
    cx = p[0] - (a[0] + dx * t)
    cy = p[1] - (a[1] + dy * t)
    cz = p[2] - (a[2] + dz * t)
    return cx * cx + cy * cy + cz * cz


def _ordered(p0, p1, q0, q1) -> float:
    d1x, d1y, d1z = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    d2x, d2y, d2z = q1[0] - q0[0], q1[1] - q0[1], q1[2] - q0[2]
    rx, ry, rz = p0[0] - q0[0], p0[1] - q0[1], p0[2] - q0[2]
    a = d1x * d1x + d1y * d1y + d1z * d1z
    e = d2x * d2x + d2y * d2y + d2z * d2z
    f = d2x * rx + d2y * ry + d2z * rz
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
                return sqrt(min(
                    _point_seg2(p0, q0, d2x, d2y, d2z, e),
                    _point_seg2(p1, q0, d2x, d2y, d2z, e),
                    _point_seg2(q0, p0, d1x, d1y, d1z, a),
                    _point_seg2(q1, p0, d1x, d1y, d1z, a),
                ))
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


def segment_distance(p0, p1, q0, q1) -> float:
    """Minimum distance between segments [p0, p1] and [q0, q1]."""
    p0, p1, q0, q1 = (tuple(float(v) for v in pt) for pt in (p0, p1, q0, q1))
    # evaluate in a canonical order so d(a, b) == d(b, a) bit for bit
    if (p0, p1) <= (q0, q1):
        return _ordered(p0, p1, q0, q1)
    return _ordered(q0, q1, p0, p1)


def pair_distances(starts, ends, pairs) -> np.ndarray:
    starts = np.asarray(starts, dtype=np.float64).tolist()
    ends = np.asarray(ends, dtype=np.float64).tolist()
    out = np.empty(len(pairs), dtype=np.float64)
    for k, (i, j) in enumerate(np.asarray(pairs).tolist()):
        out[k] = segment_distance(starts[i], ends[i], starts[j], ends[j])
    return out
