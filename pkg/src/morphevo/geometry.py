"""Rest-pose geometry of a morphology.

All predicates are evaluated at the as-built pose (every joint angle zero),
with the head centred on the origin. Limbs are capsules: a segment from the
attachment point along the limb direction, swept by the limb radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .constants import ATTACH_CLEARANCE, GROUND_CONTACT_TOL, OVERLAP_TOL
from .morphology import CENTER, END, HEAD, MID, Morphology, dof_count, head_mass, limb_mass

Point = tuple[float, float, float]

_H = math.sqrt(0.5)
# exact cos/sin at multiples of 45 degrees, so mirrored azimuths cancel exactly
_TRIG = {
    0: (1.0, 0.0), 45: (_H, _H), 90: (0.0, 1.0), 135: (-_H, _H),
    180: (-1.0, 0.0), 225: (-_H, -_H), 270: (0.0, -1.0), 315: (_H, -_H),
}


def _cos_sin(deg: int) -> tuple[float, float]:
    deg %= 360
    if deg in _TRIG:
        return _TRIG[deg]
    rad = math.radians(deg)
    return math.cos(rad), math.sin(rad)


def direction(theta: int, phi: int) -> Point:
    """Unit vector at azimuth ``theta`` and polar angle ``phi`` (degrees from +z)."""
    ct, st = _cos_sin(theta)
    cp, sp = _cos_sin(phi)
    return (sp * ct, sp * st, cp)


@dataclass(frozen=True)
class Capsule:
    p0: Point
    p1: Point
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("capsule radius must be positive")
        if math.dist(self.p0, self.p1) <= 1e-12:
            raise ValueError("capsule endpoints coincide")


@dataclass(frozen=True)
class LimbPose:
    p0: Point
    p1: Point
    direction: Point
    world_theta: int
    radius: float

    def at(self, point: str) -> Point:
        if point == END:
            return self.p1
        if point == MID:
            return tuple((a + b) / 2.0 for a, b in zip(self.p0, self.p1))
        raise ValueError(f"limbs have no {point!r} site")


@dataclass(frozen=True)
class MassProperties:
    total_mass: float
    com: Point


@dataclass(frozen=True)
class SupportPolygon:
    """Convex hull of ground contacts, counter-clockwise."""

    vertices: tuple[tuple[float, float], ...]

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)


@dataclass(frozen=True)
class StabilityResult:
    stable: bool
    margin: float
    area: float
    degenerate: bool
    support: SupportPolygon
    contacts: tuple[tuple[float, float], ...]


def segment_distance(p0, p1, q0, q1) -> float:
    return kernels.segment_distance(p0, p1, q0, q1)


def capsule_distance(a: Capsule, b: Capsule) -> float:
    """Signed clearance between two capsules; negative means they overlap."""
    return kernels.segment_distance(a.p0, a.p1, b.p0, b.p1) - (a.radius + b.radius)


def limb_poses(m: Morphology) -> dict[int, LimbPose]:
    poses: dict[int, LimbPose] = {}
    pending = list(m.limbs)
    while pending:
        progressed = False
        rest = []
        for limb in pending:
            if limb.parent == HEAD:
                origin: Point = (0.0, 0.0, 0.0)
                base_theta = 0
            elif limb.parent in poses:
                parent = poses[limb.parent]
                origin = parent.at(limb.attachment)
                base_theta = parent.world_theta
            else:
                rest.append(limb)
                continue
            p = limb.params
            theta = (base_theta + p.theta) % 360
            d = direction(theta, p.phi)
            p1 = (origin[0] + p.length * d[0], origin[1] + p.length * d[1], origin[2] + p.length * d[2])
            poses[limb.id] = LimbPose(origin, p1, d, theta, p.radius)
            progressed = True
        if not progressed:
            raise ValueError("limb tree has a cycle or dangling parent")
        pending = rest
    return poses


def limb_capsules(m: Morphology) -> dict[int, Capsule]:
    return {i: Capsule(p.p0, p.p1, p.radius) for i, p in limb_poses(m).items()}


def self_intersects(m: Morphology, poses: dict[int, LimbPose] | None = None) -> list[tuple]:
    """Pairs of parts whose overlap is not explained by a shared attachment.

    Parent and child always touch at the joint, and siblings leaving the same
    point touch there too, so for those pairs the first ``ATTACH_CLEARANCE``
    of each limb leaving the shared point is ignored. Limbs growing from the
    head centre necessarily pass through the head and are not tested
    against it.
    """
    poses = limb_poses(m) if poses is None else poses
    ids = [limb.id for limb in m.limbs]
    n = len(ids)
    if n == 0:
        return []
    # rows 0..n-1 full segments, n..2n-1 trimmed near the start, 2n the head
    starts = np.empty((2 * n + 1, 3))
    ends = np.empty((2 * n + 1, 3))
    radii = np.empty(2 * n + 1)
    for k, limb_id in enumerate(ids):
        pose = poses[limb_id]
        starts[k] = pose.p0
        ends[k] = pose.p1
        starts[n + k] = [a + ATTACH_CLEARANCE * d for a, d in zip(pose.p0, pose.direction)]
        ends[n + k] = pose.p1
        radii[k] = radii[n + k] = pose.radius
    starts[2 * n] = ends[2 * n] = (0.0, 0.0, 0.0)
    radii[2 * n] = m.head_radius

    pairs: list[tuple[int, int]] = []
    labels: list[tuple] = []
    limbs = m.limbs
    for a in range(n):
        la = limbs[a]
        if la.parent != HEAD:
            pairs.append((n + a, 2 * n))
            labels.append((HEAD, la.id))
        for b in range(a + 1, n):
            lb = limbs[b]
            if lb.parent == la.id:
                pairs.append((a, n + b))
            elif la.parent == lb.id:
                pairs.append((n + a, b))
            elif la.parent == lb.parent and la.attachment == lb.attachment:
                pairs.append((n + a, n + b))
            else:
                pairs.append((a, b))
            labels.append((la.id, lb.id))
    if not pairs:
        return []
    idx = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    dist = kernels.pair_distances(starts, ends, idx)
    clearance = dist - radii[idx[:, 0]] - radii[idx[:, 1]]
    return [labels[k] for k in np.flatnonzero(clearance < -OVERLAP_TOL)]


def mass_properties(m: Morphology, poses: dict[int, LimbPose] | None = None) -> MassProperties:
    poses = limb_poses(m) if poses is None else poses
    total = head_mass(m)
    moment = [0.0, 0.0, 0.0]
    for limb in m.limbs:
        pose = poses[limb.id]
        mass = limb_mass(limb.params)
        total += mass
        for k in range(3):
            moment[k] += mass * (pose.p0[k] + pose.p1[k]) / 2.0
    return MassProperties(total, (moment[0] / total, moment[1] / total, moment[2] / total))


def lowest_z(m: Morphology, poses: dict[int, LimbPose] | None = None) -> float:
    poses = limb_poses(m) if poses is None else poses
    low = -m.head_radius
    for pose in poses.values():
        low = min(low, min(pose.p0[2], pose.p1[2]) - pose.radius)
    return low


def contact_points(m: Morphology, poses=None, tol: float = GROUND_CONTACT_TOL):
    """Ground-plane projections of the parts resting within ``tol`` of the floor."""
    poses = limb_poses(m) if poses is None else poses
    floor = lowest_z(m, poses)
    pts = []
    if -m.head_radius - floor <= tol:
        pts.append((0.0, 0.0))
    for limb in m.limbs:
        pose = poses[limb.id]
        for p in (pose.p0, pose.p1):
            if p[2] - pose.radius - floor <= tol:
                pts.append((p[0], p[1]))
    return sorted(set(pts))


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> list[tuple[float, float]]:
    """Monotone-chain hull, counter-clockwise, collinear points dropped."""
    pts = sorted(set(map(tuple, points)))
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(vertices) -> float:
    n = len(vertices)
    if n < 3:
        return 0.0
    s = 0.0
    for k in range(n):
        x0, y0 = vertices[k]
        x1, y1 = vertices[(k + 1) % n]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def _point_segment_distance_2d(p, a, b) -> float:
    ax, ay = b[0] - a[0], b[1] - a[1]
    denom = ax * ax + ay * ay
    t = 0.0 if denom == 0 else max(0.0, min(1.0, ((p[0] - a[0]) * ax + (p[1] - a[1]) * ay) / denom))
    return math.hypot(p[0] - a[0] - t * ax, p[1] - a[1] - t * ay)


def signed_boundary_distance(point, hull) -> float:
    """Distance from ``point`` to the hull boundary, positive strictly inside."""
    n = len(hull)
    if n == 1:
        return -math.dist(point, hull[0])
    if n == 2:
        return -_point_segment_distance_2d(point, hull[0], hull[1])
    inside = all(_cross(hull[k], hull[(k + 1) % n], point) > 0 for k in range(n))
    d = min(_point_segment_distance_2d(point, hull[k], hull[(k + 1) % n]) for k in range(n))
    return d if inside else -d


def passive_stability(m: Morphology, poses=None) -> StabilityResult:
    """Static standing test: COM projection strictly inside a non-degenerate support polygon.

    Fewer than three non-collinear contacts is a degenerate support; it is
    reported as unstable with zero area rather than raised.
    """
    poses = limb_poses(m) if poses is None else poses
    contacts = tuple(contact_points(m, poses))
    hull = convex_hull(contacts)
    com = mass_properties(m, poses).com
    com2 = (com[0], com[1])
    area = polygon_area(hull)
    if len(hull) < 3 or area <= 0.0:
        margin = -math.dist(com2, hull[0]) if len(hull) == 1 else signed_boundary_distance(com2, hull)
        return StabilityResult(False, margin, 0.0, True, SupportPolygon(tuple(hull)), contacts)
    margin = signed_boundary_distance(com2, hull)
    return StabilityResult(margin > 0.0, margin, area, False, SupportPolygon(tuple(hull)), contacts)


def descriptors(m: Morphology, poses=None) -> dict[str, float]:
    poses = limb_poses(m) if poses is None else poses
    r_head = m.head_radius
    lo = [-r_head] * 3
    hi = [r_head] * 3
    volume = 4.0 / 3.0 * math.pi * r_head**3
    for limb in m.limbs:
        pose = poses[limb.id]
        r = pose.radius
        for p in (pose.p0, pose.p1):
            for k in range(3):
                lo[k] = min(lo[k], p[k] - r)
                hi[k] = max(hi[k], p[k] + r)
        volume += math.pi * r * r * limb.params.length + 4.0 / 3.0 * math.pi * r**3
    ext = [hi[k] - lo[k] for k in range(3)]
    return {
        "extent_x": ext[0],
        "extent_y": ext[1],
        "extent_z": ext[2],
        "y_min": lo[1],
        "y_max": hi[1],
        "coverage": volume / (ext[0] * ext[1] * ext[2]),
        "mass": mass_properties(m, poses).total_mass,
        "dof": dof_count(m),
    }


__all__ = [
    "CENTER",
    "Capsule",
    "LimbPose",
    "MassProperties",
    "StabilityResult",
    "SupportPolygon",
    "capsule_distance",
    "contact_points",
    "convex_hull",
    "descriptors",
    "direction",
    "limb_capsules",
    "limb_poses",
    "lowest_z",
    "mass_properties",
    "passive_stability",
    "polygon_area",
    "segment_distance",
    "self_intersects",
    "signed_boundary_distance",
]
