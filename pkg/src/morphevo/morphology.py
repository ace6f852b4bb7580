"""The body-plan genotype: a spherical head with a tree of capsule limbs.

Frame convention: +x is forward, +z is up, the sagittal plane is y = 0.
A limb's orientation ``(theta, phi)`` is relative to its parent's heading:
the world azimuth of a limb is the sum of the azimuths along its path from
the head, while ``phi`` is always the polar angle from +z. Because phi is
drawn from {90, 135, 180} every limb points horizontally or downward.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterator

from .constants import (
    COM_SAGITTAL_TOL,
    DENSITIES,
    GEARS,
    HEAD_RADIUS,
    JOINT_AXES,
    JOINT_LIMITS,
    LIMB_LENGTHS,
    LIMB_RADIUS,
    MAX_LIMBS,
    MIN_LIMBS,
    PHIS,
    SAGITTAL_THETAS,
    THETAS,
)

HEAD = "head"
CENTER, MID, END = "center", "mid", "end"


class DomainError(ValueError):
    """A value lies outside its design-space domain."""


class MorphologyParseError(ValueError):
    """Serialized morphology is structurally malformed."""


@dataclass(frozen=True)
class AttachmentSite:
    limb: int | str  # limb id, or HEAD
    point: str  # CENTER for the head, MID or END for limbs


HEAD_SITE = AttachmentSite(HEAD, CENTER)


@dataclass(frozen=True)
class LimbParams:
    length: float
    density: int
    theta: int
    phi: int
    radius: float = LIMB_RADIUS


@dataclass(frozen=True)
class JointSpec:
    """Hinge axes in the child frame with per-axis limits (degrees) and gear."""

    axes: tuple[str, ...]
    limits: tuple[tuple[int, int], ...]
    gears: tuple[int, ...]

    @property
    def dof(self) -> int:
        return len(self.axes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "axes": list(self.axes),
            "limits": [list(lim) for lim in self.limits],
            "gears": list(self.gears),
        }


@dataclass(frozen=True)
class Limb:
    id: int
    parent: int | str
    attachment: str
    params: LimbParams
    joint: JointSpec
    mirror: int | None = None

    @property
    def site(self) -> AttachmentSite:
        return AttachmentSite(self.parent, self.attachment)

    def to_dict(self) -> dict[str, Any]:
        p = self.params
        return {
            "id": self.id,
            "parent": self.parent,
            "attachment": self.attachment,
            "params": {
                "radius": p.radius,
                "length": p.length,
                "density": p.density,
                "theta": p.theta,
                "phi": p.phi,
            },
            "joint": self.joint.to_dict(),
            "mirror": self.mirror,
        }


@dataclass(frozen=True)
class Morphology:
    head_density: int
    shared_limb_density: int | None = None
    limbs: tuple[Limb, ...] = ()
    head_radius: float = HEAD_RADIUS
    _index: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {limb.id: limb for limb in self.limbs})

    def __len__(self) -> int:
        return len(self.limbs)

    def __iter__(self) -> Iterator[Limb]:
        return iter(self.limbs)

    def limb(self, limb_id: int) -> Limb:
        return self._index[limb_id]

    def has_limb(self, limb_id) -> bool:
        return limb_id in self._index

    def children(self, parent: int | str) -> list[Limb]:
        return [limb for limb in self.limbs if limb.parent == parent]

    def leaves(self) -> list[Limb]:
        parents = {limb.parent for limb in self.limbs}
        return [limb for limb in self.limbs if limb.id not in parents]

    def next_limb_id(self) -> int:
        return max((limb.id for limb in self.limbs), default=-1) + 1

    def is_sagittal(self, node: int | str) -> bool:
        """True for the head and for unpaired limbs."""
        return node == HEAD or self.limb(node).mirror is None

    def with_limbs(self, limbs, **changes) -> Morphology:
        limbs = tuple(sorted(limbs, key=lambda limb: limb.id))
        return replace(self, limbs=limbs, **changes)

    def units(self) -> list[tuple[int, ...]]:
        """Limbs grouped as mutation units: a sagittal limb or a mirrored pair."""
        out, seen = [], set()
        for limb in self.limbs:
            if limb.id in seen:
                continue
            if limb.mirror is not None and self.has_limb(limb.mirror):
                pair = tuple(sorted((limb.id, limb.mirror)))
                seen.update(pair)
                out.append(pair)
            else:
                seen.add(limb.id)
                out.append((limb.id,))
        return out

    # serialization

    def to_dict(self) -> dict[str, Any]:
        return {
            "head": {"radius": self.head_radius, "density": self.head_density},
            "shared_limb_density": self.shared_limb_density,
            "limbs": [limb.to_dict() for limb in self.limbs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Morphology:
        try:
            head = data["head"]
            limbs = tuple(_limb_from_dict(d) for d in data["limbs"])
            m = cls(
                head_density=_as_int(head["density"], "head.density"),
                shared_limb_density=(
                    None
                    if data["shared_limb_density"] is None
                    else _as_int(data["shared_limb_density"], "shared_limb_density")
                ),
                limbs=tuple(sorted(limbs, key=lambda limb: limb.id)),
                head_radius=float(head["radius"]),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise MorphologyParseError(f"malformed morphology: {exc!r}") from exc
        if len(m._index) != len(m.limbs):
            raise MorphologyParseError("duplicate limb ids")
        return m

    @classmethod
    def from_json(cls, text: str) -> Morphology:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MorphologyParseError(str(exc)) from exc
        if not isinstance(data, dict):
            raise MorphologyParseError("morphology must be a JSON object")
        return cls.from_dict(data)


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise MorphologyParseError(f"{name} must be a number")
    if float(value) != int(value):
        raise MorphologyParseError(f"{name} must be integral")
    return int(value)


def _limb_from_dict(d: dict[str, Any]) -> Limb:
    p = d["params"]
    j = d["joint"]
    parent = d["parent"]
    if parent != HEAD:
        parent = _as_int(parent, "limb.parent")
    if d["attachment"] not in (CENTER, MID, END):
        raise MorphologyParseError(f"unknown attachment {d['attachment']!r}")
    mirror = d["mirror"]
    return Limb(
        id=_as_int(d["id"], "limb.id"),
        parent=parent,
        attachment=d["attachment"],
        params=LimbParams(
            length=float(p["length"]),
            density=_as_int(p["density"], "limb.density"),
            theta=_as_int(p["theta"], "limb.theta"),
            phi=_as_int(p["phi"], "limb.phi"),
            radius=float(p["radius"]),
        ),
        joint=JointSpec(
            axes=tuple(str(a) for a in j["axes"]),
            limits=tuple((_as_int(lo, "limit"), _as_int(hi, "limit")) for lo, hi in j["limits"]),
            gears=tuple(_as_int(g, "gear") for g in j["gears"]),
        ),
        mirror=None if mirror is None else _as_int(mirror, "limb.mirror"),
    )


def new_head(head_density: int) -> Morphology:
    """Limbless root; a construction intermediate that fails ``validate``."""
    if head_density not in DENSITIES:
        raise DomainError(f"head density {head_density} not in {DENSITIES}")
    return Morphology(head_density=head_density)


def mirror_theta(theta: int) -> int:
    return (360 - theta) % 360


def attachment_sites(m: Morphology) -> list[tuple[AttachmentSite, ...]]:
    """Sites where new limbs may attach.

    Sites on a mirrored pair come back as a 2-tuple (lower id first) that a
    grow must use together; every other entry is a 1-tuple.
    """
    sites: list[tuple[AttachmentSite, ...]] = [(HEAD_SITE,)]
    for unit in m.units():
        for point in (MID, END):
            sites.append(tuple(AttachmentSite(i, point) for i in unit))
    return sites


def dof_count(m: Morphology) -> int:
    return sum(limb.joint.dof for limb in m.limbs)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def add(self, code: str, message: str) -> None:
        self.violations.append(Violation(code, message))

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(f"{v.code}: {v.message}" for v in self.violations)


def _check_tree(m: Morphology, report: ValidationReport) -> bool:
    ok = True
    for limb in m.limbs:
        if limb.parent == HEAD:
            if limb.attachment != CENTER:
                report.add("tree", f"limb {limb.id} attaches to head at {limb.attachment!r}")
                ok = False
        elif not m.has_limb(limb.parent):
            report.add("tree", f"limb {limb.id} has unknown parent {limb.parent}")
            ok = False
        elif limb.attachment not in (MID, END):
            report.add("tree", f"limb {limb.id} attaches to a limb at {limb.attachment!r}")
            ok = False
    if not ok:
        return False
    for limb in m.limbs:
        seen = {limb.id}
        node = limb.parent
        while node != HEAD:
            if node in seen:
                report.add("tree", f"cycle through limb {limb.id}")
                return False
            seen.add(node)
            node = m.limb(node).parent
    return True


def _check_domains(m: Morphology, report: ValidationReport) -> None:
    if m.head_density not in DENSITIES:
        report.add("domain", f"head density {m.head_density}")
    if m.head_radius != HEAD_RADIUS:
        report.add("domain", f"head radius {m.head_radius}")
    for limb in m.limbs:
        p, j = limb.params, limb.joint
        if p.radius != LIMB_RADIUS:
            report.add("domain", f"limb {limb.id} radius {p.radius}")
        if p.length not in LIMB_LENGTHS:
            report.add("domain", f"limb {limb.id} length {p.length}")
        if p.density not in DENSITIES:
            report.add("domain", f"limb {limb.id} density {p.density}")
        if p.theta not in THETAS:
            report.add("domain", f"limb {limb.id} theta {p.theta}")
        if p.phi not in PHIS:
            report.add("domain", f"limb {limb.id} phi {p.phi}")
        if j.axes not in JOINT_AXES:
            report.add("domain", f"limb {limb.id} joint axes {j.axes}")
        if len(j.limits) != len(j.axes) or len(j.gears) != len(j.axes):
            report.add("domain", f"limb {limb.id} joint has mismatched per-axis lists")
        for lim in j.limits:
            if tuple(lim) not in JOINT_LIMITS:
                report.add("domain", f"limb {limb.id} joint limit {lim}")
        for g in j.gears:
            if g not in GEARS:
                report.add("domain", f"limb {limb.id} gear {g}")


def _check_symmetry(m: Morphology, report: ValidationReport) -> None:
    for limb in m.limbs:
        p = limb.params
        if limb.mirror is None:
            if p.theta not in SAGITTAL_THETAS:
                report.add("symmetry", f"unpaired limb {limb.id} has off-sagittal theta {p.theta}")
            if limb.parent != HEAD and m.has_limb(limb.parent) and not m.is_sagittal(limb.parent):
                report.add("symmetry", f"unpaired limb {limb.id} hangs off a mirrored limb")
            continue
        if limb.mirror == limb.id or not m.has_limb(limb.mirror):
            report.add("symmetry", f"limb {limb.id} mirror {limb.mirror} missing")
            continue
        twin = m.limb(limb.mirror)
        if twin.mirror != limb.id:
            report.add("symmetry", f"limbs {limb.id}/{twin.id} mirror links not mutual")
            continue
        if limb.id > twin.id:
            continue
        q = twin.params
        if (p.length, p.density, p.phi, p.radius) != (q.length, q.density, q.phi, q.radius):
            report.add("symmetry", f"twins {limb.id}/{twin.id} differ in shape")
        if q.theta != mirror_theta(p.theta):
            report.add("symmetry", f"twins {limb.id}/{twin.id} azimuths {p.theta}/{q.theta} not mirrored")
        if limb.joint != twin.joint:
            report.add("symmetry", f"twins {limb.id}/{twin.id} joints differ")
        if limb.attachment != twin.attachment:
            report.add("symmetry", f"twins {limb.id}/{twin.id} attach at different points")
        if limb.parent == HEAD or twin.parent == HEAD or not (
            m.has_limb(limb.parent) and m.has_limb(twin.parent)
        ):
            if limb.parent != twin.parent:
                report.add("symmetry", f"twins {limb.id}/{twin.id} have unrelated parents")
            continue
        if m.is_sagittal(limb.parent):
            if twin.parent != limb.parent:
                report.add("symmetry", f"twins {limb.id}/{twin.id} have unrelated parents")
        elif m.limb(limb.parent).mirror != twin.parent:
            report.add("symmetry", f"twins {limb.id}/{twin.id} parents are not mirrored")


def validate(m: Morphology, geometric: bool = True) -> ValidationReport:
    """Check every structural and geometric invariant; empty report means valid."""
    report = ValidationReport()
    n = len(m.limbs)
    if not MIN_LIMBS <= n <= MAX_LIMBS:
        report.add("limb_count", f"limb count {n} outside {MIN_LIMBS}..{MAX_LIMBS}")
    if n and any(limb.params.density != m.shared_limb_density for limb in m.limbs):
        report.add("density_uniformity", f"limb densities differ from shared {m.shared_limb_density}")
    _check_domains(m, report)
    tree_ok = _check_tree(m, report)
    _check_symmetry(m, report)
    if geometric and tree_ok and n:
        from . import geometry

        com = geometry.mass_properties(m).com
        if abs(com[1]) > COM_SAGITTAL_TOL:
            report.add("com_sagittal", f"|COM_y| = {abs(com[1]):.3g} m")
        for a, b in geometry.self_intersects(m):
            report.add("self_intersection", f"{a} overlaps {b}")
    return report


def limb_mass(params: LimbParams) -> float:
    r = params.radius
    return params.density * (math.pi * r * r * params.length + 4.0 / 3.0 * math.pi * r**3)


def head_mass(m: Morphology) -> float:
    return m.head_density * 4.0 / 3.0 * math.pi * m.head_radius**3
