"""Mutation operators over the limb-tree genotype.

Every operator takes a parent morphology and an explicit random stream and
returns a ``MutationOutcome`` whose child is valid and differs from the
parent. Operators that can produce invalid geometry redraw until a valid
child appears or the retry cap is hit.
"""

from __future__ import annotations

import enum
from collections.abc import Mapping
from dataclasses import dataclass

from .constants import (
    COM_SAGITTAL_TOL,
    DENSITIES,
    GEARS,
    JOINT_AXES,
    JOINT_LIMITS,
    LIMB_LENGTHS,
    MAX_LIMBS,
    MUTATION_RETRIES,
    PHIS,
    SAGITTAL_THETAS,
    THETAS,
)
from .geometry import limb_poses, mass_properties, self_intersects
from .morphology import (
    HEAD,
    JointSpec,
    Limb,
    LimbParams,
    Morphology,
    attachment_sites,
    mirror_theta,
    new_head,
)
from .rng import Stream


class MutationError(Exception):
    pass


class CapacityError(MutationError):
    """Growing would exceed the limb cap."""


class NoDeletableLeaf(MutationError):
    """No leaf can be removed without leaving a limbless body."""


class RetriesExhausted(MutationError):
    """No valid child was found within the retry cap."""


class MutationOp(str, enum.Enum):
    GROW_LIMBS = "GrowLimbs"
    DELETE_LIMBS = "DeleteLimbs"
    MUTATE_LIMB_PARAMS = "MutateLimbParams"
    MUTATE_DENSITY = "MutateDensity"
    MUTATE_DOF = "MutateDoF"
    MUTATE_GEAR = "MutateGear"
    MUTATE_JOINT_ANGLE = "MutateJointAngle"


JOINT_OPS = (MutationOp.MUTATE_DOF, MutationOp.MUTATE_GEAR, MutationOp.MUTATE_JOINT_ANGLE)


@dataclass(frozen=True)
class MutationOutcome:
    child: Morphology
    op: MutationOp
    parent_hash: str
    rng_draws: int


def geometry_ok(m: Morphology) -> bool:
    """COM on the sagittal plane and no self-intersection."""
    poses = limb_poses(m)
    if abs(mass_properties(m, poses).com[1]) > COM_SAGITTAL_TOL:
        return False
    return not self_intersects(m, poses)


def _outcome(parent: Morphology, child: Morphology, op: MutationOp, rng: Stream, start: int):
    return MutationOutcome(child, op, parent.digest(), rng.draws - start)


def sample_joint(rng: Stream) -> JointSpec:
    axes = rng.choice(JOINT_AXES)
    limits, gears = [], []
    for _ in axes:
        limits.append(rng.choice(JOINT_LIMITS))
        gears.append(rng.choice(GEARS))
    return JointSpec(tuple(axes), tuple(limits), tuple(gears))


def grow_limbs(
    m: Morphology,
    rng: Stream,
    max_attempts: int = MUTATION_RETRIES,
    max_new: int = 2,
) -> MutationOutcome:
    """Attach one sagittal limb or a mirrored pair at a uniformly drawn site.

    Draw order per attempt: site, theta, phi, length, limb density (only when
    the body has no limbs yet), joint axes, then limit and gear per axis.
    """
    n = len(m)
    if n >= MAX_LIMBS:
        raise CapacityError(f"morphology already has {n} limbs")
    start = rng.draws
    for _ in range(max_attempts):
        group = rng.choice(attachment_sites(m))
        theta = rng.choice(THETAS)
        phi = rng.choice(PHIS)
        length = rng.choice(LIMB_LENGTHS)
        if n == 0 or m.shared_limb_density is None:
            density = rng.choice(DENSITIES)
        else:
            density = m.shared_limb_density
        joint = sample_joint(rng)
        paired = len(group) == 2 or theta not in SAGITTAL_THETAS
        count = 2 if paired else 1
        if n + count > MAX_LIMBS or count > max_new:
            continue
        nid = m.next_limb_id()
        params = LimbParams(length=length, density=density, theta=theta, phi=phi)
        mirrored = LimbParams(length=length, density=density, theta=mirror_theta(theta), phi=phi)
        if not paired:
            site = group[0]
            new = [Limb(nid, site.limb, site.point, params, joint)]
        else:
            left, right = (group[0], group[1]) if len(group) == 2 else (group[0], group[0])
            new = [
                Limb(nid, left.limb, left.point, params, joint, mirror=nid + 1),
                Limb(nid + 1, right.limb, right.point, mirrored, joint, mirror=nid),
            ]
        child = m.with_limbs(m.limbs + tuple(new), shared_limb_density=density)
        if geometry_ok(child):
            return _outcome(m, child, MutationOp.GROW_LIMBS, rng, start)
    raise RetriesExhausted(f"grow_limbs found no valid child in {max_attempts} attempts")


def deletable_units(m: Morphology) -> list[tuple[int, ...]]:
    leaves = {limb.id for limb in m.leaves()}
    return [u for u in m.units() if set(u) <= leaves and len(m) - len(u) >= 1]


def delete_limbs(m: Morphology, rng: Stream) -> MutationOutcome:
    """Remove a leaf limb, or a mirrored leaf pair together."""
    units = deletable_units(m)
    if not units:
        raise NoDeletableLeaf("deleting any leaf would leave no limbs")
    start = rng.draws
    unit = rng.choice(units)
    child = m.with_limbs([limb for limb in m.limbs if limb.id not in unit])
    return _outcome(m, child, MutationOp.DELETE_LIMBS, rng, start)


def _replace_unit(m: Morphology, unit, make) -> Morphology:
    first = unit[0]
    limbs = []
    for limb in m.limbs:
        if limb.id in unit:
            limb = make(limb, limb.id == first)
        limbs.append(limb)
    return m.with_limbs(limbs)


def mutate_limb_params(
    m: Morphology, rng: Stream, max_attempts: int = MUTATION_RETRIES
) -> MutationOutcome:
    """Resample length and orientation of one limb or mirrored pair.

    Draw order per attempt: unit, length, theta, phi. An unpaired limb only
    draws sagittal azimuths.
    """
    if not m.limbs:
        raise MutationError("no limbs to mutate")
    start = rng.draws
    for _ in range(max_attempts):
        unit = rng.choice(m.units())
        length = rng.choice(LIMB_LENGTHS)
        theta = rng.choice(THETAS if len(unit) == 2 else SAGITTAL_THETAS)
        phi = rng.choice(PHIS)

        def make(limb: Limb, first: bool) -> Limb:
            t = theta if first else mirror_theta(theta)
            p = LimbParams(length, limb.params.density, t, phi, limb.params.radius)
            return Limb(limb.id, limb.parent, limb.attachment, p, limb.joint, limb.mirror)

        child = _replace_unit(m, unit, make)
        if child == m:
            continue
        if geometry_ok(child):
            return _outcome(m, child, MutationOp.MUTATE_LIMB_PARAMS, rng, start)
    raise RetriesExhausted(f"mutate_limb_params found no valid child in {max_attempts} attempts")


def mutate_density(m: Morphology, rng: Stream) -> MutationOutcome:
    """Replace head density or the shared limb density (fair coin) by another value."""
    start = rng.draws
    target = rng.choice(("head", "limbs"))
    if target == "limbs" and not m.limbs:
        target = "head"
    if target == "head":
        value = rng.choice([d for d in DENSITIES if d != m.head_density])
        child = m.with_limbs(m.limbs, head_density=value)
    else:
        value = rng.choice([d for d in DENSITIES if d != m.shared_limb_density])
        limbs = [
            Limb(
                limb.id,
                limb.parent,
                limb.attachment,
                LimbParams(limb.params.length, value, limb.params.theta, limb.params.phi, limb.params.radius),
                limb.joint,
                limb.mirror,
            )
            for limb in m.limbs
        ]
        child = m.with_limbs(limbs, shared_limb_density=value)
    return _outcome(m, child, MutationOp.MUTATE_DENSITY, rng, start)


def mutate_joint(m: Morphology, rng: Stream, kind: MutationOp) -> MutationOutcome:
    """Change the axes, one gear, or one limit pair of a limb (or pair) joint.

    Axes that survive a DoF change keep their limit and gear; new axes draw
    fresh ones.
    """
    if kind not in JOINT_OPS:
        raise ValueError(f"{kind} is not a joint mutation")
    if not m.limbs:
        raise MutationError("no joints to mutate")
    start = rng.draws
    unit = rng.choice(m.units())
    old = m.limb(unit[0]).joint
    if kind is MutationOp.MUTATE_DOF:
        axes = rng.choice([a for a in JOINT_AXES if a != old.axes])
        limits, gears = [], []
        for ax in axes:
            if ax in old.axes:
                k = old.axes.index(ax)
                limits.append(old.limits[k])
                gears.append(old.gears[k])
            else:
                limits.append(rng.choice(JOINT_LIMITS))
                gears.append(rng.choice(GEARS))
        joint = JointSpec(tuple(axes), tuple(limits), tuple(gears))
    else:
        axis = rng.choice(old.axes)
        k = old.axes.index(axis)
        limits, gears = list(old.limits), list(old.gears)
        if kind is MutationOp.MUTATE_GEAR:
            gears[k] = rng.choice([g for g in GEARS if g != old.gears[k]])
        else:
            limits[k] = rng.choice([lim for lim in JOINT_LIMITS if lim != old.limits[k]])
        joint = JointSpec(old.axes, tuple(limits), tuple(gears))

    def make(limb: Limb, first: bool) -> Limb:
        return Limb(limb.id, limb.parent, limb.attachment, limb.params, joint, limb.mirror)

    return _outcome(m, _replace_unit(m, unit, make), kind, rng, start)


def applicable_ops(m: Morphology) -> list[MutationOp]:
    ops = []
    if len(m) < MAX_LIMBS:
        ops.append(MutationOp.GROW_LIMBS)
    if deletable_units(m):
        ops.append(MutationOp.DELETE_LIMBS)
    if m.limbs:
        ops.append(MutationOp.MUTATE_LIMB_PARAMS)
    ops.append(MutationOp.MUTATE_DENSITY)
    if m.limbs:
        ops.extend(JOINT_OPS)
    return ops


def apply_op(m: Morphology, rng: Stream, op: MutationOp, max_attempts: int = MUTATION_RETRIES):
    if op is MutationOp.GROW_LIMBS:
        return grow_limbs(m, rng, max_attempts)
    if op is MutationOp.DELETE_LIMBS:
        return delete_limbs(m, rng)
    if op is MutationOp.MUTATE_LIMB_PARAMS:
        return mutate_limb_params(m, rng, max_attempts)
    if op is MutationOp.MUTATE_DENSITY:
        return mutate_density(m, rng)
    return mutate_joint(m, rng, op)


def mutate(
    m: Morphology,
    rng: Stream,
    weights: Mapping[str, float] | None = None,
    max_attempts: int = MUTATION_RETRIES,
) -> MutationOutcome:
    """Apply one operator drawn from the applicable set (uniform unless weighted)."""
    ops = applicable_ops(m)
    if weights:
        w = [float(weights.get(op.value, 1.0)) for op in ops]
        if sum(w) <= 0:
            raise ValueError("mutation weights sum to zero over applicable operators")
    else:
        w = [1.0] * len(ops)
    start = rng.draws
    op = rng.weighted_choice(ops, w)
    outcome = apply_op(m, rng, op, max_attempts)
    return MutationOutcome(outcome.child, op, outcome.parent_hash, rng.draws - start)


def mutate_with_redraws(
    m: Morphology,
    rng: Stream,
    weights: Mapping[str, float] | None = None,
    max_attempts: int = MUTATION_RETRIES,
    max_redraws: int = 16,
) -> MutationOutcome:
    """``mutate``, drawing a fresh operator each time one exhausts its retries."""
    for _ in range(max_redraws):
        try:
            return mutate(m, rng, weights, max_attempts)
        except RetriesExhausted:
            continue
    raise RetriesExhausted(f"no valid child after {max_redraws} operator draws")


def sample_initial_morphology(
    rng: Stream,
    limb_range: tuple[int, int] = (3, MAX_LIMBS),
    max_attempts: int = MUTATION_RETRIES,
    max_restarts: int = 100,
) -> Morphology:
    """Draw a target limb count, then grow from a bare head until it is reached."""
    lo, hi = limb_range
    for _ in range(max_restarts):
        target = rng.choice(range(lo, hi + 1))
        m = new_head(rng.choice(DENSITIES))
        try:
            while len(m) < target:
                m = grow_limbs(m, rng, max_attempts, max_new=target - len(m)).child
        except RetriesExhausted:
            continue
        return m
    raise RetriesExhausted(f"no initial morphology after {max_restarts} restarts")


__all__ = [
    "HEAD",
    "CapacityError",
    "JOINT_OPS",
    "MutationError",
    "MutationOp",
    "MutationOutcome",
    "NoDeletableLeaf",
    "RetriesExhausted",
    "applicable_ops",
    "apply_op",
    "delete_limbs",
    "deletable_units",
    "geometry_ok",
    "grow_limbs",
    "mutate",
    "mutate_density",
    "mutate_joint",
    "mutate_limb_params",
    "mutate_with_redraws",
    "sample_initial_morphology",
    "sample_joint",
]
