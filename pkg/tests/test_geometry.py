from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphevo import geometry
from morphevo.geometry import Capsule, capsule_distance, convex_hull, passive_stability
from morphevo.morphology import new_head, validate

from conftest import body, limb, pair, random_morphologies, tripod
from oracles import brute_sample_error, brute_segment_distance, naive_hull, oracle_stable

coord = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)
point = st.tuples(coord, coord, coord)


class TestCapsuleDistance:
    def test_parallel_unit_segments(self):
        a = Capsule((0, 0, 0), (1, 0, 0), 0.05)
        b = Capsule((0, 1, 0), (1, 1, 0), 0.05)
        assert capsule_distance(a, b) == pytest.approx(0.9, abs=1e-12)

    def test_identical(self):
        a = Capsule((0, 0, 0), (0.3, 0.1, -0.2), 0.05)
        assert capsule_distance(a, a) == pytest.approx(-0.1, abs=1e-12)

    def test_crossing(self):
        a = Capsule((-1, 0, 0), (1, 0, 0), 0.05)
        b = Capsule((0, -1, 0.5), (0, 1, 0.5), 0.05)
        assert capsule_distance(a, b) == pytest.approx(0.4, abs=1e-12)

    def test_endpoint_to_interior(self):
        a = Capsule((0, 0, 0), (1, 0, 0), 0.1)
        b = Capsule((2, 0, 0), (3, 0, 0), 0.1)
        assert capsule_distance(a, b) == pytest.approx(0.8, abs=1e-12)

    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            Capsule((0, 0, 0), (0, 0, 0), 0.05)
        with pytest.raises(ValueError):
            Capsule((0, 0, 0), (1, 0, 0), 0.0)

    @settings(max_examples=200, deadline=None)
    @given(point, point, point, point)
    def test_symmetric_exactly(self, p0, p1, q0, q1):
        d1 = geometry.segment_distance(p0, p1, q0, q1)
        assert d1 == geometry.segment_distance(q0, q1, p0, p1)
        if math.dist(p0, p1) > 1e-3 and math.dist(q0, q1) > 1e-3:
            # shorter segments fall under the kernel's point threshold
            assert geometry.segment_distance(p1, p0, q1, q0) == pytest.approx(d1, abs=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(point, point, point, point, point, st.floats(0, 2 * math.pi))
    def test_rigid_motion_invariance(self, p0, p1, q0, q1, shift, angle):
        c, s = math.cos(angle), math.sin(angle)

        def move(p):
            x, y, z = p
            return (c * x - s * y + shift[0], s * x + c * y + shift[1], z + shift[2])

        d1 = geometry.segment_distance(p0, p1, q0, q1)
        d2 = geometry.segment_distance(move(p0), move(p1), move(q0), move(q1))
        assert d2 == pytest.approx(d1, abs=1e-9)

    @pytest.mark.parametrize("reverse", [False, True])
    def test_near_parallel_shared_endpoint(self, reverse):
        p0, p1 = (0, 0, 0.001953125), (2, 0, 0)
        q0, q1 = (0.001953125, 0, 0.001953125), (2, 0, 0)
        if reverse:
            p0, p1, q0, q1 = p1, p0, q1, q0
        assert geometry.segment_distance(p0, p1, q0, q1) == 0.0

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            p0, p1, q0, q1 = (tuple(rng.uniform(-1, 1, 3)) for _ in range(4))
            exact = geometry.segment_distance(p0, p1, q0, q1)
            approx = brute_segment_distance(p0, p1, q0, q1, samples=2000)
            assert exact <= approx + 1e-12
            assert approx - exact <= brute_sample_error(p0, p1, q0, q1, samples=2000) + 1e-12


class TestSelfIntersection:
    def test_opposite_head_limbs(self):
        assert geometry.self_intersects(body(limb(0, theta=0, phi=90), limb(1, theta=180, phi=90))) == []

    def test_coincident_siblings(self):
        m = body(limb(0, theta=0, phi=135), limb(1, theta=0, phi=135))
        assert geometry.self_intersects(m) == [(0, 1)]

    def test_parent_child_joint_is_allowed(self):
        m = body(limb(0, phi=180), limb(1, parent=0, attachment="end", phi=90))
        assert geometry.self_intersects(m) == []

    def test_child_folding_back_into_parent(self):
        # child from the parent's end pointing straight back up the parent
        m = body(limb(0, phi=90, length=0.4), limb(1, parent=0, attachment="end", theta=180, phi=90, length=0.4))
        # its far end also lands inside the head
        assert geometry.self_intersects(m) == [(0, 1), ("head", 1)]

    def test_dense_sampling_oracle(self):
        """Sampled clearances agree with the analytic ones on random bodies."""
        checked = 0
        for m in random_morphologies(40, seed=13):
            poses = geometry.limb_poses(m)
            ids = [l.id for l in m.limbs]
            for i, a in enumerate(ids):
                for b in ids[i + 1:]:
                    la, lb = m.limb(a), m.limb(b)
                    if la.parent == b or lb.parent == a or (la.parent == lb.parent and la.attachment == lb.attachment):
                        continue
                    pa, pb = poses[a], poses[b]
                    exact = geometry.segment_distance(pa.p0, pa.p1, pb.p0, pb.p1) - 0.1
                    approx = brute_segment_distance(pa.p0, pa.p1, pb.p0, pb.p1, samples=400) - 0.1
                    err = brute_sample_error(pa.p0, pa.p1, pb.p0, pb.p1, samples=400)
                    assert exact <= approx + 1e-12 and approx - exact <= err + 1e-12
                    # valid bodies never overlap outside shared attachments
                    assert exact >= -1e-6
                    checked += 1
        assert checked > 100


class TestMassProperties:
    def test_head_only(self):
        mp = geometry.mass_properties(new_head(500))
        assert mp.total_mass == pytest.approx(2.094395, abs=1e-6)
        assert mp.com == (0.0, 0.0, 0.0)

    def test_straight_down_limb(self):
        m = body(limb(0, phi=180, length=0.2))
        mp = geometry.mass_properties(m)
        limb_mass = 500 * (math.pi * 0.05**2 * 0.2 + 4 / 3 * math.pi * 0.05**3)
        assert mp.total_mass == pytest.approx(2.0943951 + limb_mass, abs=1e-6)
        assert mp.com[1] == 0.0
        assert mp.com[2] == pytest.approx(limb_mass * -0.1 / mp.total_mass, abs=1e-12)

    def test_density_linearity(self):
        m = tripod()
        heavy = body(*[limb(l.id, l.parent, l.attachment, l.params.length, 1000, l.params.theta,
                            l.params.phi, l.joint, l.mirror) for l in m.limbs],
                     head_density=1000, density=1000)
        a, b = geometry.mass_properties(m), geometry.mass_properties(heavy)
        assert b.total_mass == pytest.approx(2 * a.total_mass, rel=1e-12)
        assert b.com == pytest.approx(a.com, abs=1e-12)


class TestStability:
    def test_tripod_is_stable(self):
        res = passive_stability(tripod())
        assert res.stable and not res.degenerate
        assert len(res.support.vertices) == 3
        com = geometry.mass_properties(tripod()).com
        assert oracle_stable(res.contacts, com[:2])
        # margin against an independent edge-distance computation
        hull = naive_hull(res.contacts)
        dists = []
        for k in range(3):
            (x1, y1), (x2, y2) = hull[k], hull[(k + 1) % 3]
            dists.append(abs((x2 - x1) * (y1 - com[1]) - (x1 - com[0]) * (y2 - y1)) / math.hypot(x2 - x1, y2 - y1))
        assert res.margin == pytest.approx(min(dists), abs=1e-12)

    def test_single_vertical_limb_is_degenerate(self):
        res = passive_stability(body(limb(0, phi=180)))
        assert res.degenerate and not res.stable and res.area == 0.0

    def test_all_feet_behind_the_body_tips_over(self):
        # a horizontal tail carrying three legs; every foot is behind x = -0.4
        m = body(
            limb(0, theta=180, phi=90, length=0.4),
            *pair(1, 2, 90, parent=0, attachment="end", phi=135, length=0.4),
            limb(3, parent=0, attachment="end", theta=0, phi=135, length=0.4),
        )
        assert validate(m).ok
        res = passive_stability(m)
        assert not res.degenerate and not res.stable
        com = geometry.mass_properties(m).com
        assert not oracle_stable(res.contacts, com[:2])
        # nearest support edge is the line x = -0.4
        assert res.margin == pytest.approx(-(com[0] + 0.4), abs=1e-12)

    def test_random_bodies_match_oracle(self):
        for m in random_morphologies(200, seed=21):
            res = passive_stability(m)
            com = geometry.mass_properties(m).com
            assert res.stable == oracle_stable(res.contacts, com[:2])

    def test_hull_drops_collinear_points(self):
        assert convex_hull([(0, 0), (1, 0), (2, 0), (1, 1)]) == [(0, 0), (2, 0), (1, 1)]


class TestDescriptors:
    def test_head_only_coverage(self):
        d = geometry.descriptors(new_head(500))
        assert d["coverage"] == pytest.approx(math.pi / 6, abs=1e-12)
        assert d["extent_x"] == d["extent_y"] == d["extent_z"] == pytest.approx(0.2)

    def test_random_bodies(self):
        for m in random_morphologies(100, seed=2):
            d = geometry.descriptors(m)
            assert 0 < d["coverage"] <= 1
            assert abs(d["y_min"] + d["y_max"]) <= 1e-6
            assert d["mass"] == geometry.mass_properties(m).total_mass
