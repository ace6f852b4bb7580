from __future__ import annotations

import math

import numpy as np
import pytest

from morphevo.terrain import (
    FLAT,
    HILLS,
    RUBBLE,
    STEPS,
    Heightfield,
    ObstacleSegment,
    TerrainSpec,
    generate,
    heightmap_observation,
    rasterize,
    read_heightfield_csv,
    sample_height,
    write_heightfield_csv,
)

STEP_PARAMS = {"n_steps": 8, "step_height": 0.2}


def step_course():
    """Two metres of flat ground, then an 8 m staircase with 1 m treads."""
    segs = [
        ObstacleSegment(FLAT, 0.0, 2.0, 2.0),
        ObstacleSegment(STEPS, 2.0, 8.0, 8.0, STEP_PARAMS),
        ObstacleSegment(FLAT, 10.0, 10.0, 10.0),
    ]
    return rasterize(segs, (20.0, 10.0), 0.1)


class TestGenerate:
    def test_flat_arena_is_zero(self):
        segs, hf = generate(TerrainSpec("FT", seed=3))
        assert [s.kind for s in segs] == [FLAT]
        assert hf.shape == (1501, 1501)
        assert not hf.grid.any()

    @pytest.mark.parametrize("env, shape", [("VT", (1001, 1001)), ("MVT", (401, 601))])
    def test_grid_matches_arena(self, env, shape):
        assert generate(TerrainSpec(env, seed=1))[1].shape == shape

    def test_unknown_env(self):
        with pytest.raises(ValueError):
            TerrainSpec("XT")

    @pytest.mark.parametrize("seed", range(20))
    def test_segment_ranges(self, seed):
        segs, hf = generate(TerrainSpec("VT", seed=seed))
        assert math.isclose(sum(s.length for s in segs), 100.0, abs_tol=1e-9)
        for a, b in zip(segs, segs[1:]):
            assert b.start == pytest.approx(a.start + a.length, abs=1e-9)
            assert (a.kind == FLAT) != (b.kind == FLAT)
        assert [s.truncated for s in segs].count(True) <= 1
        for s in segs:
            if s.kind == FLAT:
                assert 1.0 <= s.nominal_length <= 3.0
            else:
                assert 4.0 <= s.nominal_length <= 8.0
            if s.kind == HILLS:
                assert 0.6 <= s.params["amplitude"] <= 1.2
            if s.kind == RUBBLE:
                assert all(0.2 <= h <= 0.3 for h in s.params["clip_heights"])
        assert np.isfinite(hf.grid).all()
        # profile is constant along y
        assert (hf.grid == hf.grid[0]).all()

    def test_step_risers(self):
        seg = ObstacleSegment(STEPS, 0.0, 8.0, 8.0, STEP_PARAMS)
        risers = seg.risers()
        assert len(risers) == 8
        assert all(abs(abs(r) - 0.2) <= 1e-9 for r in risers)
        assert [r > 0 for r in risers] == [True] * 4 + [False] * 4

    def test_step_heights_and_continuity(self):
        x = np.linspace(0, 8, 801)
        h = ObstacleSegment(STEPS, 0.0, 8.0, 8.0, STEP_PARAMS).profile(x)
        assert set(np.round(h, 12)) <= {0.2, 0.4, 0.6, 0.8}
        hill = ObstacleSegment(HILLS, 0.0, 5.0, 5.0, {"amplitude": 0.9}).profile(np.array([0.0, 2.5, 5.0]))
        assert hill == pytest.approx([0.0, 0.9, 0.0], abs=1e-12)

    def test_rubble_bounded_by_clip(self):
        clips = [0.2, 0.3, 0.25]
        seg = ObstacleSegment(RUBBLE, 0.0, 1.8, 1.8, {"period": 0.6, "peak": 0.4, "clip_heights": clips})
        h = seg.profile(np.linspace(0, 1.8, 181))
        assert h.min() >= 0.0 and h.max() <= 0.3 + 1e-12

    def test_deterministic(self):
        a = generate(TerrainSpec("VT", seed=7))
        b = generate(TerrainSpec("VT", seed=7))
        assert a[0] == b[0]
        assert a[1].grid.tobytes() == b[1].grid.tobytes()
        assert generate(TerrainSpec("VT", seed=8))[1].grid.tobytes() != a[1].grid.tobytes()


class TestSampleHeight:
    @pytest.fixture
    def ramp(self):
        grid = np.array([[0.0, 0.2, 0.4], [1.0, 1.2, 1.4]])
        return Heightfield(1.0, (2.0, 1.0), grid)

    def test_grid_aligned(self, ramp):
        assert sample_height(ramp, 1.0, 1.0) == 1.2

    def test_midpoint(self, ramp):
        assert sample_height(ramp, 0.5, 0.0) == pytest.approx(0.1, abs=1e-15)
        assert sample_height(ramp, 0.5, 0.5) == pytest.approx(0.6, abs=1e-15)

    def test_clamps(self, ramp):
        assert sample_height(ramp, -5.0, -5.0) == 0.0
        assert sample_height(ramp, 9.0, 0.0) == 0.4
        assert sample_height(ramp, 9.0, 9.0) == 1.4


class TestObservation:
    def test_length_and_flat(self):
        _, hf = generate(TerrainSpec("FT"))
        obs = heightmap_observation(hf, 75.0, 75.0, 0.7)
        assert obs.shape == (99,)
        assert not obs.any()

    def test_step_up_ahead(self):
        hf = step_course()
        obs = heightmap_observation(hf, 1.5, 5.0, 0.0).reshape(11, 9)
        along = [-1.0, -0.5, -0.25, 0, 0.25, 0.5, 1.0, 1.5, 2.25, 3.0, 4.0]
        for row, a in enumerate(along):
            x = 1.5 + a
            if x < 1.9:
                expected = 0.0
            elif 2.1 <= x < 2.9:
                expected = 0.2
            elif 3.1 <= x < 3.9:
                expected = 0.4
            elif 4.1 <= x < 4.9:
                expected = 0.6
            else:
                continue  # bilinear blend across a riser
            assert obs[row] == pytest.approx(np.full(9, expected), abs=1e-12)

    def test_relative_to_root(self):
        hf = step_course()
        obs = heightmap_observation(hf, 2.5, 5.0, 0.0, root_height=0.0)
        assert obs.reshape(11, 9)[3] == pytest.approx(np.full(9, 0.2), abs=1e-12)

    def test_half_turn_mirrors_rows(self):
        hf = step_course()
        ahead = heightmap_observation(hf, 5.0, 5.0, 0.0).reshape(11, 9)
        mirrored = Heightfield(hf.resolution, hf.arena, hf.grid[:, ::-1])
        behind = heightmap_observation(mirrored, 15.0, 5.0, math.pi).reshape(11, 9)
        assert behind == pytest.approx(ahead, abs=1e-9)

    def test_half_turn_on_the_same_course(self):
        hf = step_course()
        fwd = heightmap_observation(hf, 5.0, 5.0, 0.0).reshape(11, 9)
        back = heightmap_observation(hf, 5.0, 5.0, math.pi).reshape(11, 9)
        # offset 0 and +/-0.25, +/-0.5, +/-1 pairs appear in both samplings
        along = [-1.0, -0.5, -0.25, 0, 0.25, 0.5, 1.0, 1.5, 2.25, 3.0, 4.0]
        for i, a in enumerate(along):
            if -a in along:
                j = along.index(-a)
                assert back[i] == pytest.approx(fwd[j][::-1], abs=1e-9)


def test_csv_round_trip(tmp_path):
    _, hf = generate(TerrainSpec("MVT", seed=4, resolution=0.5))
    path = write_heightfield_csv(hf, tmp_path / "t.csv")
    back = read_heightfield_csv(path)
    assert back.resolution == 0.5 and back.arena == (60.0, 40.0)
    assert np.allclose(back.grid, hf.grid, atol=1e-9, rtol=0)
