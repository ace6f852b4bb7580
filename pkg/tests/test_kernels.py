from __future__ import annotations

import importlib
import os
import subprocess
import sys

import numpy as np
import pytest

from morphevo import _kernels_py, kernels

compiled = pytest.importorskip("morphevo._kernels")


def random_segments(n, seed):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, (n, 3)), rng.uniform(-1, 1, (n, 3))


class TestBackends:
    @pytest.mark.skipif(os.environ.get("MORPHEVO_PURE_PYTHON", "") not in ("", "0"),
                        reason="fallback forced by the environment")
    def test_compiled_is_default(self):
        assert kernels.BACKEND == "cython"

    def test_env_forces_fallback(self):
        env = dict(os.environ, MORPHEVO_PURE_PYTHON="1")
        out = subprocess.run(
            [sys.executable, "-c", "from morphevo import kernels; print(kernels.BACKEND)"],
            env=env, capture_output=True, text=True, check=True,
        )
        assert out.stdout.strip() == "python"

    def test_reload_with_env(self, monkeypatch):
        monkeypatch.setenv("MORPHEVO_PURE_PYTHON", "1")
        mod = importlib.reload(kernels)
        try:
            assert mod.BACKEND == "python"
            assert mod.segment_distance is _kernels_py.segment_distance
        finally:
            monkeypatch.delenv("MORPHEVO_PURE_PYTHON")
            importlib.reload(kernels)


class TestBitIdentity:
    def test_single_pairs(self):
        s, e = random_segments(2000, 1)
        for k in range(0, 2000, 2):
            args = (s[k], e[k], s[k + 1], e[k + 1])
            assert compiled.segment_distance(*args) == _kernels_py.segment_distance(*args)

    def test_batched(self):
        s, e = random_segments(300, 2)
        pairs = np.array([(i, j) for i in range(60) for j in range(i + 1, 60)], dtype=np.int64)
        a = compiled.pair_distances(s, e, pairs)
        b = _kernels_py.pair_distances(s, e, pairs)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize(
        "seg",
        [
            ((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)),  # parallel
            ((0, 0, 0), (0, 0, 0), (0, 0, 1), (0, 0, 1)),  # two points
            ((0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)),  # collinear, disjoint
            ((0, 0, 0), (1, 1, 1), (0, 0, 0), (1, 1, 1)),  # identical
            ((0, 0, 0.001953125), (2, 0, 0), (0.001953125, 0, 0.001953125), (2, 0, 0)),  # near-parallel
        ],
    )
    def test_degenerate_cases(self, seg):
        assert compiled.segment_distance(*seg) == _kernels_py.segment_distance(*seg)
