"""Compare the compiled segment-distance kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--pairs N] [--repeat R]

Both backends are imported directly, so the result does not depend on
``MORPHEVO_PURE_PYTHON``. Results are also checked for bit-identity.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from morphevo import _kernels_py

try:
    from morphevo import _kernels
except ImportError:  # extension not built
    _kernels = None


def workload(n_pairs: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    n_seg = max(2, int(np.ceil(np.sqrt(2 * n_pairs))) + 1)
    starts = rng.uniform(-1, 1, (n_seg, 3))
    ends = rng.uniform(-1, 1, (n_seg, 3))
    i, j = np.triu_indices(n_seg, k=1)
    pairs = np.stack([i, j], axis=1)[:n_pairs].astype(np.int64)
    return np.ascontiguousarray(starts), np.ascontiguousarray(ends), np.ascontiguousarray(pairs)


def bench(backend, starts, ends, pairs, repeat: int) -> tuple[float, float]:
    batched = min(timeit.repeat(lambda: backend.pair_distances(starts, ends, pairs), number=1, repeat=repeat))
    pts = [(tuple(starts[i]), tuple(ends[i]), tuple(starts[j]), tuple(ends[j])) for i, j in pairs[:2000]]

    def scalar():
        for a, b, c, d in pts:
            backend.segment_distance(a, b, c, d)

    single = min(timeit.repeat(scalar, number=1, repeat=repeat)) / len(pts)
    return batched, single


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    starts, ends, pairs = workload(args.pairs)
    print(f"{len(pairs)} segment pairs, best of {args.repeat}")
    py_batch, py_single = bench(_kernels_py, starts, ends, pairs, args.repeat)
    print(f"python  batched {py_batch * 1e3:9.2f} ms   per call {py_single * 1e6:7.2f} us")
    if _kernels is None:
        print("cython  not built; run `pip install -e . --no-build-isolation`")
        return
    cy_batch, cy_single = bench(_kernels, starts, ends, pairs, args.repeat)
    print(f"cython  batched {cy_batch * 1e3:9.2f} ms   per call {cy_single * 1e6:7.2f} us")
    print(f"speedup batched {py_batch / cy_batch:6.1f}x   per call {py_single / cy_single:6.1f}x")
    same = np.array_equal(_kernels.pair_distances(starts, ends, pairs), _kernels_py.pair_distances(starts, ends, pairs))
    print(f"bit-identical: {same}")


if __name__ == "__main__":
    main()
