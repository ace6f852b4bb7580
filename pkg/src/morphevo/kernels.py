"""Backend selection for the hot geometry kernels.

The compiled extension is used when it was built; otherwise, or when
``MORPHEVO_PURE_PYTHON=1`` is set, the pure-Python twin is used.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("MORPHEVO_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

segment_distance = _impl.segment_distance
pair_distances = _impl.pair_distances

__all__ = ["BACKEND", "segment_distance", "pair_distances"]
