"""Procedural terrain: flat arenas and obstacle courses rasterized to heightfields.

Variable terrain alternates flat runs with hills, steps, or rubble along +x;
the profile is constant along y. The arena spans ``[0, x_len] x [0, y_len]``
with grid nodes every ``resolution`` metres.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import (
    ARENAS,
    FLAT_LENGTH,
    HILL_AMPLITUDE,
    OBS_ACROSS,
    OBS_ALONG,
    OBSTACLE_LENGTH,
    RUBBLE_CLIP,
    RUBBLE_PEAK,
    RUBBLE_PERIOD,
    STEP_COUNT,
    STEP_HEIGHT,
    TERRAIN_RESOLUTION,
)

FLAT, HILLS, STEPS, RUBBLE = "Flat", "Hills", "Steps", "Rubble"
OBSTACLE_KINDS = (HILLS, STEPS, RUBBLE)


@dataclass(frozen=True)
class ObstacleSegment:
    """One run of terrain starting at ``start`` along +x.

    ``nominal_length`` is the sampled length; ``length`` is shorter only for
    the final segment when it is clipped at the arena edge (``truncated``).
    """

    kind: str
    start: float
    length: float
    nominal_length: float
    params: dict = field(default_factory=dict)
    truncated: bool = False

    def profile(self, local_x: np.ndarray) -> np.ndarray:
        x = np.asarray(local_x, dtype=np.float64)
        ell = self.nominal_length
        if self.kind == FLAT:
            return np.zeros_like(x)
        if self.kind == HILLS:
            return self.params["amplitude"] * np.sin(np.pi * np.clip(x, 0.0, ell) / ell)
        if self.kind == STEPS:
            n = self.params["n_steps"]
            i = np.clip(np.floor(x / (ell / n)).astype(int), 0, n - 1)
            half = n // 2
            level = np.where(i < half, i + 1, n - i)
            return self.params["step_height"] * level
        if self.kind == RUBBLE:
            period = self.params["period"]
            clips = np.asarray(self.params["clip_heights"])
            k = np.clip(np.floor(x / period).astype(int), 0, len(clips) - 1)
            u = x - k * period
            tri = self.params["peak"] * (1.0 - np.abs(2.0 * u / period - 1.0))
            return np.minimum(np.maximum(tri, 0.0), clips[k])
        raise ValueError(f"unknown segment kind {self.kind!r}")

    def risers(self) -> list[float]:
        """Signed height changes of a step sequence, in order (steps only)."""
        if self.kind != STEPS:
            return []
        n, h = self.params["n_steps"], self.params["step_height"]
        levels = [h * (i + 1) if i < n // 2 else h * (n - i) for i in range(n)]
        edges = [0.0] + levels + [0.0]
        return [b - a for a, b in zip(edges, edges[1:]) if b != a]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "start": self.start,
            "length": self.length,
            "nominal_length": self.nominal_length,
            "params": self.params,
            "truncated": self.truncated,
        }


@dataclass(frozen=True)
class TerrainSpec:
    env: str
    seed: int = 0
    resolution: float = TERRAIN_RESOLUTION

    def __post_init__(self):
        if self.env not in ARENAS:
            raise ValueError(f"unknown environment {self.env!r}")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")

    @property
    def arena(self) -> tuple[float, float]:
        return ARENAS[self.env]


@dataclass(frozen=True)
class Heightfield:
    resolution: float
    arena: tuple[float, float]
    grid: np.ndarray  # shape (ny, nx); grid[j, i] is the height at (i*res, j*res)

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.shape


def grid_shape(arena: tuple[float, float], resolution: float) -> tuple[int, int]:
    x_len, y_len = arena
    return int(round(y_len / resolution)) + 1, int(round(x_len / resolution)) + 1


def sample_segments(spec: TerrainSpec, rng: np.random.Generator) -> list[ObstacleSegment]:
    x_len = spec.arena[0]
    if spec.env == "FT":
        return [ObstacleSegment(FLAT, 0.0, x_len, x_len)]
    segments = []
    x = 0.0
    flat = True
    while x_len - x > 1e-9:
        if flat:
            kind = FLAT
            length = float(rng.uniform(*FLAT_LENGTH))
            params: dict = {}
        else:
            kind = OBSTACLE_KINDS[int(rng.integers(len(OBSTACLE_KINDS)))]
            length = float(rng.uniform(*OBSTACLE_LENGTH))
            if kind == HILLS:
                params = {"amplitude": float(rng.uniform(*HILL_AMPLITUDE))}
            elif kind == STEPS:
                params = {"n_steps": STEP_COUNT, "step_height": STEP_HEIGHT}
            else:
                bumps = math.ceil(length / RUBBLE_PERIOD)
                params = {
                    "period": RUBBLE_PERIOD,
                    "peak": RUBBLE_PEAK,
                    "clip_heights": [float(h) for h in rng.uniform(*RUBBLE_CLIP, size=bumps)],
                }
        remaining = x_len - x
        truncated = length > remaining
        extent = remaining if truncated else length
        segments.append(ObstacleSegment(kind, x, extent, length, params, truncated))
        x += extent
        flat = not flat
    return segments


def rasterize(segments: list[ObstacleSegment], arena, resolution: float) -> Heightfield:
    ny, nx = grid_shape(arena, resolution)
    xs = np.arange(nx) * resolution
    starts = np.array([s.start for s in segments])
    which = np.clip(np.searchsorted(starts, xs, side="right") - 1, 0, len(segments) - 1)
    profile = np.zeros(nx)
    for k, seg in enumerate(segments):
        mask = which == k
        if mask.any():
            profile[mask] = seg.profile(xs[mask] - seg.start)
    grid = np.broadcast_to(profile, (ny, nx))
    return Heightfield(resolution, tuple(arena), grid)


def generate(spec: TerrainSpec, rng: np.random.Generator | None = None):
    """Sample a segment sequence and its heightfield; pure in ``(spec, seed)``."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    segments = sample_segments(spec, rng)
    return segments, rasterize(segments, spec.arena, spec.resolution)


def incline(arena=(150.0, 40.0), degrees: float = 10.0, resolution: float = TERRAIN_RESOLUTION) -> Heightfield:
    """Static plane rising along +x, for incline-style test tasks."""
    ny, nx = grid_shape(arena, resolution)
    profile = np.arange(nx) * resolution * math.tan(math.radians(degrees))
    return Heightfield(resolution, tuple(arena), np.broadcast_to(profile, (ny, nx)))


def bowl(
    arena=(40.0, 40.0),
    depth: float = 1.5,
    bump_height: float = 0.3,
    bump_spacing: float = 2.0,
    seed: int = 0,
    resolution: float = TERRAIN_RESOLUTION,
) -> Heightfield:
    """Static bowl centred in the arena with seeded bumps, for escape-style tasks."""
    ny, nx = grid_shape(arena, resolution)
    rng = np.random.default_rng(seed)
    xs = np.arange(nx) * resolution - arena[0] / 2
    ys = np.arange(ny) * resolution - arena[1] / 2
    X, Y = np.meshgrid(xs, ys)
    r = np.hypot(X, Y) / (min(arena) / 2)
    base = depth * np.minimum(r, 1.0) ** 2
    phase = rng.uniform(0, 2 * np.pi, size=2)
    k = 2 * np.pi / bump_spacing
    bumps = bump_height * 0.25 * (1 + np.sin(k * X + phase[0])) * (1 + np.sin(k * Y + phase[1]))
    return Heightfield(resolution, tuple(arena), base + bumps)


def sample_height(hf: Heightfield, x, y):
    """Bilinear lookup; queries outside the arena clamp to the edge."""
    ny, nx = hf.grid.shape
    gx = np.clip(np.asarray(x, dtype=np.float64) / hf.resolution, 0.0, nx - 1)
    gy = np.clip(np.asarray(y, dtype=np.float64) / hf.resolution, 0.0, ny - 1)
    i0 = np.minimum(np.floor(gx).astype(int), max(nx - 2, 0))
    j0 = np.minimum(np.floor(gy).astype(int), max(ny - 2, 0))
    i1 = np.minimum(i0 + 1, nx - 1)
    j1 = np.minimum(j0 + 1, ny - 1)
    fx = gx - i0
    fy = gy - j0
    g = hf.grid
    top = g[j0, i0] * (1 - fx) + g[j0, i1] * fx
    bot = g[j1, i0] * (1 - fx) + g[j1, i1] * fx
    out = top * (1 - fy) + bot * fy
    return float(out) if np.ndim(out) == 0 else out


def observation_offsets() -> tuple[np.ndarray, np.ndarray]:
    """Heading-frame (along, lateral) offsets in output order.

    Rows run back to front, columns left (+lateral) to right.
    """
    along = np.asarray(OBS_ALONG)
    lateral = -np.asarray(OBS_ACROSS)  # +4 (left) first
    A, L = np.meshgrid(along, lateral, indexing="ij")
    return A.ravel(), L.ravel()


def heightmap_observation(
    hf: Heightfield,
    agent_x: float,
    agent_y: float,
    agent_heading: float,
    root_height: float | None = None,
) -> np.ndarray:
    """Terrain heights around the agent relative to the ground under its root.

    ``agent_heading`` is in radians from +x. ``root_height`` is the ground
    height under the root; it is looked up when omitted.
    """
    along, lateral = observation_offsets()
    c, s = math.cos(agent_heading), math.sin(agent_heading)
    wx = agent_x + along * c - lateral * s
    wy = agent_y + along * s + lateral * c
    ref = sample_height(hf, agent_x, agent_y) if root_height is None else root_height
    return np.asarray(sample_height(hf, wx, wy)) - ref


def write_heightfield_csv(hf: Heightfield, path) -> Path:
    path = Path(path)
    ny, nx = hf.grid.shape
    with path.open("w", newline="") as fh:
        fh.write(f"# resolution={hf.resolution!r}\n")
        fh.write(f"# arena={hf.arena[0]!r}x{hf.arena[1]!r}\n")
        fh.write(f"# shape={ny}x{nx}\n")
        np.savetxt(fh, hf.grid, fmt="%.10g", delimiter=",")
    return path


def read_heightfield_csv(path) -> Heightfield:
    meta = {}
    with Path(path).open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            meta[key] = value
    x_len, y_len = (float(v) for v in meta["arena"].split("x"))
    grid = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return Heightfield(float(meta["resolution"]), (x_len, y_len), grid)


def write_segments_json(segments: list[ObstacleSegment], path) -> Path:
    path = Path(path)
    path.write_text(json.dumps([s.to_dict() for s in segments], indent=1, sort_keys=True) + "\n")
    return path
